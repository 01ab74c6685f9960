"""Artifact loading with schema-version checks.

This package never imports the producing library; it reads only its
serialized CSV/JSON artifacts, so the expected schema strings are pinned
here and validated on load.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

EXPECTED_SCHEMAS = {
    "records": "vqnoise.v1.records",
    "cells": "vqnoise.v1.cells",
    "fits": "vqnoise.v1.fits",
    "decay": "vqnoise.v1.decay",
    "projection": "vqnoise.v1.projection",
    "profile": "vqnoise.v1.profile",
}


class SchemaError(ValueError):
    """Raised when an artifact does not carry the expected schema version."""

    def __init__(self, expected, found, path):
        super().__init__(f"{path}: expected schema {expected!r}, found {found!r}")
        self.expected = expected
        self.found = found


def _check(kind: str, found: str, path) -> None:
    expected = EXPECTED_SCHEMAS[kind]
    if found != expected:
        raise SchemaError(expected, found, path)


def load_schema_csv(path, kind: str) -> list[dict]:
    """Read a `# schema=` prefixed CSV into dicts with numeric coercion."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise SchemaError(EXPECTED_SCHEMAS[kind], first, path)
        _check(kind, first[len("# schema=") :], path)
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            out = {}
            for key, value in row.items():
                try:
                    out[key] = int(value)
                except (TypeError, ValueError):
                    try:
                        out[key] = float(value)
                    except (TypeError, ValueError):
                        out[key] = value
            rows.append(out)
    return rows


def load_plain_csv(path) -> list[dict]:
    """Read an unversioned helper CSV (variance table, fs-error curves)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for row in reader:
            out = {}
            for key, value in row.items():
                try:
                    out[key] = int(value)
                except (TypeError, ValueError):
                    try:
                        out[key] = float(value)
                    except (TypeError, ValueError):
                        out[key] = value
            rows.append(out)
    return rows


def load_schema_json(path, kind: str) -> dict:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    _check(kind, data.get("schema"), path)
    return data


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
