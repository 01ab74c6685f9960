"""Deterministic RNG stream derivation.

All stochastic components draw from numpy PCG64 generators.  Independent
streams are derived by hashing a master seed together with string/integer
tags, so results never depend on scheduling or execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "derive_rng"]


def derive_seed(master_seed: int, *tags) -> int:
    """Derive a 64-bit seed from a master seed and a tag tuple.

    The derivation is a SHA-256 hash of the canonical string rendering, so
    it is stable across platforms and Python versions.
    """
    text = repr(int(master_seed)) + "|" + "|".join(repr(t) for t in tags)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(master_seed: int, *tags) -> np.random.Generator:
    """Return a PCG64 generator seeded from ``derive_seed``."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *tags)))
