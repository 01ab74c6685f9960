"""Experiment configuration: typed key-value files or JSON.

The native format is an INI-style file with typed sections::

    [experiment]
    master_seed = 2024
    loss = benqo
    n_grid = 3-10              ; or a comma list: 3, 4, 6
    instances = 100
    thresholds = 1.0, 0.99, 0.95
    output = out

    [noise]
    include_noiseless = true
    gaussian = logspace:1e-3,1e1,16    ; or a comma list of levels
    ; shots = 64, 256, 1024

    [optimizer.ngd]
    k_max = 20

    [optimizer.nft]
    max_evals = 1024

A JSON file with the same structure (sections as objects, an
``optimizers`` object keyed by name) is accepted interchangeably.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .losses import KINDS
from .noise import NoiseSpec
from .optimizers import OPTIMIZER_KINDS, OptimizerSpec

__all__ = ["ExperimentConfig", "default_config", "load_config", "parse_config_text"]

SCHEMA_VERSION = "vqnoise.v1"


@dataclass
class ExperimentConfig:
    master_seed: int = 2024
    loss_kind: str = "benqo"
    n_grid: list[int] = field(default_factory=lambda: list(range(3, 11)))
    instances: int = 100
    thresholds: list[float] = field(default_factory=lambda: [1.0, 0.99, 0.95])
    noise_grid: list[NoiseSpec] = field(default_factory=list)
    optimizers: list[OptimizerSpec] = field(default_factory=list)
    output_dir: str = "out"

    def __post_init__(self):
        if self.loss_kind not in KINDS:
            raise ConfigError(f"unknown loss kind {self.loss_kind!r}")
        if not self.n_grid:
            raise ConfigError("n_grid must be nonempty")
        if self.instances < 1:
            raise ConfigError("instances must be at least 1")
        if not self.thresholds:
            raise ConfigError("thresholds must be nonempty")
        for t in self.thresholds:
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"threshold {t} outside [0, 1]")
        self.thresholds = sorted(set(self.thresholds), reverse=True)
        if not self.noise_grid:
            self.noise_grid = default_noise_grid()
        if not self.optimizers:
            self.optimizers = [OptimizerSpec("ngd")]

    def echo(self) -> dict:
        """JSON-ready rendering for reproducibility manifests."""
        return {
            "schema": SCHEMA_VERSION,
            "master_seed": self.master_seed,
            "loss": self.loss_kind,
            "n_grid": list(self.n_grid),
            "instances": self.instances,
            "thresholds": list(self.thresholds),
            "noise": [spec.label() for spec in self.noise_grid],
            "optimizers": [
                {"kind": o.kind, "plugin": o.plugin_name, "options": dict(o.options)}
                for o in self.optimizers
            ],
            "output": self.output_dir,
        }


def default_noise_grid(points: int = 16) -> list[NoiseSpec]:
    """The default grid: a noiseless column plus log-spaced noise levels."""
    grid = [NoiseSpec.none()]
    grid.extend(NoiseSpec.gaussian(s) for s in np.logspace(-3.0, 1.0, points))
    return grid


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def _parse_scalar(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _parse_int_grid(text: str) -> list[int]:
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_float_list(text: str) -> list[float]:
    text = text.strip()
    if text.startswith("logspace:"):
        args = text[len("logspace:") :].split(",")
        if len(args) != 3:
            raise ConfigError("logspace takes three arguments: lo,hi,count")
        lo, hi, count = float(args[0]), float(args[1]), int(args[2])
        return [float(v) for v in np.logspace(np.log10(lo), np.log10(hi), count)]
    return [float(tok) for tok in text.split(",") if tok.strip()]


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the typed key-value format (see module docstring)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return _build_config(sections)


def _build_config(sections: dict) -> ExperimentConfig:
    exp = dict(sections.get("experiment", {}))
    noise_sec = dict(sections.get("noise", {}))

    kwargs = {}
    if "master_seed" in exp:
        kwargs["master_seed"] = int(exp.pop("master_seed"))
    if "loss" in exp:
        kwargs["loss_kind"] = str(exp.pop("loss"))
    if "n_grid" in exp:
        raw = exp.pop("n_grid")
        kwargs["n_grid"] = _parse_int_grid(raw) if isinstance(raw, str) else [int(v) for v in raw]
    if "instances" in exp:
        kwargs["instances"] = int(exp.pop("instances"))
    if "thresholds" in exp:
        raw = exp.pop("thresholds")
        kwargs["thresholds"] = (
            _parse_float_list(raw) if isinstance(raw, str) else [float(v) for v in raw]
        )
    if "output" in exp:
        kwargs["output_dir"] = str(exp.pop("output"))
    if exp:
        raise ConfigError(f"unknown experiment keys: {sorted(exp)}")

    noise_grid: list[NoiseSpec] = []
    include_noiseless = noise_sec.pop("include_noiseless", True)
    if isinstance(include_noiseless, str):
        include_noiseless = _parse_scalar(include_noiseless) is True
    if include_noiseless:
        noise_grid.append(NoiseSpec.none())
    if "gaussian" in noise_sec:
        raw = noise_sec.pop("gaussian")
        levels = _parse_float_list(raw) if isinstance(raw, str) else [float(v) for v in raw]
        noise_grid.extend(NoiseSpec.gaussian(s) for s in levels)
    if "shots" in noise_sec:
        raw = noise_sec.pop("shots")
        shots = _parse_int_grid(raw) if isinstance(raw, str) else [int(v) for v in raw]
        noise_grid.extend(NoiseSpec.shots(s) for s in shots)
    if noise_sec:
        raise ConfigError(f"unknown noise keys: {sorted(noise_sec)}")
    if noise_grid:
        kwargs["noise_grid"] = noise_grid

    optimizers: list[OptimizerSpec] = []
    for name, opts in sections.items():
        if not name.startswith("optimizer."):
            continue
        kind = name[len("optimizer.") :]
        options = {k: _parse_scalar(v) if isinstance(v, str) else v for k, v in opts.items()}
        if kind in OPTIMIZER_KINDS and kind != "plugin":
            optimizers.append(OptimizerSpec(kind, options))
        else:
            optimizers.append(OptimizerSpec("plugin", options, plugin_name=kind))
    if optimizers:
        kwargs["optimizers"] = optimizers
    return ExperimentConfig(**kwargs)


def load_config(path: str) -> ExperimentConfig:
    """Load a config file; JSON when the suffix is .json, typed text otherwise."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc.msg} (line {exc.lineno})") from None
        sections = {}
        if "experiment" in data:
            sections["experiment"] = data["experiment"]
        if "noise" in data:
            sections["noise"] = data["noise"]
        for name, opts in data.get("optimizers", {}).items():
            sections[f"optimizer.{name}"] = opts
        return _build_config(sections)
    return parse_config_text(text)
