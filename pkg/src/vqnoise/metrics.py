"""Solution-quality metrics and solvability statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateProblemError
from .problems import IsingModel, brute_force_solve, cmax_bound, energy_table, ising_energy

__all__ = [
    "SolvabilityStat",
    "THRESHOLD_TOL",
    "DEFAULT_THRESHOLDS",
    "approximation_ratio",
    "most_probable_state",
    "approximation_index",
    "solvability",
]

# A quality ratio counts as meeting t = 1 when it is within this distance
# of 1, so exact optima are not rejected by float rounding.
THRESHOLD_TOL = 1e-12

DEFAULT_THRESHOLDS = (1.0, 0.99, 0.95)


@dataclass(frozen=True)
class SolvabilityStat:
    """Binomial success estimate over a set of runs."""

    t: float
    p_hat: float
    std_err: float
    n_runs: int


def approximation_ratio(bits: str, m: IsingModel, c_min: float | None = None) -> float:
    """Quality of a candidate bitstring, rescaled to [0, 1].

    Uses the analytic energy bound as the upper reference and the exact
    enumerated minimum as the lower one:

        ratio = (E(bits) - C_max) / (C_min - C_max).

    ``c_min`` may be passed in to avoid re-enumerating the model.
    """
    c_max = cmax_bound(m)
    if c_min is None:
        c_min = brute_force_solve(m).c_min
    if c_min == c_max:
        raise DegenerateProblemError("C_min equals C_max; ratio undefined")
    return (ising_energy(m, bits) - c_max) / (c_min - c_max)


def normalized_approximation_ratio(bits: str, m: IsingModel, c_min: float | None = None) -> float:
    """Variant using the mean basis energy (totally mixed state) as upper reference.

    Off by default in all pipelines; exposed for feasibility-aware studies
    of penalty-dominated problems.
    """
    table = energy_table(m)
    c_mean = float(table.mean())
    if c_min is None:
        c_min = float(table.min())
    if c_min == c_mean:
        raise DegenerateProblemError("C_min equals the mean energy; ratio undefined")
    return (ising_energy(m, bits) - c_mean) / (c_min - c_mean)


def most_probable_state(dist: dict[str, float]) -> str:
    """Argmax bitstring of a probability map; ties break to the lowest value."""
    if not dist:
        raise ValueError("empty distribution")
    best = None
    best_p = -math.inf
    for bits in sorted(dist, key=lambda b: int(b, 2)):
        p = dist[bits]
        if p > best_p:
            best, best_p = bits, p
    return best


def approximation_index(bits: str, m: IsingModel, t: float, c_min: float | None = None) -> int:
    """1 if the candidate's quality ratio reaches threshold ``t``, else 0."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {t}")
    ratio = approximation_ratio(bits, m, c_min=c_min)
    cut = 1.0 - THRESHOLD_TOL if t >= 1.0 else t
    return int(ratio >= cut)


def index_from_ratio(ratio: float, t: float) -> int:
    """Threshold test for a precomputed quality ratio."""
    cut = 1.0 - THRESHOLD_TOL if t >= 1.0 else t
    return int(ratio >= cut)


def solvability(successes, t: float = math.nan) -> SolvabilityStat:
    """Fraction of successful runs with its binomial standard error."""
    arr = np.asarray(list(successes), dtype=float)
    n = arr.size
    if n < 1:
        raise ValueError("need at least one run")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValueError("successes must be 0/1 indicators")
    p = float(arr.mean())
    return SolvabilityStat(t=t, p_hat=p, std_err=math.sqrt(p * (1.0 - p) / n), n_runs=n)
