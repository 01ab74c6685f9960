"""Noise channels over exact losses, plus finite-sampling error analysis.

Two stochastic channels wrap the normalized loss:

* ``gaussian(sigma)`` adds one zero-mean normal draw per evaluation.  The
  perturbed value is deliberately NOT clipped to [-1, 1]; the channel
  models an unbounded effective error.
* ``shots(n)`` simulates finite measurement sampling.  The two
  global-measurement kinds estimate ``sum_q (count_q / n) * E_q``; the
  block-encoded kind draws the ancilla outcome from a binomial and maps
  the estimated expectation back through ``K * arcsin``.

Every noisy evaluation consumes exactly one draw from the generator it is
handed, so a run's results depend only on its own stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateProblemError
from .losses import (
    LossFunction,
    candidate_probabilities,
    expectation_u,
    normalized_loss,
)

__all__ = [
    "NoiseSpec",
    "ErrorProfile",
    "FsErrorScan",
    "noisy_loss",
    "rae",
    "fs_error_scan",
    "error_decomposition",
]

NOISE_KINDS = ("none", "gaussian", "shots")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise channel configuration.

    ``kind`` is one of ``none``, ``gaussian`` (with ``sigma >= 0``) or
    ``shots`` (with ``n_shots >= 1``).
    """

    kind: str = "none"
    sigma: float = 0.0
    n_shots: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "gaussian" and self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.kind == "shots" and self.n_shots < 1:
            raise ValueError("n_shots must be at least 1")

    @classmethod
    def none(cls):
        return cls(kind="none")

    @classmethod
    def gaussian(cls, sigma):
        return cls(kind="gaussian", sigma=float(sigma))

    @classmethod
    def shots(cls, n_shots):
        return cls(kind="shots", n_shots=int(n_shots))

    def label(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "gaussian":
            return f"gaussian:{self.sigma!r}"
        return f"shots:{self.n_shots}"


@dataclass(frozen=True)
class ErrorProfile:
    """Per-point sampling-error spread and its dependence on the loss value."""

    n_shots: int
    samples_per_point: int
    point_abs_loss: np.ndarray = field(repr=False)
    point_error_std: np.ndarray = field(repr=False)
    slope: float = 0.0
    intercept: float = 0.0
    hist_edges: np.ndarray = field(default=None, repr=False)
    hist_density: np.ndarray = field(default=None, repr=False)
    overlay_std: float = 0.0
    err_mean: float = 0.0
    err_skewness: float = 0.0


@dataclass(frozen=True)
class FsErrorScan:
    """Relative-absolute-error curves against shot count and system size."""

    kind: str
    fixed_n: int
    fixed_shots: int
    shots_grid: np.ndarray
    rae_vs_shots: np.ndarray
    n_grid: np.ndarray
    rae_vs_n: np.ndarray
    loglog_slope: float
    loglog_amp: float
    exp_rate: float
    exp_amp: float
    anchor_rae: float
    model_amp: float


def shot_estimate(
    f: LossFunction, theta, n_shots: int, rng: np.random.Generator, events: dict | None = None
) -> float:
    """One finite-sampling estimate of the normalized loss.

    The ancilla estimate is clamped into the arcsine domain before the
    inverse map; with the single-batch binomial estimator used here the
    clamp cannot fire (the estimate is a proportion), but the event is
    still counted in ``events`` as a guard.
    """
    scale = f.l_max if f.l_max > 0.0 else 1.0
    if f.kind == "benqo":
        u = expectation_u(f, theta)
        p0 = (1.0 + u) / 2.0
        k0 = rng.binomial(n_shots, p0)
        if f.l_max == 0.0:
            return 0.0  # cost operator vanishes; the readout carries no signal
        u_hat = 2.0 * k0 / n_shots - 1.0
        if abs(u_hat) > 1.0:
            if events is not None:
                events["ancilla_clamped"] = events.get("ancilla_clamped", 0) + 1
            u_hat = min(1.0, max(-1.0, u_hat))
        return float(f.k_scale * np.arcsin(u_hat)) / scale
    probs = candidate_probabilities(f, theta)
    counts = rng.multinomial(n_shots, probs / probs.sum())
    return float((counts / n_shots) @ f.table) / scale


def noisy_loss(
    f: LossFunction, theta, spec: NoiseSpec, rng: np.random.Generator, events: dict | None = None
) -> float:
    """Evaluate the normalized loss through the configured channel."""
    if spec.kind == "none":
        return normalized_loss(f, theta)
    if spec.kind == "gaussian":
        return normalized_loss(f, theta) + float(rng.normal(0.0, spec.sigma))
    return shot_estimate(f, theta, spec.n_shots, rng, events=events)


def rae(exact, noisy) -> float:
    """Relative absolute error of paired loss evaluations.

    Mean absolute error normalized by the mean absolute deviation of the
    exact values, which makes the measure invariant under affine
    rescaling of the landscape.
    """
    exact = np.asarray(exact, dtype=float)
    noisy = np.asarray(noisy, dtype=float)
    if exact.shape != noisy.shape or exact.ndim != 1:
        raise ValueError("need two equal-length 1-d sequences")
    if exact.size < 2:
        raise ValueError("need at least two paired values")
    denom = np.abs(exact - exact.mean()).sum()
    if denom == 0.0:
        raise DegenerateProblemError("exact values have no spread; relative error undefined")
    return float(np.abs(noisy - exact).sum() / denom)


def _rae_at(f: LossFunction, shots, n_points, rng, exact_path=False):
    lo, hi = -2.0 * np.pi, 2.0 * np.pi
    thetas = rng.uniform(lo, hi, size=(n_points, f.n_params))
    exact = np.array([normalized_loss(f, t) for t in thetas])
    if exact_path:
        return rae(exact, exact.copy())
    noisy = np.array([shot_estimate(f, t, shots, rng) for t in thetas])
    return rae(exact, noisy)


def fs_error_scan(
    loss_builder,
    shots_grid,
    n_grid,
    samples_per_point: int,
    rng: np.random.Generator,
    fixed_n: int = 10,
    fixed_shots: int = 1024,
    exp_fit_min_n: int = 6,
    exact_path: bool = False,
) -> FsErrorScan:
    """Finite-sampling error curves and their fitted scaling laws.

    ``loss_builder`` maps a system size to a loss descriptor.  The scan
    measures the relative absolute error against the shot count at
    ``fixed_n`` (power-law fit in log-log space) and against the system
    size at ``fixed_shots`` (exponential fit restricted to
    ``n >= exp_fit_min_n`` to suppress small-size effects).  The combined
    model ``A * exp(rate * n) / sqrt(shots)`` is anchored at the measured
    error at ``(fixed_n, fixed_shots)``.
    """
    shots_grid = np.asarray(list(shots_grid), dtype=int)
    n_grid = np.asarray(list(n_grid), dtype=int)
    if shots_grid.size == 0 or n_grid.size == 0:
        raise ValueError("grids must be nonempty")

    f_fixed = loss_builder(fixed_n)
    rae_shots = np.array(
        [_rae_at(f_fixed, int(s), samples_per_point, rng, exact_path) for s in shots_grid]
    )
    rae_n = np.empty(n_grid.size)
    for i, n in enumerate(n_grid):
        rae_n[i] = _rae_at(loss_builder(int(n)), fixed_shots, samples_per_point, rng, exact_path)

    if exact_path or np.any(rae_shots <= 0.0) or np.any(rae_n <= 0.0):
        slope = amp = rate = eamp = 0.0
    else:
        if shots_grid.size >= 2:
            slope, log_amp = np.polyfit(np.log(shots_grid), np.log(rae_shots), 1)
            amp = float(np.exp(log_amp))
        else:
            slope, amp = 0.0, float(rae_shots[0])
        mask = n_grid >= exp_fit_min_n
        if mask.sum() >= 2:
            rate, log_eamp = np.polyfit(n_grid[mask], np.log(rae_n[mask]), 1)
            eamp = float(np.exp(log_eamp))
        else:
            rate, eamp = 0.0, float(rae_n[-1])

    anchor = _rae_at(f_fixed, fixed_shots, samples_per_point, rng, exact_path)
    model_amp = (
        anchor * np.sqrt(fixed_shots) / np.exp(rate * fixed_n) if not exact_path else 0.0
    )
    return FsErrorScan(
        kind=f_fixed.kind,
        fixed_n=fixed_n,
        fixed_shots=fixed_shots,
        shots_grid=shots_grid,
        rae_vs_shots=rae_shots,
        n_grid=n_grid,
        rae_vs_n=rae_n,
        loglog_slope=float(slope),
        loglog_amp=float(amp),
        exp_rate=float(rate),
        exp_amp=float(eamp),
        anchor_rae=float(anchor),
        model_amp=float(model_amp),
    )


def error_decomposition(
    f: LossFunction,
    n_points: int,
    samples_per_point: int,
    n_shots: int,
    rng: np.random.Generator,
    hist_bins: int = 40,
) -> ErrorProfile:
    """Characterize the sampling error across the landscape.

    At each of ``n_points`` random parameter vectors the loss is sampled
    ``samples_per_point`` times; the per-point error spread is regressed
    linearly against the absolute loss value.  A dominant intercept means
    the error acts additively, a dominant slope multiplicatively.  The
    error histogram at the first point is returned with a matched-spread
    normal overlay.
    """
    if n_points < 10:
        raise ValueError("need at least 10 evaluation points")
    if samples_per_point < 100:
        raise ValueError("need at least 100 samples per point")
    lo, hi = -2.0 * np.pi, 2.0 * np.pi
    thetas = rng.uniform(lo, hi, size=(n_points, f.n_params))
    abs_losses = np.empty(n_points)
    stds = np.empty(n_points)
    first_errors = None
    for j, theta in enumerate(thetas):
        exact = normalized_loss(f, theta)
        draws = np.array(
            [shot_estimate(f, theta, n_shots, rng) for _ in range(samples_per_point)]
        )
        errors = draws - exact
        abs_losses[j] = abs(exact)
        stds[j] = errors.std(ddof=1)
        if j == 0:
            first_errors = errors
    if np.all(stds == 0.0) or np.ptp(abs_losses) == 0.0:
        slope, intercept = 0.0, float(stds.mean())
    else:
        slope, intercept = np.polyfit(abs_losses, stds, 1)
    density, edges = np.histogram(first_errors, bins=hist_bins, density=True)
    e_std = float(first_errors.std(ddof=1))
    if e_std > 0.0:
        skew = float(np.mean(((first_errors - first_errors.mean()) / e_std) ** 3))
    else:
        skew = 0.0
    return ErrorProfile(
        n_shots=n_shots,
        samples_per_point=samples_per_point,
        point_abs_loss=abs_losses,
        point_error_std=stds,
        slope=float(slope),
        intercept=float(intercept),
        hist_edges=edges,
        hist_density=density,
        overlay_std=e_std,
        err_mean=float(first_errors.mean()),
        err_skewness=skew,
    )
