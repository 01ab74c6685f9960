"""Classical optimizer suite with uniform call accounting.

Every optimizer consumes a counting oracle and returns an :class:`OptRun`
whose ``n_calls`` is the exact number of loss evaluations, with gradient
queries expanded into their underlying evaluations (one two-point shift
per parameter, i.e. ``2n`` calls per gradient).

Budget conventions:

* normalized gradient descent runs exactly ``k_max`` iterations at
  ``(2n + 1)`` calls each (one tracked loss value plus one gradient);
* the simultaneous-perturbation method spends a fixed calibration budget
  and then two calls per iteration;
* the sinusoid coordinate descent spends one initial call plus ``2n``
  calls per sweep;
* the direction-set method stops when its call budget or relative
  tolerance is reached, never exceeding the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _sciopt

from .exceptions import ConfigError
from .losses import LossFunction
from .noise import NoiseSpec, noisy_loss

__all__ = [
    "OptimizerSpec",
    "OptRun",
    "FunctionOracle",
    "NoisyLossOracle",
    "init_params",
    "run_ngd",
    "run_spsa",
    "run_nft",
    "run_powell",
    "run",
    "register_optimizer",
    "OPTIMIZER_KINDS",
]

OPTIMIZER_KINDS = ("ngd", "spsa", "nft", "powell", "plugin")

_ZERO_NORM = 1e-300
_DEGENERATE_AMPLITUDE = 1e-12


@dataclass(frozen=True)
class OptimizerSpec:
    """Optimizer kind plus hyperparameters; unset options use defaults."""

    kind: str
    options: dict = field(default_factory=dict)
    plugin_name: str = ""

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ConfigError(f"unknown optimizer kind {self.kind!r}")
        if self.kind == "ngd" and int(self.options.get("k_max", 20)) < 1:
            raise ConfigError("k_max must be at least 1")

    def label(self) -> str:
        return self.plugin_name if self.kind == "plugin" else self.kind


@dataclass
class OptRun:
    """Outcome of one optimization run."""

    theta_final: np.ndarray
    best_loss: float
    n_calls: int
    trajectory: list[tuple[int, float]]
    events: dict = field(default_factory=dict)


class _BudgetExhausted(Exception):
    pass


class FunctionOracle:
    """Counting wrapper around a plain loss callable (for proxy problems)."""

    def __init__(self, fn, n_params: int, rng: np.random.Generator | None = None):
        self._fn = fn
        self.n_params = n_params
        self.n_calls = 0
        self.rng = rng
        self.events: dict = {}

    def loss(self, theta) -> float:
        self.n_calls += 1
        return float(self._fn(np.asarray(theta, dtype=float)))

    def gradient(self, theta, center: float | None = None) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        grad = np.empty(self.n_params)
        for i in range(self.n_params):
            shifted = theta.copy()
            shifted[i] = theta[i] + np.pi / 2.0
            plus = self.loss(shifted)
            shifted[i] = theta[i] - np.pi / 2.0
            minus = self.loss(shifted)
            grad[i] = (plus - minus) / 2.0
        return grad

    def to_sinusoid(self, value: float) -> float:
        return value

    def from_sinusoid(self, value: float) -> float:
        return value


class NoisyLossOracle:
    """Counting oracle binding a loss function, a noise channel and a stream.

    Gradients use the two-point rule with shifts of pi/2.  For the
    block-encoded kind the rule is applied to the inner sinusoidal
    expectation (recovered from returned values via ``sin(pi/2 * v)``)
    and chained through the arcsine, since the outer loss is not
    shift-exact.  The same transform pair makes coordinate values exactly
    sinusoidal for the sinusoid-fit optimizer.
    """

    def __init__(self, f: LossFunction, spec: NoiseSpec, rng: np.random.Generator):
        self.f = f
        self.spec = spec
        self.rng = rng
        self.n_params = f.n_params
        self.n_calls = 0
        self.events: dict = {}

    def loss(self, theta) -> float:
        self.n_calls += 1
        return noisy_loss(self.f, theta, self.spec, self.rng, events=self.events)

    def gradient(self, theta, center: float | None = None) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        chained = self.f.kind == "benqo"
        if chained and center is None:
            center = self.loss(theta)
        plus = np.empty(self.n_params)
        minus = np.empty(self.n_params)
        for i in range(self.n_params):
            shifted = theta.copy()
            shifted[i] = theta[i] + np.pi / 2.0
            plus[i] = self.loss(shifted)
            shifted[i] = theta[i] - np.pi / 2.0
            minus[i] = self.loss(shifted)
        if not chained:
            return (plus - minus) / 2.0
        u0 = math.sin(math.pi / 2.0 * center)
        du = (np.sin(np.pi / 2.0 * plus) - np.sin(np.pi / 2.0 * minus)) / 2.0
        denom = math.sqrt(max(1.0 - u0 * u0, 1e-12))
        return (2.0 / math.pi) * du / denom

    def to_sinusoid(self, value: float) -> float:
        if self.f.kind == "benqo":
            return math.sin(math.pi / 2.0 * value)
        return value

    def from_sinusoid(self, value: float) -> float:
        if self.f.kind == "benqo":
            return (2.0 / math.pi) * math.asin(min(1.0, max(-1.0, value)))
        return value


def init_params(n: int, rng: np.random.Generator) -> np.ndarray:
    """Starting parameters: n independent standard normal draws."""
    if n < 1:
        raise ValueError("n must be positive")
    return rng.standard_normal(n)


def run_ngd(oracle, theta0, k_max: int = 20) -> OptRun:
    """Normalized gradient descent with a squared-exponential step decay.

    Iteration k (zero-based) steps by ``sqrt(pi * n / 2) *
    exp(-4 k^2 / k_max^2)`` along the negative normalized gradient.  A
    vanishing gradient holds the position for that iteration and is
    recorded as an event.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    theta = np.array(theta0, dtype=float)
    n = theta.size
    start_calls = oracle.n_calls
    base_step = math.sqrt(math.pi * n / 2.0)
    trajectory = []
    held = 0
    for k in range(k_max):
        value = oracle.loss(theta)
        trajectory.append((k, value))
        grad = oracle.gradient(theta, center=value)
        norm = float(np.linalg.norm(grad))
        if norm < _ZERO_NORM:
            held += 1
            continue
        step = base_step * math.exp(-4.0 * k * k / (k_max * k_max))
        theta = theta - step * grad / norm
    events = {}
    if held:
        events["zero_gradient_holds"] = held
    return _finish(theta, trajectory, oracle, events, start_calls=start_calls)


def run_spsa(
    oracle,
    theta0,
    budget: int = 225,
    rng: np.random.Generator | None = None,
    target_first_step: float = 0.1,
    calibration_evals: int = 25,
) -> OptRun:
    """Two-measurement simultaneous perturbation with gain calibration.

    Gains follow ``a_k = a / (k + 1 + A)**0.602`` and
    ``c_k = c / (k + 1)**0.101``.  The calibration phase estimates the
    noise scale from repeated evaluations at the start point (setting
    ``c``) and the typical perturbation response (setting ``a`` so the
    first update has the target magnitude).  Total calls never exceed
    ``budget``; iterations consume two calls each.
    """
    if budget < 3:
        raise ValueError("budget must be at least 3")
    if rng is None:
        rng = getattr(oracle, "rng", None) or np.random.default_rng()
    theta = np.array(theta0, dtype=float)
    n = theta.size
    start_calls = oracle.n_calls

    calibration = min(calibration_evals, max(1, budget - 2))
    n_center = (calibration + 1) // 2
    n_pairs = (calibration - n_center) // 2
    n_center = calibration - 2 * n_pairs
    center_vals = np.array([oracle.loss(theta) for _ in range(n_center)])
    noise_scale = float(center_vals.std(ddof=1)) if n_center > 1 else 0.0
    c = max(noise_scale, 0.01)

    responses = []
    for _ in range(n_pairs):
        delta = rng.integers(0, 2, size=n) * 2.0 - 1.0
        lp = oracle.loss(theta + c * delta)
        lm = oracle.loss(theta - c * delta)
        responses.append(abs(lp - lm) / (2.0 * c))
    grad_mag = float(np.mean(responses)) if responses else 0.0

    iterations = max(0, (budget - calibration) // 2)
    big_a = 0.1 * iterations
    if grad_mag > 0.0:
        a = target_first_step * (1.0 + big_a) ** 0.602 / (grad_mag * math.sqrt(n))
    else:
        a = target_first_step

    trajectory = [(0, float(center_vals.mean()))]
    for k in range(iterations):
        a_k = a / (k + 1.0 + big_a) ** 0.602
        c_k = c / (k + 1.0) ** 0.101
        delta = rng.integers(0, 2, size=n) * 2.0 - 1.0
        lp = oracle.loss(theta + c_k * delta)
        lm = oracle.loss(theta - c_k * delta)
        ghat = (lp - lm) / (2.0 * c_k) * delta
        theta = theta - a_k * ghat
        trajectory.append((k + 1, (lp + lm) / 2.0))
    return _finish(
        theta, trajectory, oracle, {"calibration_evals": calibration}, start_calls=start_calls
    )


def run_nft(oracle, theta0, sweeps: int = 8) -> OptRun:
    """Cyclic coordinate descent by exact sinusoid reconstruction.

    Assumes each coordinate dependence has the form ``v0 + b cos(t - phi)``
    (after the oracle's sinusoid transform, where applicable).  Each
    update reuses the current value, adds two evaluations at shifts of
    +-pi/2, and jumps to the analytic minimizer.  Near-zero reconstructed
    amplitude leaves the coordinate unchanged.
    """
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    theta = np.array(theta0, dtype=float)
    n = theta.size
    start_calls = oracle.n_calls
    current = oracle.loss(theta)
    trajectory = [(0, current)]
    degenerate = 0
    step = 0
    for _ in range(sweeps):
        for i in range(n):
            shifted = theta.copy()
            shifted[i] = theta[i] + np.pi / 2.0
            z_plus = oracle.loss(shifted)
            shifted[i] = theta[i] - np.pi / 2.0
            z_minus = oracle.loss(shifted)
            y0 = oracle.to_sinusoid(current)
            y_plus = oracle.to_sinusoid(z_plus)
            y_minus = oracle.to_sinusoid(z_minus)
            mean = (y_plus + y_minus) / 2.0
            cos_part = y0 - mean
            sin_part = (y_minus - y_plus) / 2.0
            amplitude = math.hypot(cos_part, sin_part)
            step += 1
            if amplitude < _DEGENERATE_AMPLITUDE:
                degenerate += 1
                trajectory.append((step, current))
                continue
            shift = math.pi - math.atan2(sin_part, cos_part)
            if shift > math.pi:
                shift -= 2.0 * math.pi
            theta[i] += shift
            current = oracle.from_sinusoid(mean - amplitude)
            trajectory.append((step, current))
    events = {}
    if degenerate:
        events["degenerate_coordinates"] = degenerate
    return _finish(theta, trajectory, oracle, events, start_calls=start_calls)


def _line_minimum(fn, x, direction, budget_guard):
    """Bracket and Brent-minimize along one direction; returns (x, f, moved)."""

    def phi(alpha):
        budget_guard()
        return fn(x + alpha * direction)

    try:
        xa, xb, xc, fa, fb, fc, _ = _sciopt.bracket(phi, xa=0.0, xb=1.0, maxiter=60)
    except _BudgetExhausted:
        raise
    except Exception:
        return x, None, np.zeros_like(x)
    alpha, fval, _, _ = _sciopt.brent(phi, brack=(xa, xb, xc), tol=1e-10, full_output=True)
    return x + alpha * direction, float(fval), alpha * direction


def run_powell(oracle, theta0, budget: int = 1000, tol: float = 1e-6, max_cycles: int = 200) -> OptRun:
    """Direction-set minimization with bracketed Brent line searches.

    Runs full cycles over the direction set, replacing the direction of
    largest decrease with the cycle displacement when the classic
    extrapolation test accepts it.  Stops on the relative-decrease
    tolerance, on ``max_cycles``, or as soon as the call budget is
    reached; ``n_calls`` never exceeds ``budget``.
    """
    theta = np.array(theta0, dtype=float)
    n = theta.size
    if budget < n + 1:
        raise ValueError(f"budget must be at least n + 1 = {n + 1}")
    start_calls = oracle.n_calls

    def guard():
        if oracle.n_calls - start_calls >= budget:
            raise _BudgetExhausted

    def fn(x):
        return oracle.loss(x)

    directions = [np.eye(n)[i] for i in range(n)]
    trajectory = []
    cycles = 0
    try:
        guard()
        fx = fn(theta)
        trajectory.append((0, fx))
        for cycle in range(1, max_cycles + 1):
            cycles = cycle
            f_start = fx
            x_start = theta.copy()
            biggest_drop = 0.0
            drop_index = 0
            for i, d in enumerate(directions):
                f_before = fx
                new_x, new_f, _ = _line_minimum(fn, theta, d, guard)
                if new_f is not None and new_f < fx:
                    theta, fx = new_x, new_f
                if f_before - fx > biggest_drop:
                    biggest_drop = f_before - fx
                    drop_index = i
            trajectory.append((cycle, fx))
            if 2.0 * (f_start - fx) <= tol * (abs(f_start) + abs(fx)) + 1e-20:
                break
            displacement = theta - x_start
            if not np.any(displacement):
                break
            guard()
            f_extra = fn(2.0 * theta - x_start)
            if f_extra < f_start:
                t = (
                    2.0 * (f_start - 2.0 * fx + f_extra) * (f_start - fx - biggest_drop) ** 2
                    - biggest_drop * (f_start - f_extra) ** 2
                )
                if t < 0.0:
                    new_x, new_f, _ = _line_minimum(fn, theta, displacement, guard)
                    if new_f is not None and new_f < fx:
                        theta, fx = new_x, new_f
                        directions[drop_index] = directions[-1]
                        directions[-1] = displacement / np.linalg.norm(displacement)
    except _BudgetExhausted:
        pass
    return _finish(theta, trajectory, oracle, {"cycles": cycles}, start_calls=start_calls)


def _finish(theta, trajectory, oracle, events, start_calls: int = 0) -> OptRun:
    best = math.inf
    for _, value in trajectory:
        if value < best:
            best = value
    merged = dict(getattr(oracle, "events", {}) or {})
    merged.update(events)
    return OptRun(
        theta_final=np.asarray(theta, dtype=float),
        best_loss=best,
        n_calls=oracle.n_calls - start_calls,
        trajectory=trajectory,
        events=merged,
    )


_PLUGIN_REGISTRY: dict[str, object] = {}


def register_optimizer(name: str, fn) -> None:
    """Register an external optimizer ``fn(oracle, theta0, **options) -> OptRun``."""
    _PLUGIN_REGISTRY[name] = fn


def run(spec: OptimizerSpec, oracle, theta0) -> OptRun:
    """Dispatch one optimization run according to ``spec``.

    The sinusoid coordinate method derives its sweep count from a
    ``max_evals`` option (default 1024) when ``sweeps`` is not given, and
    is flagged approximate for the layered ansatz, whose coordinates are
    not single sinusoids.
    """
    opts = dict(spec.options)
    if spec.kind == "ngd":
        return run_ngd(oracle, theta0, k_max=int(opts.get("k_max", 20)))
    if spec.kind == "spsa":
        return run_spsa(
            oracle,
            theta0,
            budget=int(opts.get("budget", 225)),
            rng=getattr(oracle, "rng", None),
            target_first_step=float(opts.get("target_first_step", 0.1)),
            calibration_evals=int(opts.get("calibration_evals", 25)),
        )
    if spec.kind == "nft":
        sweeps = opts.get("sweeps")
        if sweeps is None:
            max_evals = int(opts.get("max_evals", 1024))
            sweeps = max(1, (max_evals - 1) // (2 * len(np.atleast_1d(theta0))))
        result = run_nft(oracle, theta0, sweeps=int(sweeps))
        f = getattr(oracle, "f", None)
        if f is not None and f.kind == "qaoa":
            result.events["sinusoid_fit_approximate"] = True
        return result
    if spec.kind == "powell":
        return run_powell(
            oracle,
            theta0,
            budget=int(opts.get("budget", 1000)),
            tol=float(opts.get("tol", 1e-6)),
        )
    if spec.kind == "plugin":
        fn = _PLUGIN_REGISTRY.get(spec.plugin_name)
        if fn is None:
            raise ConfigError(f"no optimizer registered under {spec.plugin_name!r}")
        return fn(oracle, theta0, **opts)
    raise ConfigError(f"unknown optimizer kind {spec.kind!r}")
