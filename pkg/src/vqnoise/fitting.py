"""Nonlinear fits of solvability curves and the projections built on them.

The transition of the success probability against the log noise level is
fitted with

    p(s) = (p_u - p_l)/2 * tanh(-b*log(s) + c) + (p_u + p_l)/2,

from which three resilience numbers follow analytically: the location of
steepest descent ``sigma* = exp(c/b)``, the slope there
``m* = b (p_l - p_u)/2 * exp(-c/b)``, and the level ``sigma_res`` where
the curve first drops to 90 percent of its upper asymptote.

The decline of ``sigma*`` with system size is fitted with three decay
families (``k e^{-g n}``, ``k n^{-g}``, ``k log(n)^{-g}``), compared by
the mean squared residual over the size grid.  Converted into the
relative-absolute-error tolerance and combined with the finite-sampling
error model ``A e^{r n} / sqrt(shots)``, these produce required-shot
projections against the brute-force ceiling ``2^n / (iters * (1 + 2n))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .exceptions import FitFailureError

__all__ = [
    "FitResult",
    "TanhFit",
    "ResilienceProfile",
    "DecayModel",
    "ProjectionRow",
    "ProjectionTable",
    "DECAY_FAMILIES",
    "REFERENCE_TOLERANCE_MODELS",
    "REFERENCE_SAMPLING_AMP",
    "REFERENCE_SAMPLING_RATE",
    "nlls_fit",
    "tanh_curve",
    "fit_tanh",
    "resilience_metrics",
    "fit_decay",
    "convert_to_rae",
    "project_shots",
    "runtime_lower_bound",
]

DECAY_FAMILIES = ("exp", "pl", "log")

# Reference calibration used by the default projection: fitted tolerance
# decay of the most resilient optimizer per family (with the size factor
# picked up when dividing by the fitted landscape-variance decay), and the
# matching finite-sampling error model.
REFERENCE_TOLERANCE_MODELS = {
    "exp": ("exp", 8.5, 0.5, 0.4),
    "pl": ("pl", 22.0, 1.8, 0.0),
    "log": ("log", 2.5, 3.2, 0.4),
}
REFERENCE_SAMPLING_AMP = 4.0
REFERENCE_SAMPLING_RATE = 0.04


@dataclass(frozen=True)
class FitResult:
    """Outcome of one nonlinear least-squares fit."""

    params: np.ndarray
    cov: np.ndarray = field(repr=False)
    residual_norm: float
    n_points: int
    message: str = ""

    def std_errs(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, np.inf))


def nlls_fit(model, xs, ys, inits, bounds=None, weights=None, max_nfev=2000) -> FitResult:
    """Least-squares fit of ``model(x, *params)`` with a multi-start grid.

    Minimization is Levenberg-Marquardt with a numeric Jacobian (trust
    region reflective when ``bounds`` are given, which LM does not
    support).  ``inits`` is a sequence of parameter start vectors; the
    best converged start wins.  The covariance comes from the
    Gauss-Newton approximation at the optimum, scaled by the residual
    variance.  Raises :class:`FitFailureError` when every start fails.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n_params = len(inits[0])
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be equal-length 1-d arrays")
    if xs.size < n_params:
        raise ValueError(f"need at least {n_params} points, got {xs.size}")
    w = np.ones_like(xs) if weights is None else np.asarray(weights, dtype=float)

    def residuals(p):
        return w * (model(xs, *p) - ys)

    best = None
    failures = []
    for init in inits:
        x0 = np.asarray(init, dtype=float)
        try:
            if bounds is None:
                res = least_squares(residuals, x0, method="lm", max_nfev=max_nfev)
            else:
                lo, hi = bounds
                x0 = np.clip(x0, lo, hi)
                res = least_squares(residuals, x0, bounds=(lo, hi), max_nfev=max_nfev)
        except Exception as exc:  # singular starts, overflow in the model
            failures.append(f"{init}: {exc}")
            continue
        if not res.success:
            failures.append(f"{init}: {res.message}")
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise FitFailureError(
            "no start point converged", diagnostics={"starts": failures}
        )
    dof = max(xs.size - n_params, 1)
    s_sq = 2.0 * best.cost / dof
    jtj = best.jac.T @ best.jac
    try:
        cov = np.linalg.inv(jtj) * s_sq
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jtj) * s_sq
    return FitResult(
        params=best.x,
        cov=cov,
        residual_norm=float(np.sqrt(2.0 * best.cost)),
        n_points=int(xs.size),
        message=str(best.message),
    )


# ---------------------------------------------------------------------------
# sigmoidal transition fits


@dataclass(frozen=True)
class TanhFit:
    """Fitted solvability transition on the log abscissa."""

    p_u: float
    p_l: float
    b: float
    c: float
    cov: np.ndarray = field(repr=False)
    residual_norm: float = 0.0
    censored: bool = False
    censor_reason: str = ""
    abscissa_range: tuple[float, float] = (0.0, 0.0)

    def evaluate(self, s) -> np.ndarray:
        return tanh_curve(np.log(np.asarray(s, dtype=float)), self.p_u, self.p_l, self.b, self.c)


@dataclass(frozen=True)
class ResilienceProfile:
    """Location, steepness and 90-percent retention point of a transition."""

    sigma_star: float | None
    m_star: float | None
    sigma_res: float | None
    censored: bool = False


def tanh_curve(x, p_u, p_l, b, c):
    return (p_u - p_l) / 2.0 * np.tanh(-b * x + c) + (p_u + p_l) / 2.0


def solvability_weights(p_hats, n_runs: int, floor_factor: float = 0.1) -> np.ndarray:
    """Inverse binomial-standard-error weights with a floor.

    The floor (a fraction of the worst-case standard error) keeps points
    with estimated probability exactly 0 or 1 at finite weight.
    """
    p = np.asarray(p_hats, dtype=float)
    se = np.sqrt(p * (1.0 - p) / n_runs)
    floor = math.sqrt(0.25 / n_runs) * floor_factor
    return 1.0 / np.maximum(se, floor)


def fit_tanh(abscissa, p_hats, weights=None, n_runs: int = 100) -> TanhFit:
    """Fit the solvability transition over a positive abscissa grid.

    The abscissa (noise level or shot count) is log-transformed before
    fitting.  Weights default to the inverse floored binomial standard
    errors for ``n_runs`` repetitions.  Degenerate data (no spread) and
    transitions located more than a decade outside the tested grid are
    returned as censored fits.
    """
    s = np.asarray(abscissa, dtype=float)
    p = np.asarray(p_hats, dtype=float)
    if s.size < 4:
        raise ValueError("need at least four points for a four-parameter fit")
    if np.any(s <= 0.0):
        raise ValueError("abscissa values must be positive")
    srange = (float(s.min()), float(s.max()))
    if np.ptp(p) == 0.0:
        level = float(p[0])
        return TanhFit(
            p_u=level, p_l=level, b=math.nan, c=math.nan,
            cov=np.full((4, 4), math.nan), censored=True,
            censor_reason="no transition in range", abscissa_range=srange,
        )
    x = np.log(s)
    if weights is None:
        weights = solvability_weights(p, n_runs)
    hi, lo = float(p.max()), float(p.min())
    mid = (hi + lo) / 2.0
    x_mid = _crossing_point(x, p, mid)
    inits = [(hi, lo, b0, b0 * x_mid) for b0 in (0.5, 1.0, 2.0, 4.0)]
    bounds = (np.array([0.0, 0.0, 1e-3, -100.0]), np.array([1.0, 1.0, 1e3, 100.0]))
    result = nlls_fit(tanh_curve, x, p, inits, bounds=bounds, weights=weights)
    p_u, p_l, b, c = (float(v) for v in result.params)
    fit = TanhFit(
        p_u=p_u, p_l=p_l, b=b, c=c, cov=result.cov,
        residual_norm=result.residual_norm, abscissa_range=srange,
    )
    sigma_star = math.exp(c / b)
    if sigma_star > srange[1] * 10.0 or sigma_star < srange[0] / 10.0:
        fit = TanhFit(
            p_u=p_u, p_l=p_l, b=b, c=c, cov=result.cov,
            residual_norm=result.residual_norm, censored=True,
            censor_reason="transition more than a decade outside the tested grid",
            abscissa_range=srange,
        )
    return fit


def _crossing_point(x, p, level):
    """Abscissa where the data first crosses ``level`` (linear interpolation)."""
    d = p - level
    for i in range(len(x) - 1):
        if d[i] == 0.0:
            return float(x[i])
        if d[i] * d[i + 1] < 0.0:
            frac = d[i] / (d[i] - d[i + 1])
            return float(x[i] + frac * (x[i + 1] - x[i]))
    return float(x[np.argmin(np.abs(d))])


def resilience_metrics(fit: TanhFit) -> ResilienceProfile:
    """Analytic resilience numbers of a fitted transition."""
    if fit.censored:
        return ResilienceProfile(None, None, None, censored=True)
    sigma_star = math.exp(fit.c / fit.b)
    m_star = fit.b * (fit.p_l - fit.p_u) / 2.0 * math.exp(-fit.c / fit.b)
    sigma_res = None
    if fit.p_u > 0.0:
        half_span = (fit.p_u - fit.p_l) / 2.0
        if half_span != 0.0:
            y = (0.9 * fit.p_u - (fit.p_u + fit.p_l) / 2.0) / half_span
            if abs(y) < 1.0:
                sigma_res = math.exp((fit.c - math.atanh(y)) / fit.b)
    return ResilienceProfile(sigma_star=sigma_star, m_star=m_star, sigma_res=sigma_res)


# ---------------------------------------------------------------------------
# decay-family fits and projections


@dataclass(frozen=True)
class DecayModel:
    """One decay family ``k * n**n_power * g(n)**(-gamma)`` with uncertainties.

    ``g(n)`` is ``e**n`` for the exponential family, ``n`` for the power
    law and ``log(n)`` for the logarithmic family.  ``n_power`` is zero
    for plain decay fits; tolerance curves divided by a fitted variance
    decay carry a positive size power.
    """

    family: str
    k: float
    gamma: float
    n_power: float = 0.0
    k_err: float = math.nan
    gamma_err: float = math.nan
    residuals: np.ndarray | None = field(default=None, repr=False)
    mse: float = math.nan

    def evaluate(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        prefactor = self.k * n**self.n_power
        if self.family == "exp":
            return prefactor * np.exp(-self.gamma * n)
        if self.family == "pl":
            return prefactor * n ** (-self.gamma)
        if self.family == "log":
            return prefactor * np.log(n) ** (-self.gamma)
        raise ValueError(f"unknown decay family {self.family!r}")


def _decay_fn(family):
    if family == "exp":
        return lambda n, k, g: k * np.exp(-g * n)
    if family == "pl":
        return lambda n, k, g: k * n ** (-g)
    if family == "log":
        return lambda n, k, g: k * np.log(n) ** (-g)
    raise ValueError(f"unknown decay family {family!r}; expected one of {DECAY_FAMILIES}")


def _linearized_init(family, ns, ys):
    """Closed-form start point from regression in transformed coordinates."""
    log_y = np.log(ys)
    if family == "exp":
        t = ns
    elif family == "pl":
        t = np.log(ns)
    else:
        t = np.log(np.log(ns))
    slope, intercept = np.polyfit(t, log_y, 1)
    return (float(np.exp(intercept)), float(-slope))


def fit_decay(ns, sigma_stars, family: str, weights=None) -> DecayModel:
    """Fit one decay family to a positive curve over system sizes.

    Residuals are unweighted in the raw values by default (pass
    ``weights`` for heteroscedastic data); the reported mean squared
    residual is always taken over the raw residuals on the size grid so
    families stay comparable.  The start point comes from the linearized
    regression, so exact family data is recovered to solver precision.
    """
    fn = _decay_fn(family)
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(sigma_stars, dtype=float)
    if ns.size < 3:
        raise ValueError("need at least three points")
    if np.any(ys <= 0.0):
        raise ValueError("decay fits need positive values")
    if family == "log" and np.any(ns <= 1.0):
        raise ValueError("logarithmic family needs sizes above 1")
    init = _linearized_init(family, ns, ys)
    inits = [init, (init[0], max(init[1], 0.1)), (float(ys[0]), 1.0)]
    bounds = (np.array([1e-12, -50.0]), np.array([np.inf, 50.0]))
    result = nlls_fit(fn, ns, ys, inits, bounds=bounds, weights=weights)
    k, gamma = (float(v) for v in result.params)
    errs = result.std_errs()
    residuals = ys - fn(ns, k, gamma)
    return DecayModel(
        family=family,
        k=k,
        gamma=gamma,
        k_err=float(errs[0]),
        gamma_err=float(errs[1]),
        residuals=residuals,
        mse=float(np.mean(residuals**2)),
    )


def convert_to_rae(ns, sigma_stars, variances) -> np.ndarray:
    """Translate noise thresholds into error-tolerance units, pointwise.

    Divides each threshold by the landscape standard deviation at the
    same size: ``eps*(n) = sigma*(n) / sqrt(Var(n))``.
    """
    ns = np.asarray(ns)
    s = np.asarray(sigma_stars, dtype=float)
    v = np.asarray(variances, dtype=float)
    if not (ns.shape == s.shape == v.shape):
        raise ValueError("size grids of thresholds and variances must match")
    if np.any(v <= 0.0):
        raise ValueError("variances must be positive")
    return s / np.sqrt(v)


@dataclass(frozen=True)
class ProjectionRow:
    n: int
    eps_star: float
    eps_fs_single_shot: float
    shots_required: float
    shots_ceiling: float
    feasible: bool


@dataclass(frozen=True)
class ProjectionTable:
    """Shot requirements against the brute-force ceiling, per system size."""

    family: str
    rows: tuple[ProjectionRow, ...]
    window_open_n: int | None
    crossover: float | None

    def row(self, n: int) -> ProjectionRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(f"n={n} not in projection range")


def disadvantage_ceiling(n, iterations: int = 20) -> np.ndarray:
    """Shot budget above which total circuit runs exceed ``2**n`` trials.

    The call model is ``iterations * (1 + 2n)`` loss evaluations: one
    tracked value plus a two-point-shift gradient per iteration.
    """
    n = np.asarray(n, dtype=float)
    return 2.0**n / (iterations * (1.0 + 2.0 * n))


def project_shots(
    eps_star_model: DecayModel,
    n_range,
    sampling_amp: float = REFERENCE_SAMPLING_AMP,
    sampling_rate: float = REFERENCE_SAMPLING_RATE,
    iterations: int = 20,
) -> ProjectionTable:
    """Required versus allowed shots for every size in ``n_range``.

    The finite-sampling error model ``amp * e^{rate*n} / sqrt(shots)``
    is inverted against the tolerance ``eps*(n)``, giving
    ``shots_required = (amp * e^{rate*n} / eps*(n))**2``; the ceiling is
    :func:`disadvantage_ceiling`.  ``window_open_n`` is the smallest size
    whose requirement fits under the ceiling; ``crossover`` interpolates
    the boundary crossing on the continuous size axis.
    """
    ns = [int(n) for n in n_range]
    rows = []
    for n in ns:
        eps_star = float(eps_star_model.evaluate(n))
        if eps_star <= 0.0:
            raise ValueError(f"tolerance model must be positive on the range (n={n})")
        eps_fs = sampling_amp * math.exp(sampling_rate * n)
        required = (eps_fs / eps_star) ** 2
        ceiling = float(disadvantage_ceiling(n, iterations))
        rows.append(
            ProjectionRow(
                n=n,
                eps_star=eps_star,
                eps_fs_single_shot=eps_fs,
                shots_required=required,
                shots_ceiling=ceiling,
                feasible=required < ceiling,
            )
        )
    window = next((r.n for r in rows if r.feasible), None)
    crossover = None
    for prev, cur in zip(rows, rows[1:]):
        if not prev.feasible and cur.feasible:
            a = math.log(prev.shots_required / prev.shots_ceiling)
            b = math.log(cur.shots_required / cur.shots_ceiling)
            crossover = prev.n + a / (a - b) * (cur.n - prev.n)
            break
    return ProjectionTable(
        family=eps_star_model.family,
        rows=tuple(rows),
        window_open_n=window,
        crossover=crossover,
    )


def reference_tolerance_model(family: str) -> DecayModel:
    """The reference-calibrated tolerance decay for one family."""
    fam, k, gamma, n_power = REFERENCE_TOLERANCE_MODELS[family]
    return DecayModel(family=fam, k=k, gamma=gamma, n_power=n_power)


def runtime_lower_bound(n_shots: float, n_calls: float, depth: float, t_gate: float) -> float:
    """Total-runtime floor: shots x calls x circuit depth x gate time."""
    for name, v in (("n_shots", n_shots), ("n_calls", n_calls), ("depth", depth), ("t_gate", t_gate)):
        if v <= 0.0:
            raise ValueError(f"{name} must be positive")
    return float(n_shots) * float(n_calls) * float(depth) * float(t_gate)
