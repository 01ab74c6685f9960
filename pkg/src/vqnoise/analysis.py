"""From sweep records to fitted transitions, decay tables and projections."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .config import SCHEMA_VERSION
from .exceptions import FitFailureError, ParseError
from .fitting import (
    DECAY_FAMILIES,
    DecayModel,
    TanhFit,
    fit_decay,
    fit_tanh,
    resilience_metrics,
)
from .losses import build_loss, loss_variance_scan
from .problems import generate_random_qubo, qubo_to_ising

__all__ = [
    "TransitionFit",
    "solvability_curve",
    "fit_all_transitions",
    "decay_tables",
    "decay_size_grids",
    "transitions_to_json",
    "decay_tables_to_json",
    "load_decay_tables",
    "variance_table",
    "variance_fits",
]

FITS_SCHEMA = f"{SCHEMA_VERSION}.fits"
DECAY_SCHEMA = f"{SCHEMA_VERSION}.decay"
VARIANCE_SCHEMA = f"{SCHEMA_VERSION}.variance"


@dataclass(frozen=True)
class TransitionFit:
    optimizer: str
    n: int
    t: float
    noise_kind: str
    fit: TanhFit
    sigma_star: float | None
    m_star: float | None
    sigma_res: float | None
    p_noiseless: float | None


def solvability_curve(thresholds, records, optimizer: str, n: int, t: float):
    """Success probabilities against the noise level for one cell group.

    Returns (noise values, p_hats, run counts, noiseless p_hat or None).
    Only non-noiseless points enter the curve; its kind must be unique.
    """
    try:
        t_index = thresholds.index(t)
    except ValueError:
        raise ValueError(f"threshold {t} not among {thresholds}") from None
    by_noise: dict[tuple[int, float, str], list[int]] = {}
    noiseless: list[int] = []
    for rec in records:
        if rec.optimizer != optimizer or rec.n != n or rec.status != "ok":
            continue
        if rec.noise_kind == "none":
            noiseless.append(rec.successes[t_index])
        else:
            key = (rec.noise_index, rec.noise_value, rec.noise_kind)
            by_noise.setdefault(key, []).append(rec.successes[t_index])
    kinds = {k[2] for k in by_noise}
    if len(kinds) > 1:
        raise ValueError(f"mixed noise kinds in one curve: {sorted(kinds)}")
    keys = sorted(by_noise)
    values = np.array([k[1] for k in keys])
    p_hats = np.array([np.mean(by_noise[k]) for k in keys])
    n_runs = np.array([len(by_noise[k]) for k in keys], dtype=int)
    p_none = float(np.mean(noiseless)) if noiseless else None
    return values, p_hats, n_runs, p_none


def fit_all_transitions(thresholds, records) -> list[TransitionFit]:
    """Tanh fits for every (optimizer, size, threshold) group with noise data."""
    groups = sorted(
        {(r.optimizer, r.n) for r in records if r.status == "ok" and r.noise_kind != "none"}
    )
    noise_kind = next(
        (r.noise_kind for r in records if r.noise_kind != "none" and r.status == "ok"), "gaussian"
    )
    out = []
    for optimizer, n in groups:
        for t in thresholds:
            values, p_hats, n_runs, p_none = solvability_curve(
                thresholds, records, optimizer, n, t
            )
            if values.size < 4:
                continue
            try:
                fit = fit_tanh(values, p_hats, n_runs=int(np.median(n_runs)))
            except FitFailureError:
                fit = TanhFit(
                    p_u=math.nan, p_l=math.nan, b=math.nan, c=math.nan,
                    cov=np.full((4, 4), math.nan), censored=True,
                    censor_reason="fit did not converge",
                    abscissa_range=(float(values.min()), float(values.max())),
                )
            prof = resilience_metrics(fit)
            out.append(
                TransitionFit(
                    optimizer=optimizer,
                    n=n,
                    t=t,
                    noise_kind=noise_kind,
                    fit=fit,
                    sigma_star=prof.sigma_star,
                    m_star=prof.m_star,
                    sigma_res=prof.sigma_res,
                    p_noiseless=p_none,
                )
            )
    return out


def decay_tables(transitions, t: float, families=DECAY_FAMILIES) -> dict[str, dict[str, DecayModel]]:
    """Per-optimizer decay fits of the threshold location over system size.

    Censored transitions are excluded.  Optimizers with fewer than three
    usable sizes are skipped.
    """
    by_opt: dict[str, list[TransitionFit]] = {}
    for tr in transitions:
        if tr.t == t and not tr.fit.censored and tr.sigma_star is not None:
            by_opt.setdefault(tr.optimizer, []).append(tr)
    tables: dict[str, dict[str, DecayModel]] = {}
    for optimizer, fits in sorted(by_opt.items()):
        fits.sort(key=lambda f: f.n)
        ns = np.array([f.n for f in fits], dtype=float)
        stars = np.array([f.sigma_star for f in fits])
        if ns.size < 3:
            continue
        tables[optimizer] = {}
        for family in families:
            try:
                tables[optimizer][family] = fit_decay(ns, stars, family)
            except (FitFailureError, ValueError):
                continue
    return tables


def decay_size_grids(transitions, t: float) -> dict[str, list[int]]:
    """The uncensored size grid per optimizer entering the decay fits."""
    by_opt: dict[str, list[int]] = {}
    for tr in transitions:
        if tr.t == t and not tr.fit.censored and tr.sigma_star is not None:
            by_opt.setdefault(tr.optimizer, []).append(tr.n)
    return {opt: sorted(ns) for opt, ns in by_opt.items()}


def transitions_to_json(transitions, path=None) -> dict:
    data = {
        "schema": FITS_SCHEMA,
        "transitions": [
            {
                "optimizer": tr.optimizer,
                "n": tr.n,
                "t": tr.t,
                "noise_kind": tr.noise_kind,
                "p_u": _json_float(tr.fit.p_u),
                "p_l": _json_float(tr.fit.p_l),
                "b": _json_float(tr.fit.b),
                "c": _json_float(tr.fit.c),
                "censored": tr.fit.censored,
                "censor_reason": tr.fit.censor_reason,
                "abscissa_range": list(tr.fit.abscissa_range),
                "sigma_star": tr.sigma_star,
                "m_star": tr.m_star,
                "sigma_res": tr.sigma_res,
                "p_noiseless": tr.p_noiseless,
                "residual_norm": _json_float(tr.fit.residual_norm),
            }
            for tr in transitions
        ],
    }
    if path is not None:
        _dump(data, path)
    return data


def decay_tables_to_json(tables, t: float, path=None, ns_by_optimizer=None) -> dict:
    data = {
        "schema": DECAY_SCHEMA,
        "t": t,
        "optimizers": {
            optimizer: {
                family: {
                    "k": model.k,
                    "gamma": model.gamma,
                    "k_err": _json_float(model.k_err),
                    "gamma_err": _json_float(model.gamma_err),
                    "mse": _json_float(model.mse),
                    "residuals": [float(v) for v in model.residuals],
                    "ns": [int(v) for v in (ns_by_optimizer or {}).get(optimizer, [])],
                }
                for family, model in families.items()
            }
            for optimizer, families in tables.items()
        },
    }
    if path is not None:
        _dump(data, path)
    return data


def load_decay_tables(path) -> dict[str, dict[str, DecayModel]]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("schema") != DECAY_SCHEMA:
        raise ParseError(f"expected schema {DECAY_SCHEMA!r}, found {data.get('schema')!r}")
    tables = {}
    for optimizer, families in data["optimizers"].items():
        tables[optimizer] = {
            family: DecayModel(
                family=family,
                k=entry["k"],
                gamma=entry["gamma"],
                k_err=entry.get("k_err", math.nan) or math.nan,
                gamma_err=entry.get("gamma_err", math.nan) or math.nan,
                residuals=np.array(entry.get("residuals", [])),
                mse=entry.get("mse", math.nan) or math.nan,
            )
            for family, entry in families.items()
        }
    return tables


# ---------------------------------------------------------------------------
# landscape variance over system size


def variance_table(kinds, n_grid, n_samples, master_seed, include_gradients=True):
    """Variance scans for each ansatz kind over the size grid.

    One seeded instance per size (derived from the master seed) keeps the
    table reproducible; the normalization makes instances at the same
    size statistically interchangeable.
    """
    from ._rng import derive_rng

    rows = []
    for kind in kinds:
        for n in n_grid:
            if kind == "qaoa" and n % 2:
                continue
            ising = qubo_to_ising(generate_random_qubo(n, derive_seed(master_seed, "variance", n)))
            f = build_loss(kind, ising)
            scan = loss_variance_scan(
                f,
                n_samples,
                rng=derive_rng(master_seed, "variance-scan", kind, n),
                include_gradients=include_gradients,
            )
            rows.append(
                {
                    "kind": kind,
                    "n": n,
                    "n_samples": n_samples,
                    "loss_variance": scan.loss_variance,
                    "grad_variance_mean": scan.grad_variance_mean,
                }
            )
    return rows


def variance_fits(rows, fit_min_n: int = 8, families=("exp", "pl")) -> dict:
    """Decay fits of the loss variance against size, per ansatz kind.

    Restricted to ``n >= fit_min_n`` to suppress small-size effects.
    """
    out: dict[str, dict[str, dict]] = {}
    kinds = sorted({r["kind"] for r in rows})
    for kind in kinds:
        pts = sorted(
            ((r["n"], r["loss_variance"]) for r in rows if r["kind"] == kind),
        )
        ns = np.array([p[0] for p in pts if p[0] >= fit_min_n], dtype=float)
        ys = np.array([p[1] for p in pts if p[0] >= fit_min_n])
        if ns.size < 3 or np.any(ys <= 0):
            continue
        out[kind] = {}
        for family in families:
            try:
                model = fit_decay(ns, ys, family)
            except (FitFailureError, ValueError):
                continue
            out[kind][family] = {
                "k": model.k,
                "gamma": model.gamma,
                "k_err": _json_float(model.k_err),
                "gamma_err": _json_float(model.gamma_err),
                "mse": _json_float(model.mse),
            }
    return out


def _json_float(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return None
    return float(v)


def _dump(data, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
