"""Renderers for the six figure kinds.

Each renderer is a pure function of its input artifacts: it reads
serialized values, draws them, and writes one image file.  No science
result is recomputed here; fitted curves are evaluated from their stored
parameters and boundaries are read from the artifact rows.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import load_json, load_plain_csv, load_schema_csv, load_schema_json

plt.rcParams.update(
    {
        "figure.figsize": (6.4, 4.2),
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "vqfigures",
        "legend.fontsize": 8,
    }
)

KIND_COLORS = {"benqo": "tab:blue", "vqe2l": "tab:orange", "qaoa": "tab:green"}
FAMILY_STYLES = {"exp": ("tab:red", "--"), "pl": ("tab:blue", "-"), "log": ("tab:green", ":")}


def _decay_value(family, n, k, gamma):
    n = np.asarray(n, dtype=float)
    if family == "exp":
        return k * np.exp(-gamma * n)
    if family == "pl":
        return k * n ** (-gamma)
    return k * np.log(n) ** (-gamma)


def _save(fig, out_path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150, metadata={"Software": "vqfigures"} if out_path.suffix == ".png" else None)
    plt.close(fig)
    return out_path


def render_variance(variance_csv, out_path, fits_json=None) -> Path:
    """Loss (and derivative) variance against system size, log scale."""
    rows = load_plain_csv(variance_csv)
    kinds = sorted({r["kind"] for r in rows})
    has_grad = any(r.get("grad_variance_mean") not in ("", None) for r in rows)
    fig, axes = plt.subplots(1, 2 if has_grad else 1, figsize=(9.0 if has_grad else 5.0, 3.6))
    axes = np.atleast_1d(axes)
    fits = load_json(fits_json).get("kinds", {}) if fits_json else {}
    for kind in kinds:
        pts = sorted((r["n"], r["loss_variance"]) for r in rows if r["kind"] == kind)
        ns = np.array([p[0] for p in pts])
        axes[0].plot(ns, [p[1] for p in pts], "o-", ms=4, lw=1,
                     color=KIND_COLORS.get(kind), label=kind)
        for family, entry in fits.get(kind, {}).items():
            dense = np.linspace(ns.min(), ns.max(), 100)
            color, style = FAMILY_STYLES.get(family, ("gray", "--"))
            axes[0].plot(dense, _decay_value(family, dense, entry["k"], entry["gamma"]),
                         style, color=color, lw=0.8, alpha=0.7,
                         label=f"{kind} {family} fit")
        if has_grad:
            gpts = sorted(
                (r["n"], r["grad_variance_mean"]) for r in rows
                if r["kind"] == kind and r.get("grad_variance_mean") not in ("", None)
            )
            axes[1].plot([p[0] for p in gpts], [p[1] for p in gpts], "s-", ms=4, lw=1,
                         color=KIND_COLORS.get(kind), label=kind)
    axes[0].set(xlabel="system size n", ylabel="sample variance of normalized loss",
                yscale="log", title="loss variance")
    axes[0].legend()
    if has_grad:
        axes[1].set(xlabel="system size n", ylabel="mean variance of partial derivatives",
                    yscale="log", title="derivative variance")
        axes[1].legend()
    fig.tight_layout()
    return _save(fig, out_path)


def render_grid(cells_csv, out_path, threshold_columns=None) -> Path:
    """Success-probability contour grids over (noise level, system size)."""
    rows = load_schema_csv(cells_csv, "cells")
    optimizers = sorted({r["optimizer"] for r in rows})
    if threshold_columns is None:
        threshold_columns = [c for c in rows[0] if c.startswith("p_t")]
    fig, axes = plt.subplots(
        len(optimizers), len(threshold_columns),
        figsize=(3.2 * len(threshold_columns), 2.6 * len(optimizers)),
        squeeze=False,
    )
    for i, optimizer in enumerate(optimizers):
        sub = [r for r in rows if r["optimizer"] == optimizer]
        ns = sorted({r["n"] for r in sub})
        noise_idx = sorted({r["noise_index"] for r in sub})
        for j, col in enumerate(threshold_columns):
            grid = np.full((len(ns), len(noise_idx)), np.nan)
            for r in sub:
                grid[ns.index(r["n"]), noise_idx.index(r["noise_index"])] = r[col]
            ax = axes[i][j]
            mesh = ax.pcolormesh(
                np.arange(len(noise_idx) + 1), np.array(ns + [ns[-1] + 1]),
                grid, vmin=0.0, vmax=1.0, cmap="viridis",
            )
            labels = {}
            for r in sub:
                labels[r["noise_index"]] = (
                    "0" if r["noise_kind"] == "none" else f"{r['noise_value']:.3g}"
                )
            step = max(1, len(noise_idx) // 6)
            ax.set_xticks(np.arange(len(noise_idx))[::step] + 0.5)
            ax.set_xticklabels([labels[k] for k in noise_idx[::step]], rotation=45)
            ax.set_yticks(np.array(ns) + 0.5)
            ax.set_yticklabels(ns)
            ax.set(title=f"{optimizer}  {col}", xlabel="noise level", ylabel="n")
            ax.grid(False)
    fig.colorbar(mesh, ax=axes, shrink=0.8, label="success probability")
    return _save(fig, out_path)


def render_sigmoid(cells_csv, fits_json, out_path, optimizer=None, n=None, t=None) -> Path:
    """One solvability transition with its fitted curve and location marker."""
    rows = load_schema_csv(cells_csv, "cells")
    fits = load_schema_json(fits_json, "fits")["transitions"]
    usable = [f for f in fits if not f["censored"]]
    if not usable:
        raise ValueError("no uncensored transition fits to draw")
    pick = usable[0]
    for f in usable:
        if (optimizer is None or f["optimizer"] == optimizer) and (
            n is None or f["n"] == n
        ) and (t is None or f["t"] == t):
            pick = f
            break
    col = f"p_t{pick['t']:g}"
    se_col = f"se_t{pick['t']:g}"
    sub = sorted(
        (
            (r["noise_value"], r[col], r[se_col])
            for r in rows
            if r["optimizer"] == pick["optimizer"] and r["n"] == pick["n"]
            and r["noise_kind"] != "none"
        ),
    )
    sigmas = np.array([s[0] for s in sub])
    fig, ax = plt.subplots()
    ax.errorbar(sigmas, [s[1] for s in sub], yerr=[s[2] for s in sub],
                fmt="o", ms=4, capsize=2, label="measured")
    dense = np.logspace(np.log10(sigmas.min()), np.log10(sigmas.max()), 200)
    curve = (pick["p_u"] - pick["p_l"]) / 2.0 * np.tanh(
        -pick["b"] * np.log(dense) + pick["c"]
    ) + (pick["p_u"] + pick["p_l"]) / 2.0
    ax.plot(dense, curve, "-", color="tab:red", label="tanh fit")
    if pick["sigma_star"] is not None:
        ax.axvline(pick["sigma_star"], color="tab:red", ls="--", lw=1,
                   label=f"steepest descent {pick['sigma_star']:.3g}")
    if pick.get("sigma_res") is not None:
        ax.axvline(pick["sigma_res"], color="tab:gray", ls=":", lw=1,
                   label=f"90% retention {pick['sigma_res']:.3g}")
    ax.set(xscale="log", xlabel="noise level", ylabel=f"success probability (t={pick['t']:g})",
           title=f"{pick['optimizer']}, n={pick['n']}", ylim=(-0.05, 1.05))
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_path)


def render_decay(sigma_star_csv, decay_json, out_path, optimizer=None, t=None) -> Path:
    """Threshold-location decay with the three family fits and residuals."""
    rows = load_plain_csv(sigma_star_csv)
    decay = load_schema_json(decay_json, "decay")
    if t is None:
        t = decay["t"]
    optimizers = sorted(decay["optimizers"])
    if optimizer is None:
        optimizer = optimizers[0]
    if optimizer not in decay["optimizers"]:
        raise ValueError(f"optimizer {optimizer!r} not in decay tables {optimizers}")
    pts = sorted(
        (r["n"], r["sigma_star"]) for r in rows
        if r["optimizer"] == optimizer and abs(r["t"] - t) < 1e-9
        and not r["censored"] and r["sigma_star"] != ""
    )
    ns = np.array([p[0] for p in pts], dtype=float)
    stars = np.array([p[1] for p in pts], dtype=float)
    fig, (ax, ax_res) = plt.subplots(
        2, 1, sharex=True, figsize=(5.6, 5.2), height_ratios=[2.2, 1.0]
    )
    ax.plot(ns, stars, "ko", ms=5, label="measured")
    dense = np.linspace(ns.min(), ns.max(), 200)
    for family, entry in sorted(decay["optimizers"][optimizer].items()):
        color, style = FAMILY_STYLES.get(family, ("gray", "--"))
        ax.plot(dense, _decay_value(family, dense, entry["k"], entry["gamma"]),
                style, color=color, label=f"{family} (mse {entry['mse']:.1e})")
        fit_ns = entry.get("ns") or list(ns.astype(int))
        ax_res.plot(fit_ns, entry["residuals"], style, color=color, marker="o", ms=3, lw=0.8)
    ax_res.axhline(0.0, color="k", lw=0.6)
    ax.set(yscale="log", ylabel="threshold location", title=f"{optimizer}, t={t:g}")
    ax.legend()
    ax_res.set(xlabel="system size n", ylabel="residual")
    fig.tight_layout()
    return _save(fig, out_path)


def projection_boundary(projection_json) -> tuple[np.ndarray, np.ndarray]:
    """Size grid and disadvantage ceiling as stored in the artifact."""
    data = load_schema_json(projection_json, "projection")
    first = next(iter(sorted(data["families"])))
    rows = data["families"][first]["rows"]
    ns = np.array([r["n"] for r in rows])
    ceiling = np.array([r["shots_ceiling"] for r in rows])
    return ns, ceiling


def render_projection(projection_json, out_path) -> Path:
    """Required shots per decay family with the disadvantage region shaded."""
    data = load_schema_json(projection_json, "projection")
    ns, ceiling = projection_boundary(projection_json)
    fig, ax = plt.subplots()
    top = None
    for family, entry in sorted(data["families"].items()):
        rows = entry["rows"]
        req = np.array([r["shots_required"] for r in rows])
        color, style = FAMILY_STYLES.get(family, ("gray", "-"))
        label = f"{family} required"
        if entry["window_open_n"] is not None:
            label += f" (window opens n={entry['window_open_n']})"
        ax.plot([r["n"] for r in rows], req, style, color=color, label=label)
        top = req.max() if top is None else max(top, req.max())
    top = max(top, ceiling.max()) * 10.0
    ax.fill_between(ns, ceiling, top, color="0.85", zorder=0,
                    label="brute force more efficient")
    ax.plot(ns, ceiling, "k-", lw=1)
    hardware = data.get("hardware_curve")
    ax.set(xlabel="system size n", ylabel="measurement shots", yscale="log",
           ylim=(max(ceiling.min() * 0.5, 1e-2), top),
           title="required shots vs disadvantage ceiling")
    ax.legend()
    fig.tight_layout()
    out = _save(fig, out_path)
    del hardware  # echoed in the artifact; not drawn on the shots axes
    return out


def render_profile(profile_csv, hist_json, out_path) -> Path:
    """Solution-space quality fractions plus the normalized-loss histogram."""
    rows = load_plain_csv(profile_csv)
    hist = load_schema_json(hist_json, "profile")
    t_cols = [c for c in rows[0] if c.startswith("p_t")]
    ts = [float(c[3:]) for c in t_cols]
    values = np.array([[r[c] for c in t_cols] for r in rows], dtype=float)
    order = np.argsort(ts)
    fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax_a.errorbar(
        np.array(ts)[order], values.mean(axis=0)[order], yerr=values.std(axis=0)[order],
        fmt="o-", ms=4, capsize=2,
    )
    ax_a.set(xlabel="quality threshold t", ylabel="fraction of basis states",
             yscale="log", title=f"n={hist['n']} ({hist['instances']} instances)")
    edges = np.array(hist["hist_edges"])
    centers = (edges[:-1] + edges[1:]) / 2.0
    ax_b.fill_between(centers, hist["hist_density_mean"], step="mid", alpha=0.6)
    ax_b.set(xlabel="normalized basis energy", ylabel="density",
             title="solution-space energy distribution")
    fig.tight_layout()
    return _save(fig, out_path)
