"""Command-line harness.

Subcommands:

* ``gen``      - emit seeded random QUBO instances (text and/or JSON).
* ``variance`` - landscape variance against system size, with decay fits.
* ``sweep``    - the full (optimizer x size x noise x instance) experiment.
* ``fit``      - transition fits, resilience numbers and decay tables
                 from sweep records.
* ``project``  - required-shot projections against the brute-force
                 ceiling, from fitted or reference calibrations.
* ``profile``  - exhaustive solution-space statistics, or the
                 finite-sampling error characterization.
* ``validate`` - run the built-in oracle/invariant checks.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
Every artifact-writing command also writes ``<name>.manifest.json`` with
the schema version, the resolved configuration and the command line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import derive_rng, derive_seed
from .analysis import (
    decay_size_grids,
    decay_tables,
    decay_tables_to_json,
    fit_all_transitions,
    load_decay_tables,
    transitions_to_json,
    variance_fits,
    variance_table,
)
from .config import SCHEMA_VERSION, ExperimentConfig, default_config, load_config
from .exceptions import ConfigError, ParseError
from .fitting import (
    DecayModel,
    project_shots,
    reference_tolerance_model,
    runtime_lower_bound,
)
from .losses import build_loss
from .noise import error_decomposition, fs_error_scan
from .problems import generate_random_qubo, qubo_to_ising, solution_space_profile
from .sweep import (
    aggregate_cells,
    list_cells,
    read_records_csv,
    run_sweep,
    write_cells_csv,
    write_records_csv,
    write_records_json,
)

PROFILE_SCHEMA = f"{SCHEMA_VERSION}.profile"
FS_SCHEMA = f"{SCHEMA_VERSION}.fs-error"
PROJECTION_SCHEMA = f"{SCHEMA_VERSION}.projection"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _write_manifest(outdir: Path, name: str, args, extra: dict) -> None:
    manifest = {
        "schema": SCHEMA_VERSION,
        "tool": f"vqnoise {__version__}",
        "command": name,
        "argv": sys.argv[1:],
        "created_unix": time.time(),
        **extra,
    }
    with open(outdir / f"{name}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _csv_dump(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_or_default(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen(args) -> int:
    out = _outdir(args)
    seeds = []
    for i in range(args.count):
        seed = args.seed if args.count == 1 else derive_seed(args.seed, "gen", i)
        inst = generate_random_qubo(args.n, seed)
        stem = out / f"qubo_n{args.n}_{i:03d}"
        if args.format in ("text", "both"):
            Path(f"{stem}.txt").write_text(inst.to_text(), encoding="utf-8")
        if args.format in ("json", "both"):
            Path(f"{stem}.json").write_text(inst.to_json() + "\n", encoding="utf-8")
        seeds.append(seed)
    _write_manifest(out, "gen", args, {"n": args.n, "seeds": seeds, "count": args.count})
    print(f"wrote {args.count} instance(s) of size {args.n} to {out}")
    return 0


def _cmd_variance(args) -> int:
    out = _outdir(args)
    cfg = _load_or_default(args)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    n_grid = _parse_grid(args.n_grid) if args.n_grid else cfg.n_grid
    rows = variance_table(
        kinds,
        n_grid,
        args.samples,
        cfg.master_seed,
        include_gradients=not args.no_gradients,
    )
    _csv_dump(
        out / "variance.csv",
        ["kind", "n", "n_samples", "loss_variance", "grad_variance_mean"],
        [
            [
                r["kind"],
                r["n"],
                r["n_samples"],
                repr(r["loss_variance"]),
                "" if r["grad_variance_mean"] is None else repr(r["grad_variance_mean"]),
            ]
            for r in rows
        ],
    )
    fits = variance_fits(rows, fit_min_n=args.fit_min_n)
    with open(out / "variance_fits.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"schema": f"{SCHEMA_VERSION}.variance-fits", "fit_min_n": args.fit_min_n, "kinds": fits},
            fh,
            indent=1,
            sort_keys=True,
        )
        fh.write("\n")
    _write_manifest(
        out, "variance", args,
        {"config": cfg.echo(), "kinds": kinds, "n_grid": list(n_grid), "samples": args.samples},
    )
    print(f"variance table ({len(rows)} rows) written to {out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_or_default(args)
    if args.out:
        cfg.output_dir = args.out
    cells = list_cells(cfg)
    if args.dry_run:
        print(f"{len(cells)} cells x {cfg.instances} instances = "
              f"{len(cells) * cfg.instances} runs")
        for opt_idx, opt, n, noise_idx, noise in cells:
            print(f"  {opt.label():>8s}  n={n:<3d} noise[{noise_idx}]={noise.label()}")
        return 0
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    progress = None
    if not args.quiet:
        total_cells = len(cells)

        def progress(done, total, _t0=time.perf_counter()):
            if done % max(1, total // 20) == 0 or done == total:
                rate = done / (time.perf_counter() - _t0 + 1e-9)
                print(f"  cells {done}/{total} ({rate:.1f}/s)", file=sys.stderr)

    result = run_sweep(cfg, workers=args.workers, progress=progress)
    write_records_csv(
        out / "records.csv",
        result.thresholds,
        result.records,
        timings_path=out / "timings.csv" if args.timings else None,
    )
    write_records_json(out / "records.json", result.thresholds, result.records)
    write_cells_csv(out / "cells.csv", result.thresholds, result.cells)
    n_err = sum(1 for r in result.records if r.status != "ok")
    _write_manifest(
        out, "sweep", args,
        {"config": cfg.echo(), "n_records": len(result.records), "n_errors": n_err},
    )
    print(f"{len(result.records)} records ({n_err} errors) written to {out}")
    return 0


def _cmd_fit(args) -> int:
    out = _outdir(args)
    thresholds, records = read_records_csv(args.records)
    transitions = fit_all_transitions(thresholds, records)
    transitions_to_json(transitions, out / "fits.json")
    rows = []
    for tr in transitions:
        rows.append(
            [
                tr.optimizer,
                tr.n,
                f"{tr.t:g}",
                "" if tr.sigma_star is None else repr(tr.sigma_star),
                "" if tr.m_star is None else repr(tr.m_star),
                "" if tr.sigma_res is None else repr(tr.sigma_res),
                int(tr.fit.censored),
            ]
        )
    _csv_dump(
        out / "sigma_star.csv",
        ["optimizer", "n", "t", "sigma_star", "m_star", "sigma_res", "censored"],
        rows,
    )
    t_target = args.threshold
    if t_target not in thresholds:
        raise ConfigError(f"threshold {t_target} not present in records ({thresholds})")
    tables = decay_tables(transitions, t_target)
    decay_tables_to_json(
        tables, t_target, out / "decay.json",
        ns_by_optimizer=decay_size_grids(transitions, t_target),
    )
    _write_manifest(
        out, "fit", args,
        {"records": str(args.records), "thresholds": thresholds, "decay_threshold": t_target},
    )
    print(
        f"{len(transitions)} transition fits, {sum(len(v) for v in tables.values())} "
        f"decay fits written to {out}"
    )
    return 0


def _cmd_project(args) -> int:
    out = _outdir(args)
    n_range = range(args.n_min, args.n_max + 1)
    if args.decay:
        tables = load_decay_tables(args.decay)
        if args.optimizer not in tables:
            raise ConfigError(f"optimizer {args.optimizer!r} not in {sorted(tables)}")
        if args.variance_fits:
            with open(args.variance_fits, "r", encoding="utf-8") as fh:
                vf = json.load(fh)
            var_entry = vf["kinds"][args.kind]["pl"]
            var_k, var_gamma = var_entry["k"], var_entry["gamma"]
        else:
            raise ConfigError("--decay also needs --variance-fits to convert units")
        models = {}
        for family, model in tables[args.optimizer].items():
            # tolerance = threshold / sqrt(variance): divide by sqrt(k n^-g)
            models[family] = DecayModel(
                family=family,
                k=model.k / np.sqrt(var_k),
                gamma=model.gamma,
                n_power=var_gamma / 2.0,
            )
    else:
        models = {fam: reference_tolerance_model(fam) for fam in ("exp", "pl", "log")}

    projections = {}
    rows = []
    for family, model in sorted(models.items()):
        table = project_shots(
            model, n_range, sampling_amp=args.sampling_amp, sampling_rate=args.sampling_rate
        )
        projections[family] = table
        for r in table.rows:
            rows.append(
                [family, r.n, repr(r.eps_star), repr(r.eps_fs_single_shot),
                 repr(r.shots_required), repr(r.shots_ceiling), int(r.feasible)]
            )
    _csv_dump(
        out / "projection.csv",
        ["family", "n", "eps_star", "eps_fs_single_shot", "shots_required",
         "shots_ceiling", "feasible"],
        rows,
    )
    hardware_curve = None
    if args.hardware_curve:
        hardware_curve = []
        with open(args.hardware_curve, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                n_str, eps_str = line.split(",")[:2]
                hardware_curve.append([int(n_str), float(eps_str)])
    data = {
        "schema": PROJECTION_SCHEMA,
        "iterations": 20,
        "calls_per_iteration": "1+2n",
        "sampling_amp": args.sampling_amp,
        "sampling_rate": args.sampling_rate,
        "families": {
            family: {
                "model": {"k": m.k, "gamma": m.gamma, "n_power": m.n_power},
                "window_open_n": projections[family].window_open_n,
                "crossover": projections[family].crossover,
                "rows": [
                    {
                        "n": r.n,
                        "eps_star": r.eps_star,
                        "eps_fs_single_shot": r.eps_fs_single_shot,
                        "shots_required": r.shots_required,
                        "shots_ceiling": r.shots_ceiling,
                        "feasible": r.feasible,
                    }
                    for r in projections[family].rows
                ],
            }
            for family, m in sorted(models.items())
        },
        "hardware_curve": hardware_curve,
        "runtime_example": {
            "n": args.n_max,
            "depth": 1,
            "t_gate_s": 100e-9,
            "bound_s": {
                family: runtime_lower_bound(
                    projections[family].rows[-1].shots_required,
                    20 * (1 + 2 * args.n_max),
                    1,
                    100e-9,
                )
                for family in projections
            },
        },
    }
    with open(out / "projection.json", "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out, "project", args, {"n_range": [args.n_min, args.n_max]})
    for family, table in sorted(projections.items()):
        window = table.window_open_n
        print(f"{family}: window {'opens at n=' + str(window) if window else 'never opens'}")
    return 0


def _cmd_profile(args) -> int:
    out = _outdir(args)
    cfg = _load_or_default(args)
    if args.mode == "solution-space":
        thresholds = [float(t) for t in args.thresholds.split(",")]
        rows = []
        hists = []
        for idx in range(args.instances):
            seed = derive_seed(cfg.master_seed, "instance", args.n, idx)
            m = qubo_to_ising(generate_random_qubo(args.n, seed))
            prof = solution_space_profile(m, thresholds)
            rows.append([idx, seed] + [repr(prof.fractions[t]) for t in thresholds])
            hists.append(prof.hist_density)
        _csv_dump(
            out / "profile.csv",
            ["instance_index", "instance_seed"] + [f"p_t{t:g}" for t in thresholds],
            rows,
        )
        mean_hist = np.mean(np.array(hists), axis=0)
        edges = np.linspace(-1.0, 1.0, mean_hist.size + 1)
        with open(out / "profile_hist.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "schema": PROFILE_SCHEMA,
                    "n": args.n,
                    "instances": args.instances,
                    "thresholds": thresholds,
                    "hist_edges": edges.tolist(),
                    "hist_density_mean": mean_hist.tolist(),
                },
                fh,
                indent=1,
                sort_keys=True,
            )
            fh.write("\n")
        _write_manifest(out, "profile", args, {"mode": args.mode, "n": args.n})
        print(f"solution-space profile over {args.instances} instances written to {out}")
        return 0

    # shot-error mode
    shots_grid = [int(s) for s in args.shots_grid.split(",")]
    n_grid = _parse_grid(args.size_grid)

    def builder(n):
        seed = derive_seed(cfg.master_seed, "instance", n, 0)
        return build_loss(args.kind, qubo_to_ising(generate_random_qubo(n, seed)))

    scan = fs_error_scan(
        builder,
        shots_grid,
        n_grid,
        args.samples,
        derive_rng(cfg.master_seed, "fs-error", args.kind),
        fixed_n=args.fixed_n,
        fixed_shots=args.fixed_shots,
    )
    rows = [["shots", s, repr(r)] for s, r in zip(scan.shots_grid, scan.rae_vs_shots)]
    rows += [["size", n, repr(r)] for n, r in zip(scan.n_grid, scan.rae_vs_n)]
    _csv_dump(out / "fs_error.csv", ["axis", "value", "rae"], rows)
    f_fixed = builder(args.fixed_n)
    profile = error_decomposition(
        f_fixed,
        n_points=args.error_points,
        samples_per_point=args.error_samples,
        n_shots=args.fixed_shots,
        rng=derive_rng(cfg.master_seed, "error-decomposition", args.kind),
    )
    with open(out / "error_profile.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "schema": FS_SCHEMA,
                "kind": args.kind,
                "fixed_n": args.fixed_n,
                "fixed_shots": args.fixed_shots,
                "loglog_slope": scan.loglog_slope,
                "loglog_amp": scan.loglog_amp,
                "exp_rate": scan.exp_rate,
                "exp_amp": scan.exp_amp,
                "anchor_rae": scan.anchor_rae,
                "model_amp": scan.model_amp,
                "decomposition": {
                    "slope": profile.slope,
                    "intercept": profile.intercept,
                    "point_abs_loss": profile.point_abs_loss.tolist(),
                    "point_error_std": profile.point_error_std.tolist(),
                    "hist_edges": profile.hist_edges.tolist(),
                    "hist_density": profile.hist_density.tolist(),
                    "overlay_std": profile.overlay_std,
                    "err_mean": profile.err_mean,
                    "err_skewness": profile.err_skewness,
                },
            },
            fh,
            indent=1,
            sort_keys=True,
        )
        fh.write("\n")
    _write_manifest(out, "profile", args, {"mode": args.mode, "kind": args.kind})
    print(
        f"shot-error profile written to {out} "
        f"(log-log slope {scan.loglog_slope:.3f}, anchor {scan.anchor_rae:.4f})"
    )
    return 0


def _cmd_validate(args) -> int:
    from .validation import run_validation

    results = run_validation(fast=args.fast)
    width = max(len(name) for name, _, _ in results)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"{status}  {name:<{width}}  {detail}")
        failed += not ok
    if failed:
        print(f"{failed} check(s) failed")
        return 2
    print(f"all {len(results)} checks passed")
    return 0


def _parse_grid(text: str) -> list[int]:
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vqnoise", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"vqnoise {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit seeded random QUBO instances")
    p.add_argument("--n", type=int, required=True, help="number of binary variables")
    p.add_argument("--seed", type=int, default=2024, help="base seed")
    p.add_argument("--count", type=int, default=1, help="number of instances")
    p.add_argument("--format", choices=("text", "json", "both"), default="both")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("variance", help="landscape variance against system size")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--kinds", default="benqo,vqe2l,qaoa", help="comma list of loss kinds")
    p.add_argument("--n-grid", help="sizes, e.g. 3-12 or 4,6,8")
    p.add_argument("--samples", type=int, default=10000, help="parameter samples per point")
    p.add_argument("--fit-min-n", type=int, default=8, help="smallest size entering decay fits")
    p.add_argument("--no-gradients", action="store_true", help="skip derivative variances")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(fn=_cmd_variance)

    p = sub.add_parser("sweep", help="run the full experiment sweep")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--workers", type=int, help="worker processes (default 1 or $VQNOISE_WORKERS)")
    p.add_argument("--dry-run", action="store_true", help="print the cell plan and exit")
    p.add_argument("--timings", action="store_true", help="also write wall-time sidecar")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("fit", help="fit transitions and decay tables from records")
    p.add_argument("--records", required=True, help="records.csv from a sweep")
    p.add_argument("--threshold", type=float, default=1.0, help="threshold for decay tables")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("project", help="shot-requirement projections")
    p.add_argument("--n-min", type=int, default=10)
    p.add_argument("--n-max", type=int, default=40)
    p.add_argument("--decay", help="decay.json from `fit` (default: reference calibration)")
    p.add_argument("--optimizer", default="ngd", help="optimizer column of --decay")
    p.add_argument("--variance-fits", help="variance_fits.json from `variance`")
    p.add_argument("--kind", default="benqo", help="loss kind for the variance conversion")
    p.add_argument("--sampling-amp", type=float, default=4.0,
                   help="single-shot sampling-error amplitude")
    p.add_argument("--sampling-rate", type=float, default=0.04,
                   help="sampling-error growth rate per size")
    p.add_argument("--hardware-curve", help="optional CSV of n,epsilon hardware errors to echo")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(fn=_cmd_project)

    p = sub.add_parser("profile", help="solution-space or shot-error profiles")
    p.add_argument("--mode", choices=("solution-space", "shot-error"), default="solution-space")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--n", type=int, default=10, help="system size (solution-space mode)")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--thresholds", default="1.0,0.99,0.95,0.9,0.8,0.5")
    p.add_argument("--kind", default="benqo", help="loss kind (shot-error mode)")
    p.add_argument("--shots-grid", default="64,128,256,512,1024,2048,4096,8192,16384")
    p.add_argument("--size-grid", default="3-12")
    p.add_argument("--samples", type=int, default=1000, help="evaluations per grid point")
    p.add_argument("--fixed-n", type=int, default=10)
    p.add_argument("--fixed-shots", type=int, default=1024)
    p.add_argument("--error-points", type=int, default=100)
    p.add_argument("--error-samples", type=int, default=1000)
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(fn=_cmd_profile)

    p = sub.add_parser("validate", help="run built-in oracle and invariant checks")
    p.add_argument("--fast", action="store_true", help="smaller check sizes")
    p.set_defaults(fn=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"vqnoise: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"vqnoise: unexpected failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
