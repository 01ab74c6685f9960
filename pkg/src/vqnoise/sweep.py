"""Seeded sweep execution over (optimizer x size x noise x instance).

Every run owns an RNG stream derived from the master seed and its cell
coordinates, so the full record set is a pure function of the
configuration: re-running with any worker count reproduces the output
byte for byte.  Problem instances are keyed by (master seed, size,
instance index) only, so all optimizers and noise levels see the same
instance set at a given size.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import derive_rng, derive_seed
from .config import SCHEMA_VERSION, ExperimentConfig
from .exceptions import ParseError
from .losses import build_loss, candidate_probabilities
from .metrics import SolvabilityStat, index_from_ratio, solvability
from .noise import NoiseSpec
from .optimizers import NoisyLossOracle, OptimizerSpec, init_params, run
from .problems import brute_force_solve, cmax_bound, generate_random_qubo, qubo_to_ising

__all__ = [
    "SweepRecord",
    "CellStat",
    "SweepResult",
    "run_sweep",
    "list_cells",
    "write_records_csv",
    "read_records_csv",
    "write_records_json",
    "read_records_json",
    "write_cells_csv",
    "read_cells_csv",
    "aggregate_cells",
]

WORKERS_ENV = "VQNOISE_WORKERS"
RECORDS_SCHEMA = f"{SCHEMA_VERSION}.records"
CELLS_SCHEMA = f"{SCHEMA_VERSION}.cells"


@dataclass(frozen=True)
class SweepRecord:
    """One optimization run inside one sweep cell."""

    optimizer: str
    loss_kind: str
    n: int
    noise_kind: str
    noise_index: int
    noise_value: float  # sigma or shot count; 0.0 for the noiseless column
    instance_index: int
    instance_seed: int
    successes: tuple[int, ...]  # aligned with the config's descending thresholds
    final_ratio: float
    best_loss: float
    n_calls: int
    status: str = "ok"
    error: str = ""
    events: dict = field(default_factory=dict)
    wall_time: float = 0.0  # excluded from canonical artifacts


@dataclass(frozen=True)
class CellStat:
    optimizer: str
    loss_kind: str
    n: int
    noise_kind: str
    noise_index: int
    noise_value: float
    stats: tuple[SolvabilityStat, ...]


@dataclass
class SweepResult:
    thresholds: list[float]
    records: list[SweepRecord]
    cells: list[CellStat]


def list_cells(cfg: ExperimentConfig):
    """Deterministic cell order: optimizer, then size, then noise point."""
    cells = []
    for opt_idx, opt in enumerate(cfg.optimizers):
        for n in cfg.n_grid:
            for noise_idx, noise in enumerate(cfg.noise_grid):
                cells.append((opt_idx, opt, n, noise_idx, noise))
    return cells


def _run_one_instance(
    cfg_seed: int,
    loss_kind: str,
    thresholds,
    opt_idx: int,
    opt: OptimizerSpec,
    n: int,
    noise_idx: int,
    noise: NoiseSpec,
    instance_index: int,
) -> SweepRecord:
    instance_seed = derive_seed(cfg_seed, "instance", n, instance_index)
    started = time.perf_counter()
    base = dict(
        optimizer=opt.label(),
        loss_kind=loss_kind,
        n=n,
        noise_kind=noise.kind,
        noise_index=noise_idx,
        noise_value=float(noise.sigma if noise.kind == "gaussian" else noise.n_shots),
        instance_index=instance_index,
        instance_seed=instance_seed,
    )
    try:
        qubo = generate_random_qubo(n, instance_seed)
        ising = qubo_to_ising(qubo)
        loss = build_loss(loss_kind, ising)
        c_min = brute_force_solve(ising).c_min
        c_max = cmax_bound(ising)
        rng = derive_rng(cfg_seed, "run", opt_idx, opt.label(), n, noise_idx, instance_index)
        theta0 = init_params(n, rng)
        oracle = NoisyLossOracle(loss, noise, rng)
        result = run(opt, oracle, theta0)
        probs = candidate_probabilities(loss, result.theta_final)
        winner = int(np.argmax(probs))  # ties resolve to the lowest basis value
        ratio = (float(loss.table[winner]) - c_max) / (c_min - c_max)
        successes = tuple(index_from_ratio(ratio, t) for t in thresholds)
        return SweepRecord(
            **base,
            successes=successes,
            final_ratio=ratio,
            best_loss=result.best_loss,
            n_calls=result.n_calls,
            events=dict(sorted(result.events.items())),
            wall_time=time.perf_counter() - started,
        )
    except Exception as exc:  # record the failure, never abort the sweep
        return SweepRecord(
            **base,
            successes=tuple(0 for _ in thresholds),
            final_ratio=float("nan"),
            best_loss=float("nan"),
            n_calls=0,
            status="error",
            error=f"{type(exc).__name__}: {exc}",
            wall_time=time.perf_counter() - started,
        )


def _run_cell(args) -> list[SweepRecord]:
    cfg_seed, loss_kind, thresholds, instances, opt_idx, opt, n, noise_idx, noise = args
    return [
        _run_one_instance(
            cfg_seed, loss_kind, thresholds, opt_idx, opt, n, noise_idx, noise, idx
        )
        for idx in range(instances)
    ]


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else 1
    return max(1, workers)


def run_sweep(cfg: ExperimentConfig, workers: int | None = None, progress=None) -> SweepResult:
    """Execute the full sweep; output is independent of the worker count."""
    cells = list_cells(cfg)
    tasks = [
        (cfg.master_seed, cfg.loss_kind, tuple(cfg.thresholds), cfg.instances, *cell)
        for cell in cells
    ]
    workers = resolve_workers(workers)
    results: list[list[SweepRecord]]
    if workers == 1:
        results = []
        for i, task in enumerate(tasks):
            results.append(_run_cell(task))
            if progress:
                progress(i + 1, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = []
            for i, cell_records in enumerate(pool.map(_run_cell, tasks)):
                results.append(cell_records)
                if progress:
                    progress(i + 1, len(tasks))
    records = [rec for cell_records in results for rec in cell_records]
    records.sort(
        key=lambda r: (r.optimizer, r.n, r.noise_index, r.instance_index)
    )
    return SweepResult(
        thresholds=list(cfg.thresholds), records=records, cells=aggregate_cells(cfg.thresholds, records)
    )


def aggregate_cells(thresholds, records) -> list[CellStat]:
    """Per-cell solvability estimates (error rows excluded)."""
    groups: dict[tuple, list[SweepRecord]] = {}
    for rec in records:
        key = (rec.optimizer, rec.loss_kind, rec.n, rec.noise_kind, rec.noise_index, rec.noise_value)
        groups.setdefault(key, []).append(rec)
    cells = []
    for key in sorted(groups, key=lambda k: (k[0], k[2], k[4])):
        recs = [r for r in groups[key] if r.status == "ok"]
        if not recs:
            continue
        stats = tuple(
            replace(solvability([r.successes[i] for r in recs], t=t), t=t)
            for i, t in enumerate(thresholds)
        )
        cells.append(CellStat(*key, stats=stats))
    return cells


# ---------------------------------------------------------------------------
# persistence


def _threshold_column(t: float) -> str:
    return f"x_t{t:g}"


def _csv_lines(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def write_records_csv(path, thresholds, records, timings_path=None) -> None:
    """Write the canonical record table.

    Wall times are nondeterministic, so they go to the optional sidecar
    ``timings_path``; the canonical file is byte-reproducible.
    """
    header = [
        "optimizer",
        "loss_kind",
        "n",
        "noise_kind",
        "noise_index",
        "noise_value",
        "instance_index",
        "instance_seed",
        *(_threshold_column(t) for t in thresholds),
        "final_ratio",
        "best_loss",
        "n_calls",
        "status",
        "error",
        "events",
    ]
    rows = [header]
    for rec in records:
        rows.append(
            [
                rec.optimizer,
                rec.loss_kind,
                str(rec.n),
                rec.noise_kind,
                str(rec.noise_index),
                repr(rec.noise_value),
                str(rec.instance_index),
                str(rec.instance_seed),
                *(str(s) for s in rec.successes),
                repr(rec.final_ratio),
                repr(rec.best_loss),
                str(rec.n_calls),
                rec.status,
                rec.error.replace("\n", " "),
                json.dumps(rec.events, sort_keys=True, separators=(",", ":")),
            ]
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema={RECORDS_SCHEMA}\n")
        fh.write(_csv_lines(rows))
    if timings_path is not None:
        timing_rows = [["optimizer", "n", "noise_index", "instance_index", "wall_time"]]
        for rec in records:
            timing_rows.append(
                [rec.optimizer, str(rec.n), str(rec.noise_index), str(rec.instance_index), repr(rec.wall_time)]
            )
        with open(timings_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv_lines(timing_rows))


def read_records_csv(path) -> tuple[list[float], list[SweepRecord]]:
    """Load a record table, validating the embedded schema version."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema={RECORDS_SCHEMA}":
            raise ParseError(
                f"expected schema marker '# schema={RECORDS_SCHEMA}', found {first!r}", line=1
            )
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header row", line=2) from None
        thresholds = [float(col[3:]) for col in header if col.startswith("x_t")]
        records = []
        for ln_no, parts in enumerate(reader, start=3):
            if not parts:
                continue
            if len(parts) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(parts)}", line=ln_no
                )
            row = dict(zip(header, parts))
            try:
                records.append(
                    SweepRecord(
                        optimizer=row["optimizer"],
                        loss_kind=row["loss_kind"],
                        n=int(row["n"]),
                        noise_kind=row["noise_kind"],
                        noise_index=int(row["noise_index"]),
                        noise_value=float(row["noise_value"]),
                        instance_index=int(row["instance_index"]),
                        instance_seed=int(row["instance_seed"]),
                        successes=tuple(int(row[_threshold_column(t)]) for t in thresholds),
                        final_ratio=float(row["final_ratio"]),
                        best_loss=float(row["best_loss"]),
                        n_calls=int(row["n_calls"]),
                        status=row["status"],
                        error=row["error"],
                        events=json.loads(row["events"]) if row["events"] else {},
                    )
                )
            except (KeyError, ValueError) as exc:
                raise ParseError(str(exc), line=ln_no) from None
    return thresholds, records


def write_records_json(path, thresholds, records) -> None:
    data = {
        "schema": RECORDS_SCHEMA,
        "thresholds": list(thresholds),
        "records": [
            {
                "optimizer": r.optimizer,
                "loss_kind": r.loss_kind,
                "n": r.n,
                "noise_kind": r.noise_kind,
                "noise_index": r.noise_index,
                "noise_value": r.noise_value,
                "instance_index": r.instance_index,
                "instance_seed": r.instance_seed,
                "successes": list(r.successes),
                "final_ratio": None if np.isnan(r.final_ratio) else r.final_ratio,
                "best_loss": None if np.isnan(r.best_loss) else r.best_loss,
                "n_calls": r.n_calls,
                "status": r.status,
                "error": r.error,
                "events": r.events,
            }
            for r in records
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_records_json(path) -> tuple[list[float], list[SweepRecord]]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=exc.lineno) from None
    if data.get("schema") != RECORDS_SCHEMA:
        raise ParseError(
            f"expected schema {RECORDS_SCHEMA!r}, found {data.get('schema')!r}"
        )
    thresholds = [float(t) for t in data["thresholds"]]
    records = [
        SweepRecord(
            optimizer=d["optimizer"],
            loss_kind=d["loss_kind"],
            n=int(d["n"]),
            noise_kind=d["noise_kind"],
            noise_index=int(d["noise_index"]),
            noise_value=float(d["noise_value"]),
            instance_index=int(d["instance_index"]),
            instance_seed=int(d["instance_seed"]),
            successes=tuple(int(s) for s in d["successes"]),
            final_ratio=float("nan") if d["final_ratio"] is None else float(d["final_ratio"]),
            best_loss=float("nan") if d["best_loss"] is None else float(d["best_loss"]),
            n_calls=int(d["n_calls"]),
            status=d["status"],
            error=d["error"],
            events=d.get("events", {}),
        )
        for d in data["records"]
    ]
    return thresholds, records


def write_cells_csv(path, thresholds, cells) -> None:
    header = ["optimizer", "loss_kind", "n", "noise_kind", "noise_index", "noise_value", "n_runs"]
    for t in thresholds:
        header.append(f"p_t{t:g}")
        header.append(f"se_t{t:g}")
    rows = [header]
    for cell in cells:
        row = [
            cell.optimizer,
            cell.loss_kind,
            str(cell.n),
            cell.noise_kind,
            str(cell.noise_index),
            repr(cell.noise_value),
            str(cell.stats[0].n_runs if cell.stats else 0),
        ]
        for stat in cell.stats:
            row.append(repr(stat.p_hat))
            row.append(repr(stat.std_err))
        rows.append(row)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema={CELLS_SCHEMA}\n")
        fh.write(_csv_lines(rows))


def read_cells_csv(path):
    """Load the per-cell table into a list of plain dicts."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema={CELLS_SCHEMA}":
            raise ParseError(f"expected schema marker '# schema={CELLS_SCHEMA}'", line=1)
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header row", line=2) from None
        out = []
        for ln_no, parts in enumerate(reader, start=3):
            if not parts:
                continue
            if len(parts) != len(header):
                raise ParseError(f"expected {len(header)} fields, found {len(parts)}", line=ln_no)
            row = dict(zip(header, parts))
            for key, value in row.items():
                if key in ("n", "noise_index", "n_runs"):
                    row[key] = int(value)
                elif key == "noise_value" or key.startswith(("p_t", "se_t")):
                    row[key] = float(value)
            out.append(row)
    return out
