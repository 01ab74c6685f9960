import json

import numpy as np
import pytest

from vqnoise.config import ExperimentConfig, default_config, load_config, parse_config_text
from vqnoise.exceptions import ConfigError, ParseError
from vqnoise.noise import NoiseSpec
from vqnoise.optimizers import OptimizerSpec
from vqnoise.problems import brute_force_solve, generate_random_qubo, qubo_to_ising
from vqnoise.sweep import (
    aggregate_cells,
    list_cells,
    read_cells_csv,
    read_records_csv,
    read_records_json,
    run_sweep,
    write_cells_csv,
    write_records_csv,
    write_records_json,
)

CONFIG_TEXT = """
[experiment]
master_seed = 99
loss = benqo
n_grid = 3-4
instances = 5
thresholds = 1.0, 0.95
output = results

[noise]
include_noiseless = true
gaussian = 0.01, 1.0

[optimizer.ngd]
k_max = 4

[optimizer.nft]
sweeps = 2
"""


def small_config(**overrides):
    base = dict(
        master_seed=7,
        loss_kind="benqo",
        n_grid=[3],
        instances=4,
        thresholds=[1.0, 0.99, 0.95],
        noise_grid=[NoiseSpec.none(), NoiseSpec.gaussian(0.05), NoiseSpec.gaussian(5.0)],
        optimizers=[OptimizerSpec("ngd", {"k_max": 5})],
        output_dir="out",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_parse_text(self):
        cfg = parse_config_text(CONFIG_TEXT)
        assert cfg.master_seed == 99
        assert cfg.n_grid == [3, 4]
        assert cfg.instances == 5
        assert cfg.thresholds == [1.0, 0.95]
        assert cfg.output_dir == "results"
        assert [s.label() for s in cfg.noise_grid] == ["none", "gaussian:0.01", "gaussian:1.0"]
        assert [o.kind for o in cfg.optimizers] == ["ngd", "nft"]
        assert cfg.optimizers[0].options == {"k_max": 4}

    def test_json_equivalent(self, tmp_path):
        data = {
            "experiment": {
                "master_seed": 99,
                "loss": "benqo",
                "n_grid": [3, 4],
                "instances": 5,
                "thresholds": [1.0, 0.95],
                "output": "results",
            },
            "noise": {"include_noiseless": True, "gaussian": [0.01, 1.0]},
            "optimizers": {"ngd": {"k_max": 4}, "nft": {"sweeps": 2}},
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        via_json = load_config(str(path))
        via_text = parse_config_text(CONFIG_TEXT)
        assert via_json.echo() == via_text.echo()

    def test_logspace_helper(self):
        cfg = parse_config_text(
            "[experiment]\nn_grid = 3\n[noise]\ninclude_noiseless = false\n"
            "gaussian = logspace:1e-3,1e1,16\n"
        )
        levels = [s.sigma for s in cfg.noise_grid]
        assert len(levels) == 16
        assert levels[0] == pytest.approx(1e-3)
        assert levels[-1] == pytest.approx(10.0)

    def test_defaults(self):
        cfg = default_config()
        assert cfg.n_grid == list(range(3, 11))
        assert cfg.instances == 100
        assert cfg.thresholds == [1.0, 0.99, 0.95]
        assert len(cfg.noise_grid) == 17  # noiseless column + 16 levels

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("[experiment]\nbogus = 1\n")

    def test_bad_threshold_rejected(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(thresholds=[1.5])

    def test_plugin_optimizer_section(self):
        cfg = parse_config_text("[optimizer.cobyla]\nbudget = 300\n")
        assert cfg.optimizers[0].kind == "plugin"
        assert cfg.optimizers[0].plugin_name == "cobyla"


class TestRunSweep:
    def test_records_shape_and_counts(self):
        cfg = small_config()
        result = run_sweep(cfg)
        assert len(result.records) == len(list_cells(cfg)) * cfg.instances
        for rec in result.records:
            assert rec.status == "ok"
            assert rec.n_calls == (2 * 3 + 1) * 5
            # thresholds descending: success flags must be monotone nondecreasing
            assert rec.successes[0] <= rec.successes[1] <= rec.successes[2]

    def test_worker_counts_agree(self, tmp_path):
        cfg = small_config()
        a = run_sweep(cfg, workers=1)
        b = run_sweep(cfg, workers=2)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        write_records_csv(pa, a.thresholds, a.records)
        write_records_csv(pb, b.thresholds, b.records)
        assert pa.read_bytes() == pb.read_bytes()

    def test_same_instances_across_cells(self):
        cfg = small_config()
        result = run_sweep(cfg)
        seeds = {}
        for rec in result.records:
            key = (rec.n, rec.instance_index)
            seeds.setdefault(key, set()).add(rec.instance_seed)
        assert all(len(v) == 1 for v in seeds.values())

    def test_high_noise_near_random_guessing(self):
        cfg = small_config(
            instances=60,
            noise_grid=[NoiseSpec.gaussian(10.0)],
            optimizers=[OptimizerSpec("ngd", {"k_max": 5})],
        )
        result = run_sweep(cfg)
        stats = result.cells[0].stats[0]  # t = 1.0
        baseline = np.mean(
            [
                len(brute_force_solve(qubo_to_ising(generate_random_qubo(3, r.instance_seed))).argmin)
                / 2**3
                for r in result.records
            ]
        )
        se = max(stats.std_err, np.sqrt(baseline * (1 - baseline) / stats.n_runs))
        assert abs(stats.p_hat - baseline) <= 3 * se + 1e-9

    def test_cell_aggregation(self):
        cfg = small_config()
        result = run_sweep(cfg)
        cell = result.cells[0]
        assert cell.stats[0].n_runs == cfg.instances
        for stat, t in zip(cell.stats, cfg.thresholds):
            assert stat.t == t
            assert 0.0 <= stat.p_hat <= 1.0


class TestPersistence:
    def result(self):
        return run_sweep(small_config())

    def test_csv_round_trip(self, tmp_path):
        res = self.result()
        path = tmp_path / "records.csv"
        write_records_csv(path, res.thresholds, res.records)
        thresholds, records = read_records_csv(path)
        assert thresholds == res.thresholds
        stripped = [r.__class__(**{**r.__dict__, "wall_time": 0.0}) for r in res.records]
        assert records == stripped

    def test_json_round_trip(self, tmp_path):
        res = self.result()
        path = tmp_path / "records.json"
        write_records_json(path, res.thresholds, res.records)
        thresholds, records = read_records_json(path)
        assert thresholds == res.thresholds
        assert [r.instance_seed for r in records] == [r.instance_seed for r in res.records]
        assert [r.final_ratio for r in records] == [r.final_ratio for r in res.records]

    def test_empty_records_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_records_csv(path, [1.0, 0.95], [])
        thresholds, records = read_records_csv(path)
        assert thresholds == [1.0, 0.95]
        assert records == []

    def test_version_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# schema=vqnoise.v999.records\na,b\n")
        with pytest.raises(ParseError) as err:
            read_records_csv(path)
        assert "schema" in str(err.value)

    def test_malformed_row_reports_line(self, tmp_path):
        res = self.result()
        path = tmp_path / "records.csv"
        write_records_csv(path, res.thresholds, res.records)
        lines = path.read_text().splitlines()
        lines[3] = lines[3] + ",extra"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as err:
            read_records_csv(path)
        assert err.value.line == 4

    def test_cells_round_trip(self, tmp_path):
        res = self.result()
        path = tmp_path / "cells.csv"
        write_cells_csv(path, res.thresholds, res.cells)
        rows = read_cells_csv(path)
        assert len(rows) == len(res.cells)
        assert rows[0]["p_t1"] == res.cells[0].stats[0].p_hat

    def test_events_with_commas_round_trip(self, tmp_path):
        res = self.result()
        rec = res.records[0].__class__(
            **{**res.records[0].__dict__, "events": {"a": 1, "b": [1, 2]}}
        )
        path = tmp_path / "records.csv"
        write_records_csv(path, res.thresholds, [rec])
        _, records = read_records_csv(path)
        assert records[0].events == {"a": 1, "b": [1, 2]}


class TestAggregation:
    def test_error_rows_excluded(self):
        res = run_sweep(small_config())
        rec = res.records[0]
        bad = rec.__class__(**{**rec.__dict__, "status": "error", "successes": (1, 1, 1)})
        cells = aggregate_cells(res.thresholds, [rec, bad])
        assert cells[0].stats[0].n_runs == 1
