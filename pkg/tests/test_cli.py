import json

import numpy as np
import pytest

from vqnoise.cli import main
from vqnoise.problems import QuboInstance
from vqnoise.sweep import read_records_csv

CFG = """
[experiment]
master_seed = 5
loss = benqo
n_grid = 3
instances = 3
thresholds = 1.0, 0.95
output = {out}

[noise]
include_noiseless = true
gaussian = 0.01, 0.1, 1.0, 10.0

[optimizer.ngd]
k_max = 4
"""


def write_cfg(tmp_path, out):
    path = tmp_path / "exp.cfg"
    path.write_text(CFG.format(out=out))
    return str(path)


class TestGen:
    def test_writes_instances_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "gen"
        rc = main(["gen", "--n", "4", "--seed", "11", "--count", "2", "--out", str(out)])
        assert rc == 0
        txts = sorted(out.glob("*.txt"))
        assert len(txts) == 2
        inst = QuboInstance.from_text(txts[0].read_text())
        assert inst.n == 4
        manifest = json.loads((out / "gen.manifest.json").read_text())
        assert manifest["command"] == "gen"

    def test_single_instance_uses_seed_directly(self, tmp_path):
        out = tmp_path / "gen1"
        main(["gen", "--n", "3", "--seed", "42", "--count", "1", "--out", str(out)])
        inst = QuboInstance.from_text(next(out.glob("*.txt")).read_text())
        assert inst.seed == 42


class TestSweepCommand:
    def test_dry_run_prints_plan(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, tmp_path / "never")
        rc = main(["sweep", "--config", cfg, "--dry-run"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "5 cells" in text
        assert not (tmp_path / "never").exists()

    def test_sweep_writes_artifacts(self, tmp_path):
        out = tmp_path / "sweepout"
        cfg = write_cfg(tmp_path, out)
        rc = main(["sweep", "--config", cfg, "--quiet"])
        assert rc == 0
        thresholds, records = read_records_csv(out / "records.csv")
        assert thresholds == [1.0, 0.95]
        assert len(records) == 5 * 3
        assert (out / "cells.csv").exists()
        assert (out / "records.json").exists()
        manifest = json.loads((out / "sweep.manifest.json").read_text())
        assert manifest["config"]["master_seed"] == 5

    def test_missing_config_is_runtime_error(self, tmp_path):
        assert main(["sweep", "--config", str(tmp_path / "nope.cfg")]) == 2

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["sweep", "--bogus"])
        assert err.value.code == 1


class TestFitAndProject:
    def test_fit_emits_schema_shaped_json(self, tmp_path):
        out = tmp_path / "o"
        cfg = write_cfg(tmp_path, out)
        assert main(["sweep", "--config", cfg, "--quiet"]) == 0
        rc = main(["fit", "--records", str(out / "records.csv"), "--out", str(out)])
        assert rc == 0
        fits = json.loads((out / "fits.json").read_text())
        assert fits["schema"].endswith(".fits")
        assert all("sigma_star" in tr for tr in fits["transitions"])
        decay = json.loads((out / "decay.json").read_text())
        assert decay["schema"].endswith(".decay")
        assert (out / "sigma_star.csv").exists()

    def test_project_reference_calibration(self, tmp_path):
        out = tmp_path / "proj"
        rc = main(["project", "--n-min", "10", "--n-max", "30", "--out", str(out)])
        assert rc == 0
        data = json.loads((out / "projection.json").read_text())
        assert data["families"]["pl"]["window_open_n"] == 25
        assert data["families"]["log"]["window_open_n"] == 21
        assert data["families"]["exp"]["window_open_n"] is None
        rows = data["families"]["pl"]["rows"]
        by_n = {r["n"]: r for r in rows}
        assert by_n[25]["feasible"] and not by_n[24]["feasible"]

    def test_project_with_hardware_curve(self, tmp_path):
        curve = tmp_path / "hw.csv"
        curve.write_text("# n,eps\n3,0.05\n6,0.09\n10,0.2\n")
        out = tmp_path / "proj2"
        rc = main(["project", "--out", str(out), "--hardware-curve", str(curve)])
        assert rc == 0
        data = json.loads((out / "projection.json").read_text())
        assert data["hardware_curve"] == [[3, 0.05], [6, 0.09], [10, 0.2]]


class TestProfileCommand:
    def test_solution_space(self, tmp_path):
        out = tmp_path / "prof"
        rc = main(
            ["profile", "--mode", "solution-space", "--n", "6", "--instances", "5",
             "--thresholds", "1.0,0.9,0.5", "--out", str(out)]
        )
        assert rc == 0
        lines = (out / "profile.csv").read_text().splitlines()
        assert lines[0].split(",")[2:] == ["p_t1", "p_t0.9", "p_t0.5"]
        assert len(lines) == 6
        hist = json.loads((out / "profile_hist.json").read_text())
        assert len(hist["hist_density_mean"]) == len(hist["hist_edges"]) - 1

    def test_shot_error(self, tmp_path):
        out = tmp_path / "fs"
        rc = main(
            ["profile", "--mode", "shot-error", "--kind", "benqo",
             "--shots-grid", "64,256,1024", "--size-grid", "3-6",
             "--samples", "60", "--fixed-n", "6", "--fixed-shots", "256",
             "--error-points", "10", "--error-samples", "100", "--out", str(out)]
        )
        assert rc == 0
        prof = json.loads((out / "error_profile.json").read_text())
        assert prof["kind"] == "benqo"
        assert prof["loglog_slope"] < 0
        assert (out / "fs_error.csv").exists()


class TestVariance:
    def test_variance_small(self, tmp_path):
        out = tmp_path / "var"
        rc = main(
            ["variance", "--kinds", "benqo,vqe2l", "--n-grid", "3,4", "--samples", "200",
             "--no-gradients", "--out", str(out)]
        )
        assert rc == 0
        lines = (out / "variance.csv").read_text().splitlines()
        assert len(lines) == 5


class TestValidate:
    def test_validate_fast_passes(self, capsys):
        rc = main(["validate", "--fast"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS" in out and "FAIL" not in out
