import json
from pathlib import Path

import numpy as np
import pytest

from vqfigures.cli import (
    main_decay,
    main_grid,
    main_profile,
    main_projection,
    main_sigmoid,
    main_variance,
)
from vqfigures.io import SchemaError, load_schema_csv, load_schema_json
from vqfigures.render import (
    projection_boundary,
    render_decay,
    render_grid,
    render_profile,
    render_projection,
    render_sigmoid,
    render_variance,
)

DATA = Path(__file__).parent / "data" / "toy"


def assert_image(path):
    path = Path(path)
    assert path.exists()
    assert path.stat().st_size > 1000


class TestRenderAllKinds:
    def test_variance(self, tmp_path):
        out = render_variance(DATA / "variance.csv", tmp_path / "variance.png",
                              fits_json=DATA / "variance_fits.json")
        assert_image(out)

    def test_grid(self, tmp_path):
        assert_image(render_grid(DATA / "cells.csv", tmp_path / "grid.png"))

    def test_sigmoid(self, tmp_path):
        out = render_sigmoid(DATA / "cells.csv", DATA / "fits.json", tmp_path / "sigmoid.png",
                             optimizer="ngd", n=3, t=1.0)
        assert_image(out)

    def test_decay(self, tmp_path):
        out = render_decay(DATA / "sigma_star.csv", DATA / "decay.json", tmp_path / "decay.png")
        assert_image(out)

    def test_projection(self, tmp_path):
        assert_image(render_projection(DATA / "projection.json", tmp_path / "projection.png"))

    def test_profile(self, tmp_path):
        out = render_profile(DATA / "profile.csv", DATA / "profile_hist.json",
                             tmp_path / "profile.png")
        assert_image(out)

    def test_svg_output(self, tmp_path):
        assert_image(render_projection(DATA / "projection.json", tmp_path / "projection.svg"))


class TestProjectionBoundary:
    def test_matches_independent_recomputation(self):
        # oracle: the ceiling is 2**n / (iters * (1 + 2n)) with the artifact's
        # call model; the rendered boundary must match to plotting precision
        data = load_schema_json(DATA / "projection.json", "projection")
        assert data["calls_per_iteration"] == "1+2n"
        iters = data["iterations"]
        ns, ceiling = projection_boundary(DATA / "projection.json")
        expected = 2.0 ** ns.astype(float) / (iters * (1.0 + 2.0 * ns))
        assert np.allclose(ceiling, expected, rtol=1e-12)

    def test_all_families_share_the_boundary(self):
        data = load_schema_json(DATA / "projection.json", "projection")
        tables = [
            [r["shots_ceiling"] for r in entry["rows"]]
            for entry in data["families"].values()
        ]
        for other in tables[1:]:
            assert other == tables[0]


class TestSchemaChecks:
    def test_wrong_schema_named_in_error(self, tmp_path):
        bad = tmp_path / "cells.csv"
        bad.write_text("# schema=vqnoise.v999.cells\noptimizer\nngd\n")
        with pytest.raises(SchemaError) as err:
            load_schema_csv(bad, "cells")
        assert "vqnoise.v1.cells" in str(err.value)

    def test_wrong_json_schema(self, tmp_path):
        bad = tmp_path / "projection.json"
        bad.write_text(json.dumps({"schema": "something.else", "families": {}}))
        with pytest.raises(SchemaError) as err:
            load_schema_json(bad, "projection")
        assert "vqnoise.v1.projection" in str(err.value)

    def test_renderer_propagates_schema_error(self, tmp_path):
        bad = tmp_path / "cells.csv"
        bad.write_text("# schema=vqnoise.v999.cells\noptimizer\nngd\n")
        with pytest.raises(SchemaError):
            render_grid(bad, tmp_path / "out.png")


class TestCli:
    def test_every_command(self, tmp_path):
        assert main_variance([str(DATA / "variance.csv"), str(tmp_path / "a.png"),
                              "--fits", str(DATA / "variance_fits.json")]) == 0
        assert main_grid([str(DATA / "cells.csv"), str(tmp_path / "b.png")]) == 0
        assert main_sigmoid([str(DATA / "cells.csv"), str(DATA / "fits.json"),
                             str(tmp_path / "c.png")]) == 0
        assert main_decay([str(DATA / "sigma_star.csv"), str(DATA / "decay.json"),
                           str(tmp_path / "d.png")]) == 0
        assert main_projection([str(DATA / "projection.json"), str(tmp_path / "e.png")]) == 0
        assert main_profile([str(DATA / "profile.csv"), str(DATA / "profile_hist.json"),
                             str(tmp_path / "f.png")]) == 0
        assert all((tmp_path / f"{s}.png").stat().st_size > 1000 for s in "abcdef")

    def test_schema_error_exit_code(self, tmp_path):
        bad = tmp_path / "cells.csv"
        bad.write_text("# schema=nope\nx\n1\n")
        assert main_grid([str(bad), str(tmp_path / "out.png")]) == 2


class TestDeterminism:
    def test_same_inputs_same_bytes(self, tmp_path):
        a = render_projection(DATA / "projection.json", tmp_path / "one.png")
        b = render_projection(DATA / "projection.json", tmp_path / "two.png")
        assert Path(a).read_bytes() == Path(b).read_bytes()
