"""One command per figure kind, each reading artifacts and writing one image."""

from __future__ import annotations

import argparse
import sys

from . import render
from .io import SchemaError


def _run(fn, args) -> int:
    try:
        out = fn(args)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


def main_variance(argv=None) -> int:
    p = argparse.ArgumentParser(description="variance-vs-size figure")
    p.add_argument("variance_csv")
    p.add_argument("out")
    p.add_argument("--fits", help="variance_fits.json overlay")
    a = p.parse_args(argv)
    return _run(lambda a: render.render_variance(a.variance_csv, a.out, fits_json=a.fits), a)


def main_grid(argv=None) -> int:
    p = argparse.ArgumentParser(description="success-probability contour grid")
    p.add_argument("cells_csv")
    p.add_argument("out")
    a = p.parse_args(argv)
    return _run(lambda a: render.render_grid(a.cells_csv, a.out), a)


def main_sigmoid(argv=None) -> int:
    p = argparse.ArgumentParser(description="solvability transition with tanh fit")
    p.add_argument("cells_csv")
    p.add_argument("fits_json")
    p.add_argument("out")
    p.add_argument("--optimizer")
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=float)
    a = p.parse_args(argv)
    return _run(
        lambda a: render.render_sigmoid(
            a.cells_csv, a.fits_json, a.out, optimizer=a.optimizer, n=a.n, t=a.t
        ),
        a,
    )


def main_decay(argv=None) -> int:
    p = argparse.ArgumentParser(description="threshold-location decay with family fits")
    p.add_argument("sigma_star_csv")
    p.add_argument("decay_json")
    p.add_argument("out")
    p.add_argument("--optimizer")
    a = p.parse_args(argv)
    return _run(
        lambda a: render.render_decay(a.sigma_star_csv, a.decay_json, a.out, optimizer=a.optimizer),
        a,
    )


def main_projection(argv=None) -> int:
    p = argparse.ArgumentParser(description="shot requirements vs disadvantage ceiling")
    p.add_argument("projection_json")
    p.add_argument("out")
    a = p.parse_args(argv)
    return _run(lambda a: render.render_projection(a.projection_json, a.out), a)


def main_profile(argv=None) -> int:
    p = argparse.ArgumentParser(description="solution-space profile figure")
    p.add_argument("profile_csv")
    p.add_argument("hist_json")
    p.add_argument("out")
    a = p.parse_args(argv)
    return _run(lambda a: render.render_profile(a.profile_csv, a.hist_json, a.out), a)
