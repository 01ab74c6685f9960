"""Built-in oracle and invariant checks behind the `validate` command."""

from __future__ import annotations

import numpy as np

from .fitting import fit_decay, fit_tanh, resilience_metrics, tanh_curve
from .losses import build_loss, exact_loss, gradient, normalized_loss
from .noise import NoiseSpec, noisy_loss, rae
from .problems import (
    brute_force_solve,
    cmax_bound,
    energy_table,
    generate_random_qubo,
    qubo_to_ising,
)
from .simstate import apply_ry, zero_state

__all__ = ["run_validation"]


def _check_energy_equivalence(fast: bool):
    n_max, seeds = (6, 5) if fast else (10, 20)
    for n in range(1, n_max + 1):
        for seed in range(seeds):
            inst = generate_random_qubo(n, seed=seed * 101 + n)
            m = qubo_to_ising(inst)
            table = energy_table(m, include_offset=True)
            idx = np.arange(1 << n)
            xs = 1 - ((idx[:, None] >> np.arange(n)) & 1)
            quad = np.einsum("bi,ij,bj->b", xs, inst.q, xs)
            if not np.allclose(quad, table, atol=1e-9):
                return False, f"quadratic form mismatch at n={n} seed={seed}"
    return True, f"n up to {n_max}, {seeds} seeds each, every basis state"


def _check_gradients(fast: bool):
    kinds = ("benqo", "vqe2l") if fast else ("benqo", "vqe2l", "qaoa")
    for kind in kinds:
        n = 4
        f = build_loss(kind, qubo_to_ising(generate_random_qubo(n, seed=5)))
        rng = np.random.default_rng(1)
        for _ in range(3 if fast else 10):
            theta = rng.uniform(-2 * np.pi, 2 * np.pi, n)
            g = gradient(f, theta)
            h = 1e-5
            fd = np.empty(n)
            for i in range(n):
                up, dn = theta.copy(), theta.copy()
                up[i] += h
                dn[i] -= h
                fd[i] = (exact_loss(f, up) - exact_loss(f, dn)) / (2 * h)
            if np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-9) > 1e-6:
                return False, f"gradient mismatch for {kind}"
    return True, f"{len(kinds)} loss kinds vs central differences"


def _check_norms(fast: bool):
    s = zero_state(4)
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = apply_ry(s, rng.uniform(-np.pi, np.pi), int(rng.integers(0, 4)))
        if abs(s.norm() - 1.0) > 1e-12:
            return False, "norm drift"
    return True, "norm preserved over 20 rotations"


def _check_bounds(fast: bool):
    for seed in range(3 if fast else 10):
        m = qubo_to_ising(generate_random_qubo(6, seed=seed))
        res = brute_force_solve(m)
        if cmax_bound(m) < res.c_max_attained - 1e-9:
            return False, f"bound below attained maximum at seed={seed}"
        f = build_loss("benqo", m)
        rng = np.random.default_rng(seed)
        for _ in range(20):
            v = normalized_loss(f, rng.uniform(-2 * np.pi, 2 * np.pi, 6))
            if not -1.0 <= v <= 1.0:
                return False, "normalized loss left [-1, 1]"
    return True, "energy bound and loss normalization"


def _check_noise(fast: bool):
    f = build_loss("benqo", qubo_to_ising(generate_random_qubo(4, seed=3)))
    rng = np.random.default_rng(4)
    theta = rng.uniform(-2, 2, 4)
    exact = normalized_loss(f, theta)
    n = 2000 if fast else 20000
    draws = np.array([noisy_loss(f, theta, NoiseSpec.gaussian(0.2), rng) for _ in range(n)])
    if abs(draws.mean() - exact) > 4 * 0.2 / np.sqrt(n):
        return False, "gaussian channel is biased"
    a = rae([0.0, 1.0, 2.0], [0.1, 1.1, 2.1])
    if abs(a - 0.15) > 1e-12:
        return False, "relative absolute error arithmetic"
    return True, "gaussian channel moments and error metric"


def _check_fits(fast: bool):
    sigmas = np.logspace(-3, 1, 16)
    p = tanh_curve(np.log(sigmas), 1.0, 0.0, 2.0, 1.0)
    fit = fit_tanh(sigmas, p)
    prof = resilience_metrics(fit)
    if abs(prof.sigma_star - np.exp(0.5)) > 1e-4:
        return False, "transition location not recovered"
    ns = np.arange(3, 11)
    model = fit_decay(ns, 5.0 * ns ** (-2.0), "pl")
    if abs(model.k - 5.0) > 1e-5 or abs(model.gamma - 2.0) > 1e-5:
        return False, "decay parameters not recovered"
    return True, "synthetic transition and decay recovery"


CHECKS = [
    ("energy-equivalence", _check_energy_equivalence),
    ("gradients-vs-finite-differences", _check_gradients),
    ("state-norms", _check_norms),
    ("bounds-and-normalization", _check_bounds),
    ("noise-channels", _check_noise),
    ("fit-recovery", _check_fits),
]


def run_validation(fast: bool = False):
    """Run every check; returns a list of (name, passed, detail)."""
    results = []
    for name, check in CHECKS:
        try:
            ok, detail = check(fast)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results
