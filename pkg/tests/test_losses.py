import numpy as np
import pytest

from vqnoise.losses import (
    KINDS,
    build_loss,
    candidate_distribution,
    candidate_probabilities,
    exact_loss,
    expectation_u,
    gradient,
    loss_variance_scan,
    normalized_loss,
    prepare_state,
)
from vqnoise.problems import IsingModel, brute_force_solve, generate_random_qubo, qubo_to_ising
from vqnoise.simstate import probabilities


def make_loss(kind, n, seed=3):
    return build_loss(kind, qubo_to_ising(generate_random_qubo(n, seed=seed)))


def finite_difference_gradient(f, theta, h=1e-5):
    """Independent oracle: central differences on the exact loss."""
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for i in range(len(theta)):
        up = theta.copy()
        up[i] += h
        dn = theta.copy()
        dn[i] -= h
        grad[i] = (exact_loss(f, up) - exact_loss(f, dn)) / (2.0 * h)
    return grad


def corner_theta(index, n):
    """Angles theta_i in {0, pi} whose product state is basis state ``index``."""
    return np.array([np.pi if (index >> i) & 1 else 0.0 for i in range(n)])


class TestPrepareState:
    def test_benqo_zero_params(self):
        f = make_loss("benqo", 3)
        s = prepare_state(f, np.zeros(3))
        assert np.allclose(probabilities(s), np.eye(8)[0])

    def test_vqe2l_all_pi(self):
        f = make_loss("vqe2l", 3)
        s = prepare_state(f, np.full(3, np.pi))
        assert probabilities(s)[-1] == pytest.approx(1.0)

    def test_qaoa_zero_params_uniform(self):
        f = make_loss("qaoa", 4)
        s = prepare_state(f, np.zeros(4))
        assert np.allclose(probabilities(s), np.full(16, 1 / 16), atol=1e-12)

    def test_wrong_length_rejected(self):
        f = make_loss("benqo", 3)
        with pytest.raises(ValueError):
            prepare_state(f, np.zeros(4))

    def test_qaoa_odd_n_rejected(self):
        with pytest.raises(ValueError):
            make_loss("qaoa", 3)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            make_loss("foo", 3)


class TestExactLoss:
    def test_benqo_single_qubit_identity(self):
        # one spin with field c: at theta=0 the loss is exactly +c
        c = 3.7
        m = IsingModel(n=1, couplings={}, fields=np.array([c]))
        f = build_loss("benqo", m)
        assert exact_loss(f, [0.0]) == pytest.approx(c, abs=1e-12)
        assert exact_loss(f, [np.pi]) == pytest.approx(-c, abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_zero_model_zero_loss(self, kind):
        n = 4
        m = IsingModel(n=n, couplings={}, fields=np.zeros(n))
        f = build_loss(kind, m)
        rng = np.random.default_rng(0)
        for _ in range(5):
            theta = rng.uniform(-np.pi, np.pi, n)
            assert exact_loss(f, theta) == pytest.approx(0.0, abs=1e-12)
            assert normalized_loss(f, theta) == 0.0

    @pytest.mark.parametrize("kind", ["benqo", "vqe2l"])
    def test_basis_state_parameters_reproduce_energies(self, kind):
        f = make_loss(kind, 4, seed=8)
        for idx in range(16):
            loss = exact_loss(f, corner_theta(idx, 4))
            assert loss == pytest.approx(f.table[idx], abs=1e-9)

    def test_qaoa_zero_params_mean_energy(self):
        f = make_loss("qaoa", 4, seed=8)
        assert exact_loss(f, np.zeros(4)) == pytest.approx(f.table.mean(), abs=1e-9)

    def test_benqo_matches_explicit_reduction(self):
        # oracle: rebuild <U> from the product distribution and sin of scaled energies
        f = make_loss("benqo", 3, seed=4)
        rng = np.random.default_rng(1)
        for _ in range(10):
            theta = rng.uniform(-2 * np.pi, 2 * np.pi, 3)
            probs = candidate_probabilities(f, theta)
            u = probs @ np.sin(f.table / f.k_scale)
            assert exact_loss(f, theta) == pytest.approx(f.k_scale * np.arcsin(u), abs=1e-12)
            assert expectation_u(f, theta) == pytest.approx(u, abs=1e-12)


class TestNormalizedLoss:
    def test_minimum_corner_value(self):
        f = make_loss("benqo", 4, seed=2)
        res = brute_force_solve(f.ising)
        idx = int(res.argmin[0], 2)
        val = normalized_loss(f, corner_theta(idx, 4))
        assert val == pytest.approx(res.c_min / f.l_max, abs=1e-9)

    @pytest.mark.parametrize("kind", KINDS)
    def test_bounded(self, kind):
        f = make_loss(kind, 4, seed=6)
        rng = np.random.default_rng(3)
        for _ in range(200):
            v = normalized_loss(f, rng.uniform(-2 * np.pi, 2 * np.pi, 4))
            assert -1.0 <= v <= 1.0


class TestCandidateDistribution:
    def test_point_mass(self):
        f = make_loss("benqo", 3)
        dist = candidate_distribution(f, np.zeros(3))
        assert dist["000"] == pytest.approx(1.0)

    def test_uniform_qaoa(self):
        f = make_loss("qaoa", 4)
        dist = candidate_distribution(f, np.zeros(4))
        assert all(abs(p - 1 / 16) < 1e-12 for p in dist.values())

    @pytest.mark.parametrize("kind", KINDS)
    def test_sums_to_one(self, kind):
        f = make_loss(kind, 4, seed=5)
        rng = np.random.default_rng(4)
        total = sum(candidate_distribution(f, rng.uniform(-3, 3, 4)).values())
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_vqe2l_probabilities_match_full_circuit(self):
        f = make_loss("vqe2l", 4, seed=5)
        rng = np.random.default_rng(5)
        theta = rng.uniform(-np.pi, np.pi, 4)
        fast = candidate_probabilities(f, theta)
        full = probabilities(prepare_state(f, theta))
        assert np.allclose(fast, full, atol=1e-12)


class TestGradient:
    def test_single_qubit_analytic(self):
        # one spin, field 1: the two-local loss is exactly cos(theta)
        m = IsingModel(n=1, couplings={}, fields=np.array([1.0]))
        f = build_loss("vqe2l", m)
        for t in (-2.0, -0.5, 0.3, 1.7):
            assert exact_loss(f, [t]) == pytest.approx(np.cos(t), abs=1e-12)
            assert gradient(f, [t])[0] == pytest.approx(-np.sin(t), abs=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    def test_zero_model_zero_gradient(self, kind):
        m = IsingModel(n=4, couplings={}, fields=np.zeros(4))
        f = build_loss(kind, m)
        g = gradient(f, np.random.default_rng(0).uniform(-1, 1, 4))
        assert np.allclose(g, 0.0, atol=1e-12)

    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("n", [2, 4])
    def test_matches_finite_differences(self, kind, n):
        f = make_loss(kind, n, seed=n)
        rng = np.random.default_rng(n * 17 + len(kind))
        for _ in range(20):
            theta = rng.uniform(-2 * np.pi, 2 * np.pi, n)
            exact = gradient(f, theta)
            fd = finite_difference_gradient(f, theta)
            denom = max(np.max(np.abs(fd)), 1e-9)
            assert np.max(np.abs(exact - fd)) / denom < 1e-6

    def test_benqo_monotone_in_inner_expectation(self):
        # orderings of the loss and of <U> agree across random parameter pairs
        f = make_loss("benqo", 4, seed=12)
        rng = np.random.default_rng(6)
        for _ in range(50):
            a, b = rng.uniform(-2 * np.pi, 2 * np.pi, (2, 4))
            la, lb = exact_loss(f, a), exact_loss(f, b)
            ua, ub = expectation_u(f, a), expectation_u(f, b)
            assert (la - lb) * (ua - ub) >= 0.0


class TestVarianceScan:
    def test_zero_model_zero_variance(self):
        m = IsingModel(n=3, couplings={}, fields=np.zeros(3))
        f = build_loss("benqo", m)
        scan = loss_variance_scan(f, 50, rng=np.random.default_rng(0))
        assert scan.loss_variance == 0.0
        assert scan.grad_variance_mean == 0.0

    def test_matches_grid_quadrature_vqe2l_n2(self):
        # oracle: dense midpoint quadrature of the 2-parameter landscape
        f = make_loss("vqe2l", 2, seed=13)
        grid = 400
        pts = (np.arange(grid) + 0.5) / grid * 4 * np.pi - 2 * np.pi
        vals = np.array([[normalized_loss(f, [a, b]) for b in pts] for a in pts])
        true_var = vals.var()
        n_samples = 4000
        scan = loss_variance_scan(
            f, n_samples, rng=np.random.default_rng(1), include_gradients=False
        )
        samples = np.array(
            [
                normalized_loss(f, t)
                for t in np.random.default_rng(1).uniform(-2 * np.pi, 2 * np.pi, (n_samples, 2))
            ]
        )
        m4 = np.mean((samples - samples.mean()) ** 4)
        se = np.sqrt(max(m4 - samples.var() ** 2, 0.0) / n_samples)
        assert abs(scan.loss_variance - true_var) <= 3.0 * se

    def test_sample_count_validation(self):
        f = make_loss("benqo", 2)
        with pytest.raises(ValueError):
            loss_variance_scan(f, 1)
