import numpy as np
import pytest

from vqnoise.exceptions import DegenerateProblemError
from vqnoise.metrics import (
    approximation_index,
    approximation_ratio,
    most_probable_state,
    normalized_approximation_ratio,
    solvability,
)
from vqnoise.problems import (
    IsingModel,
    brute_force_solve,
    cmax_bound,
    energy_table,
    generate_random_qubo,
    qubo_to_ising,
)


@pytest.fixture
def model():
    return qubo_to_ising(generate_random_qubo(4, seed=21))


class TestApproximationRatio:
    def test_optimum_is_one(self, model):
        res = brute_force_solve(model)
        assert approximation_ratio(res.argmin[0], model) == pytest.approx(1.0)

    def test_tiny_example_hand_checked(self, tiny_ising):
        # enumeration oracle: energies of "00","01","10","11" vs the bound
        table = energy_table(tiny_ising)
        c_min, c_max = table.min(), cmax_bound(tiny_ising)
        expected = (table[int("10", 2)] - c_max) / (c_min - c_max)
        assert approximation_ratio("10", tiny_ising) == pytest.approx(expected)

    def test_scaling_invariance(self, model):
        scaled = IsingModel(
            n=model.n,
            couplings={k: 3.0 * v for k, v in model.couplings.items()},
            fields=3.0 * np.asarray(model.fields),
            offset=3.0 * model.offset,
        )
        for bits in ("0000", "0110", "1111"):
            assert approximation_ratio(bits, scaled) == pytest.approx(
                approximation_ratio(bits, model)
            )

    def test_degenerate_rejected(self):
        m = IsingModel(n=2, couplings={}, fields=np.zeros(2))
        with pytest.raises(DegenerateProblemError):
            approximation_ratio("00", m)

    def test_normalized_variant_optimum_is_one(self, model):
        res = brute_force_solve(model)
        assert normalized_approximation_ratio(res.argmin[0], model) == pytest.approx(1.0)


class TestMostProbableState:
    def test_simple_argmax(self):
        assert most_probable_state({"00": 0.1, "01": 0.7, "10": 0.2}) == "01"

    def test_tie_breaks_to_lowest_value(self):
        assert most_probable_state({"0": 0.5, "1": 0.5}) == "0"
        assert most_probable_state({"11": 0.5, "10": 0.5}) == "10"

    def test_point_mass(self):
        assert most_probable_state({"101": 1.0}) == "101"

    def test_renormalization_invariant(self):
        dist = {"00": 0.2, "01": 0.5, "10": 0.3}
        doubled = {k: 2 * v for k, v in dist.items()}
        assert most_probable_state(dist) == most_probable_state(doubled)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            most_probable_state({})


class TestApproximationIndex:
    def test_above_threshold(self, model):
        res = brute_force_solve(model)
        assert approximation_index(res.argmin[0], model, 0.95) == 1

    def test_exact_optimum_at_t_one(self, model):
        res = brute_force_solve(model)
        assert approximation_index(res.argmin[0], model, 1.0) == 1

    def test_non_optimum_fails_t_one(self, model):
        res = brute_force_solve(model)
        table = energy_table(model)
        worst = int(np.argmax(table))
        bits = format(worst, f"0{model.n}b")
        assert bits not in res.argmin
        assert approximation_index(bits, model, 1.0) == 0

    def test_threshold_validation(self, model):
        with pytest.raises(ValueError):
            approximation_index("0000", model, 1.5)


class TestSolvability:
    def test_half(self):
        stat = solvability([1] * 50 + [0] * 50, t=1.0)
        assert stat.p_hat == 0.5
        assert stat.std_err == pytest.approx(0.05)
        assert stat.n_runs == 100

    def test_all_ones(self):
        stat = solvability([1] * 10)
        assert stat.p_hat == 1.0 and stat.std_err == 0.0

    def test_monotone_in_threshold(self, model):
        # success indicators over thresholds are monotone for one run set
        rng = np.random.default_rng(0)
        table = energy_table(model)
        res = brute_force_solve(model)
        bits = [format(int(rng.integers(0, 16)), "04b") for _ in range(50)]
        p_by_t = []
        for t in (1.0, 0.99, 0.9, 0.5):
            succ = [approximation_index(b, model, t, c_min=res.c_min) for b in bits]
            p_by_t.append(solvability(succ, t=t).p_hat)
        assert all(a <= b for a, b in zip(p_by_t, p_by_t[1:]))

    def test_validation(self):
        with pytest.raises(ValueError):
            solvability([])
        with pytest.raises(ValueError):
            solvability([0, 2])
