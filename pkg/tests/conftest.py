import numpy as np
import pytest

from vqnoise.problems import QuboInstance, qubo_to_ising


@pytest.fixture
def tiny_qubo():
    """The 2x2 worked example used across modules."""
    return QuboInstance(n=2, q=np.array([[-2.0, 3.0], [3.0, -4.0]]))


@pytest.fixture
def tiny_ising(tiny_qubo):
    return qubo_to_ising(tiny_qubo)


def all_assignments(n):
    """All binary assignment vectors of length n, as an array (2^n, n)."""
    idx = np.arange(1 << n)
    return (idx[:, None] >> np.arange(n)) & 1
