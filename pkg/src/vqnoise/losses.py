"""The three variational loss families over one spin model.

Supported kinds (all parameterized by exactly ``n`` angles):

* ``benqo``  - a product layer of RY rotations feeding a block-encoded
  cost operator read out through an ancilla.  Because the cost operator
  is diagonal, the ancilla statistics reduce analytically to

      <U>(theta) = sum_q p_q(theta) * sin(E_q / K),
      loss       = K * arcsin(<U>),

  with ``K = (2/pi) * max_q |E_q|`` so that every scaled eigenvalue lies
  in ``[-pi/2, pi/2]`` and ``arcsin(sin(.))`` is exact on eigenstates.
  The package simulates this reduction directly; an optional explicit
  circuit over ``n + 2`` qubits exists for cross-validation.
* ``vqe2l``  - one RY rotation per qubit followed by a linear CZ chain
  and a diagonal-cost measurement.  The CZ chain is diagonal, so it
  leaves measurement probabilities (and hence the loss) unchanged; it is
  kept in the prepared state for structural fidelity.
* ``qaoa``   - alternating diagonal-phase and transverse-mixer layers on
  the uniform superposition, with ``p = n/2`` layers and the angle order
  ``(gamma_1, beta_1, ..., gamma_p, beta_p)``.  Requires ``n`` even.

Losses are reported either raw (``exact_loss``) or normalized by the
largest absolute basis energy (``normalized_loss``), which bounds the
landscape within ``[-1, 1]`` for all three kinds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .problems import IsingModel, energy_table
from .simstate import (
    StateVector,
    apply_cz,
    apply_diagonal_phase,
    apply_rx,
    apply_ry,
    plus_state,
    probabilities,
    zero_state,
)

__all__ = [
    "KINDS",
    "LossFunction",
    "VarianceScan",
    "build_loss",
    "prepare_state",
    "exact_loss",
    "normalized_loss",
    "expectation_u",
    "candidate_probabilities",
    "candidate_distribution",
    "gradient",
    "loss_variance_scan",
]

KINDS = ("benqo", "vqe2l", "qaoa")


@dataclass(frozen=True)
class LossFunction:
    """Immutable descriptor binding an ansatz kind to a spin model."""

    kind: str
    ising: IsingModel
    table: np.ndarray = field(repr=False)
    l_max: float
    k_scale: float
    n: int
    n_params: int
    sin_table: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class VarianceScan:
    """Sampled landscape statistics at one system size."""

    n: int
    n_samples: int
    prange: tuple[float, float]
    loss_variance: float
    grad_variance_mean: float | None


def build_loss(kind: str, ising: IsingModel) -> LossFunction:
    """Construct a loss descriptor, precomputing the basis energy table."""
    if kind not in KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {KINDS}")
    n = ising.n
    if kind == "qaoa" and n % 2 != 0:
        raise ValueError(
            f"the layered ansatz uses n/2 phase-mixer layers, so n must be even; got n={n}"
        )
    table = energy_table(ising)
    l_max = float(np.abs(table).max())
    k_scale = (2.0 / np.pi) * l_max if l_max > 0.0 else 1.0
    sin_table = np.sin(table / k_scale)
    table.setflags(write=False)
    sin_table.setflags(write=False)
    return LossFunction(
        kind=kind,
        ising=ising,
        table=table,
        l_max=l_max,
        k_scale=k_scale,
        n=n,
        n_params=n,
        sin_table=sin_table,
    )


def _check_params(f: LossFunction, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (f.n_params,):
        raise ValueError(f"expected {f.n_params} parameters, got shape {theta.shape}")
    return theta


def _product_probabilities(theta: np.ndarray) -> np.ndarray:
    """Probabilities of the product state ``prod_i RY(theta_i)|0>``.

    Little-endian: qubit i is index bit i, so later qubits enter the
    tensor product on the left (slow axis).
    """
    cos_sq = np.cos(theta / 2.0) ** 2
    probs = np.array([1.0])
    for c in cos_sq:
        probs = (np.array([c, 1.0 - c])[:, None] * probs).ravel()
    return probs


def _qaoa_state(f: LossFunction, theta: np.ndarray) -> StateVector:
    s = plus_state(f.n)
    p_layers = f.n // 2
    for layer in range(p_layers):
        gamma, beta = theta[2 * layer], theta[2 * layer + 1]
        s = apply_diagonal_phase(s, gamma, f.table)
        for q in range(f.n):
            s = apply_rx(s, 2.0 * beta, q)
    return s


def prepare_state(f: LossFunction, theta) -> StateVector:
    """Prepared n-qubit candidate state for the given parameters.

    For ``benqo`` this is the rotational-layer state; the ancilla and
    block-encoding registers are handled analytically by the loss.
    """
    theta = _check_params(f, theta)
    if f.kind == "qaoa":
        return _qaoa_state(f, theta)
    s = zero_state(f.n)
    for q in range(f.n):
        s = apply_ry(s, theta[q], q)
    if f.kind == "vqe2l":
        for q in range(f.n - 1):
            s = apply_cz(s, q, q + 1)
    return s


def candidate_probabilities(f: LossFunction, theta) -> np.ndarray:
    """Basis-state probabilities of the candidate state (fast path).

    For the two product-layer kinds the diagonal entangler does not alter
    probabilities, so the product closed form is used.
    """
    theta = _check_params(f, theta)
    if f.kind == "qaoa":
        return probabilities(_qaoa_state(f, theta))
    return _product_probabilities(theta)


def candidate_distribution(f: LossFunction, theta) -> dict[str, float]:
    """Probability map keyed by bitstring."""
    probs = candidate_probabilities(f, theta)
    return {format(i, f"0{f.n}b"): float(p) for i, p in enumerate(probs)}


def expectation_u(f: LossFunction, theta) -> float:
    """Inner sinusoidal expectation ``<U> = sum_q p_q sin(E_q / K)``.

    Defined for the block-encoded kind; this is the quantity that is
    exactly sinusoidal in each parameter.
    """
    if f.kind != "benqo":
        raise ValueError("the ancilla expectation is only defined for the block-encoded kind")
    theta = _check_params(f, theta)
    return float(_product_probabilities(theta) @ f.sin_table)


def exact_loss(f: LossFunction, theta) -> float:
    """Noise-free loss value at ``theta`` (unnormalized energy units)."""
    theta = _check_params(f, theta)
    if f.kind == "benqo":
        u = float(_product_probabilities(theta) @ f.sin_table)
        if abs(u) > 1.0:
            raise AssertionError(f"ancilla expectation {u} left [-1, 1]; scaling invariant broken")
        return float(f.k_scale * np.arcsin(u))
    probs = candidate_probabilities(f, theta)
    return float(probs @ f.table)


def normalized_loss(f: LossFunction, theta) -> float:
    """Loss divided by the largest absolute basis energy; lies in [-1, 1]."""
    if f.l_max == 0.0:
        return 0.0
    return exact_loss(f, theta) / f.l_max


def _mixer_apply(amps: np.ndarray, k: int) -> np.ndarray:
    """Apply ``sum_i X_i`` to an amplitude vector."""
    out = np.zeros_like(amps)
    for q in range(k):
        a = amps.reshape(1 << (k - q - 1), 2, 1 << q)
        out += a[:, ::-1, :].reshape(-1)
    return out


def _qaoa_gradient(f: LossFunction, theta: np.ndarray) -> np.ndarray:
    """Exact derivative of the layered loss via statevector algebra.

    The two-point shift formula is not exact here (each angle drives many
    non-commuting frequency components), so the derivative state is
    propagated explicitly: differentiating layer ``l`` inserts ``-i H``
    after that layer's unitary, and ``dL = 2 Re <psi| C |dpsi>``.
    """
    n = f.n
    p_layers = n // 2

    def forward(insert_param: int | None) -> np.ndarray:
        s = plus_state(n)
        amps = s.amps
        for layer in range(p_layers):
            gamma, beta = theta[2 * layer], theta[2 * layer + 1]
            amps = amps * np.exp(-1j * gamma * f.table)
            if insert_param == 2 * layer:
                amps = -1j * f.table * amps
            sv = StateVector(amps, n, copy=False)
            for q in range(n):
                sv = apply_rx(sv, 2.0 * beta, q)
            amps = sv.amps
            if insert_param == 2 * layer + 1:
                amps = -1j * _mixer_apply(amps, n)
        return amps

    psi = forward(None)
    c_psi = f.table * psi
    grad = np.empty(n)
    for i in range(n):
        dpsi = forward(i)
        grad[i] = 2.0 * float(np.real(np.vdot(c_psi, dpsi)))
    return grad


def gradient(f: LossFunction, theta) -> np.ndarray:
    """Exact gradient of :func:`exact_loss`.

    * ``vqe2l``: per-parameter two-point rule with shifts of pi/2 (exact,
      the dependence is a single sinusoid per angle).
    * ``benqo``: the same rule applied to the inner expectation ``<U>``,
      chained through ``K * arcsin``; the outer loss itself is not
      shift-exact.
    * ``qaoa``: explicit statevector differentiation (see above).
    """
    theta = _check_params(f, theta)
    if f.kind == "qaoa":
        return _qaoa_gradient(f, theta)
    half_pi = np.pi / 2.0
    if f.kind == "vqe2l":
        grad = np.empty(f.n_params)
        for i in range(f.n_params):
            shifted = theta.copy()
            shifted[i] = theta[i] + half_pi
            plus = exact_loss(f, shifted)
            shifted[i] = theta[i] - half_pi
            minus = exact_loss(f, shifted)
            grad[i] = (plus - minus) / 2.0
        return grad
    # benqo
    u0 = float(_product_probabilities(theta) @ f.sin_table)
    u_plus = np.empty(f.n_params)
    u_minus = np.empty(f.n_params)
    for i in range(f.n_params):
        shifted = theta.copy()
        shifted[i] = theta[i] + half_pi
        u_plus[i] = float(_product_probabilities(shifted) @ f.sin_table)
        shifted[i] = theta[i] - half_pi
        u_minus[i] = float(_product_probabilities(shifted) @ f.sin_table)
    denom_sq = 1.0 - u0 * u0
    if denom_sq < 1e-15:
        # Conical point: the loss is not differentiable where the state
        # pins an extreme eigenvalue; report the finite shift quotient of
        # the outer loss instead.
        return f.k_scale * (np.arcsin(np.clip(u_plus, -1, 1)) - np.arcsin(np.clip(u_minus, -1, 1))) / 2.0
    return f.k_scale * (u_plus - u_minus) / (2.0 * np.sqrt(denom_sq))


def loss_variance_scan(
    f: LossFunction,
    n_samples: int,
    prange: tuple[float, float] = (-2.0 * np.pi, 2.0 * np.pi),
    rng: np.random.Generator | None = None,
    include_gradients: bool = True,
) -> VarianceScan:
    """Sample variance of the normalized loss over uniform random parameters.

    Also reports the mean (over components) of the per-component sample
    variance of the normalized partial derivatives at the same points,
    unless gradients are switched off.
    """
    if n_samples < 2:
        raise ValueError("variance needs at least two samples")
    rng = rng or np.random.default_rng()
    lo, hi = prange
    thetas = rng.uniform(lo, hi, size=(n_samples, f.n_params))
    scale = f.l_max if f.l_max > 0.0 else 1.0
    values = np.array([exact_loss(f, t) for t in thetas]) / scale
    loss_var = float(np.var(values, ddof=1))
    grad_var = None
    if include_gradients:
        grads = np.array([gradient(f, t) for t in thetas]) / scale
        grad_var = float(np.var(grads, axis=0, ddof=1).mean())
    return VarianceScan(
        n=f.n,
        n_samples=n_samples,
        prange=(float(lo), float(hi)),
        loss_variance=loss_var,
        grad_variance_mean=grad_var,
    )
