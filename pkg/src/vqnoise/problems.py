"""Random QUBO instances, their spin-model form, and exhaustive oracles.

Conventions used throughout the package:

* A QUBO assignment is a binary vector ``x`` with cost ``x . Q . x``.
* The equivalent spin model acts on qubits where basis state ``q`` has
  ``Z_i`` eigenvalue ``(-1)**q_i``, i.e. bit 0 maps to spin +1.  With the
  mapping ``x_i = (z_i + 1) / 2`` this means ``q_i = 1 - x_i``.
* Basis states are indexed little-endian: qubit ``i`` is bit ``i`` of the
  integer index.  Bitstrings are the standard binary rendering of the
  index, so the leftmost character is the highest qubit.

The spin-model energy of basis state ``q`` is

    E(q) = sum_i (-1)**q_i * h_i  +  sum_{i<j} (-1)**(q_i+q_j) * J_ij

with fields ``h_i`` and couplings ``J_ij``.  The constant offset dropped
in that reduction is retained on the model so that

    x . Q . x  ==  E(q(x)) + offset          (exactly, for every x)

which gives a bit-exact cross-check between both formulations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateProblemError, ResourceLimitError

__all__ = [
    "QuboInstance",
    "IsingModel",
    "BruteForceResult",
    "SpectrumProfile",
    "generate_random_qubo",
    "qubo_to_ising",
    "ising_energy",
    "energy_table",
    "brute_force_solve",
    "cmax_bound",
    "build_permutation_qubo",
    "reduce_fixed_start",
    "solution_space_profile",
    "qubo_energy",
    "bitstring_for_index",
    "index_for_bitstring",
    "bitstring_for_assignment",
    "assignment_for_bitstring",
]

# Exhaustive enumeration bounds.
MAX_BRUTE_FORCE_N = 24
MAX_PROFILE_N = 20

_SEED_MAX = 2**64


@dataclass(frozen=True)
class QuboInstance:
    """A QUBO cost matrix together with the seed that produced it.

    ``q`` is stored as a read-only float array.  Matrices built by
    :func:`generate_random_qubo` have integer off-diagonal entries in
    [1, 10] and integer diagonal entries in [-10, -1]; derived matrices
    (e.g. penalty constructions) may carry arbitrary real entries.
    """

    n: int
    q: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"QUBO dimension must be positive, got n={self.n}")
        if not 0 <= self.seed < _SEED_MAX:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        q = np.array(self.q, dtype=float)
        if q.shape != (self.n, self.n):
            raise ValueError(f"expected a {self.n}x{self.n} matrix, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("QUBO matrix contains non-finite entries")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    def to_text(self) -> str:
        """Render as the plain-text exchange format: ``n seed`` header, then rows."""
        lines = [f"{self.n} {self.seed}"]
        for row in self.q:
            lines.append(" ".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "QuboInstance":
        from .exceptions import ParseError

        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParseError("empty QUBO file")
        head = lines[0].split()
        if len(head) != 2:
            raise ParseError("header must be 'n seed'", line=1)
        try:
            n, seed = int(head[0]), int(head[1])
        except ValueError as exc:
            raise ParseError(f"bad header: {exc}", line=1) from None
        if len(lines) != n + 1:
            raise ParseError(f"expected {n} matrix rows, found {len(lines) - 1}")
        rows = []
        for k, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            if len(parts) != n:
                raise ParseError(f"expected {n} entries, found {len(parts)}", line=k)
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ParseError(str(exc), line=k) from None
        return cls(n=n, q=np.array(rows), seed=seed)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "seed": self.seed, "q": self.q.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "QuboInstance":
        from .exceptions import ParseError

        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=exc.lineno) from None
        try:
            return cls(n=int(data["n"]), q=np.array(data["q"]), seed=int(data["seed"]))
        except KeyError as exc:
            raise ParseError(f"missing field {exc}") from None


@dataclass(frozen=True)
class IsingModel:
    """Spin model with pair couplings, local fields and the dropped constant.

    ``couplings`` maps index pairs ``(i, j)`` with ``i < j`` to the
    interaction weight; ``fields`` holds the per-spin field weights.
    """

    n: int
    couplings: dict[tuple[int, int], float]
    fields: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("spin count must be positive")
        h = np.array(self.fields, dtype=float)
        if h.shape != (self.n,):
            raise ValueError(f"fields must have length {self.n}, got shape {h.shape}")
        for (i, j) in self.couplings:
            if not (0 <= i < j < self.n):
                raise ValueError(f"coupling key ({i}, {j}) violates 0 <= i < j < n")
        h.setflags(write=False)
        object.__setattr__(self, "fields", h)
        object.__setattr__(self, "couplings", dict(self.couplings))

    def coupling_matrix(self) -> np.ndarray:
        """Dense symmetric coupling matrix with zero diagonal."""
        m = np.zeros((self.n, self.n))
        for (i, j), v in self.couplings.items():
            m[i, j] = m[j, i] = v
        return m


@dataclass(frozen=True)
class BruteForceResult:
    c_min: float
    c_max_attained: float
    argmin: tuple[str, ...]


@dataclass(frozen=True)
class SpectrumProfile:
    """Exhaustive solution-quality statistics of one spin model."""

    n: int
    fractions: dict[float, float]
    hist_edges: np.ndarray = field(repr=False)
    hist_density: np.ndarray = field(repr=False)


def generate_random_qubo(n: int, seed: int) -> QuboInstance:
    """Draw a seeded random QUBO matrix.

    Every entry is an independent integer draw from {1, ..., 10}
    (discrete uniform); diagonal entries are negated.  The generator is
    numpy's PCG64 seeded with ``seed`` and entries are drawn row-major in
    a single call, so instances are bit-identical across platforms.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    q = rng.integers(1, 11, size=(n, n)).astype(float)
    q[np.diag_indices(n)] *= -1.0
    return QuboInstance(n=n, q=q, seed=seed)


def qubo_to_ising(q: QuboInstance) -> IsingModel:
    """Map a QUBO matrix to its spin model.

    The matrix is symmetrized first (``(Q + Q^T) / 2``), which leaves the
    quadratic form unchanged; the mapping is then

        J_ij = Q'_ij / 2   (i < j),
        h_i  = sum_j Q'_ij / 2,
        offset = (sum_ij Q'_ij + trace Q') / 4,

    so that ``x . Q . x == E(q(x)) + offset`` holds exactly.
    """
    qs = (q.q + q.q.T) / 2.0
    n = q.n
    fields = qs.sum(axis=1) / 2.0
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            if qs[i, j] != 0.0:
                couplings[(i, j)] = qs[i, j] / 2.0
    offset = (qs.sum() + np.trace(qs)) / 4.0
    return IsingModel(n=n, couplings=couplings, fields=fields, offset=float(offset))


def ising_energy(m: IsingModel, bits: str, include_offset: bool = False) -> float:
    """Energy of one basis state given as a bitstring.

    The bitstring is the binary rendering of the basis index (leftmost
    character = highest qubit).  Pass ``include_offset=True`` to add the
    constant retained from the QUBO reduction.
    """
    if len(bits) != m.n:
        raise ValueError(f"bitstring length {len(bits)} != n={m.n}")
    signs = np.array([1.0 if c == "0" else -1.0 for c in reversed(bits)])
    e = float(signs @ m.fields)
    for (i, j), v in m.couplings.items():
        e += signs[i] * signs[j] * v
    if include_offset:
        e += m.offset
    return e


def qubo_energy(q: QuboInstance, x: np.ndarray) -> float:
    """Quadratic form ``x . Q . x`` for a binary assignment vector."""
    x = np.asarray(x, dtype=float)
    return float(x @ q.q @ x)


def energy_table(m: IsingModel, include_offset: bool = False) -> np.ndarray:
    """Energies of all ``2**n`` basis states, indexed little-endian.

    Computed in index chunks so memory stays bounded up to the
    enumeration limit of n = 24.
    """
    n = m.n
    if n > MAX_BRUTE_FORCE_N:
        raise ResourceLimitError(f"energy table limited to n <= {MAX_BRUTE_FORCE_N}, got n={n}")
    size = 1 << n
    upper = np.zeros((n, n))
    for (i, j), v in m.couplings.items():
        upper[i, j] = v
    out = np.empty(size)
    chunk = min(size, 1 << 20)
    for start in range(0, size, chunk):
        idx = np.arange(start, min(start + chunk, size), dtype=np.uint64)
        bits = (idx[:, None] >> np.arange(n, dtype=np.uint64)) & 1
        signs = 1.0 - 2.0 * bits.astype(float)
        part = signs @ m.fields
        part += np.einsum("bi,bi->b", signs, signs @ upper.T)
        out[start : start + len(idx)] = part
    if include_offset:
        out = out + m.offset
    return out


def brute_force_solve(m: IsingModel) -> BruteForceResult:
    """Exact minimum and maximum over all basis states, with all minimizers."""
    if m.n > MAX_BRUTE_FORCE_N:
        raise ResourceLimitError(f"enumeration limited to n <= {MAX_BRUTE_FORCE_N}, got n={m.n}")
    table = energy_table(m)
    c_min = float(table.min())
    c_max = float(table.max())
    winners = np.flatnonzero(table == c_min)
    argmin = tuple(bitstring_for_index(int(v), m.n) for v in winners)
    return BruteForceResult(c_min=c_min, c_max_attained=c_max, argmin=argmin)


def cmax_bound(m: IsingModel) -> float:
    """Analytic upper bound ``sum_i |h_i| + sum_{i<j} |J_ij|`` on the energy."""
    return float(np.abs(m.fields).sum() + sum(abs(v) for v in m.couplings.values()))


def build_permutation_qubo(q0: QuboInstance, penalty: float) -> QuboInstance:
    """Add one-hot permutation penalties to a QUBO over ``n**2`` variables.

    The variables are ``x[i, a]`` (node ``i`` at position ``a``), flattened
    row-major to index ``i * n + a``.  Squaring the two families of
    equality constraints (each node once, each position once) and using
    ``x**2 == x`` adds, per constraint family,

        -P on each diagonal entry, and
        +P on each symmetric off-diagonal entry of a same-node or
        same-position pair,

    for a total diagonal shift of ``-2 P``.  The constant ``2 n P`` is
    dropped.  Feasible assignments (permutation matrices) are then exactly
    the minimizers of the penalty part.
    """
    dim = q0.n
    n = math.isqrt(dim)
    if n * n != dim:
        raise ValueError(f"penalty construction needs a square variable grid; {dim} is not a perfect square")
    max_entry = float(np.abs(q0.q).max())
    if not penalty > max_entry:
        raise ValueError(f"penalty {penalty} must exceed the largest |entry| {max_entry}")
    q = np.array(q0.q)
    for i in range(n):
        for a in range(n):
            u = i * n + a
            q[u, u] -= 2.0 * penalty
            for b in range(n):
                if b != a:
                    q[u, i * n + b] += penalty  # same node, different position
            for j in range(n):
                if j != i:
                    q[u, j * n + a] += penalty  # same position, different node
    return QuboInstance(n=dim, q=q, seed=q0.seed)


def reduce_fixed_start(q: QuboInstance) -> tuple[QuboInstance, float]:
    """Fix node 0 at position 0 of a permutation QUBO over ``n**2`` variables.

    Eliminates the first row and column of the one-hot grid, folding the
    couplings with the fixed variable into the reduced diagonal.  Returns
    the ``(n-1)**2``-variable instance and the constant dropped by the
    substitution.
    """
    dim = q.n
    n = math.isqrt(dim)
    if n * n != dim:
        raise ValueError(f"{dim} variables do not form a square one-hot grid")
    if n < 2:
        raise ValueError("reduction needs at least a 2x2 grid")
    keep = [i * n + a for i in range(1, n) for a in range(1, n)]
    fixed_on = 0  # variable (node 0, position 0)
    sub = q.q[np.ix_(keep, keep)].copy()
    for r, u in enumerate(keep):
        sub[r, r] += q.q[u, fixed_on] + q.q[fixed_on, u]
    constant = float(q.q[fixed_on, fixed_on])
    return QuboInstance(n=(n - 1) ** 2, q=sub, seed=q.seed), constant


def solution_space_profile(m: IsingModel, thresholds, bins: int = 40) -> SpectrumProfile:
    """Fraction of basis states at or above each quality threshold.

    Also returns the histogram (density) of energies normalized by the
    largest absolute basis energy.
    """
    if m.n > MAX_PROFILE_N:
        raise ResourceLimitError(f"profile limited to n <= {MAX_PROFILE_N}, got n={m.n}")
    from .metrics import THRESHOLD_TOL  # local import avoids a module cycle

    table = energy_table(m)
    c_min = float(table.min())
    c_max = cmax_bound(m)
    if c_min == c_max:
        raise DegenerateProblemError("all basis states share one energy; quality ratio undefined")
    ratios = (table - c_max) / (c_min - c_max)
    fractions = {}
    for t in thresholds:
        cut = 1.0 - THRESHOLD_TOL if t >= 1.0 else t
        fractions[float(t)] = float(np.mean(ratios >= cut))
    l_max = float(np.abs(table).max())
    density, edges = np.histogram(table / l_max, bins=bins, range=(-1.0, 1.0), density=True)
    return SpectrumProfile(n=m.n, fractions=fractions, hist_edges=edges, hist_density=density)


def bitstring_for_index(index: int, n: int) -> str:
    """Binary rendering of a basis index (leftmost char = highest qubit)."""
    return format(index, f"0{n}b")


def index_for_bitstring(bits: str) -> int:
    return int(bits, 2)


def bitstring_for_assignment(x: np.ndarray) -> str:
    """Bitstring of the basis state encoding assignment ``x`` (``q_i = 1 - x_i``)."""
    x = np.asarray(x)
    n = len(x)
    index = sum((1 - int(x[i])) << i for i in range(n))
    return bitstring_for_index(index, n)


def assignment_for_bitstring(bits: str) -> np.ndarray:
    """Binary assignment vector encoded by a basis state (``x_i = 1 - q_i``)."""
    n = len(bits)
    return np.array([1 - int(bits[n - 1 - i]) for i in range(n)], dtype=int)
