"""Dense state vectors over at most 24 qubits.

Basis index bit ``v - 1`` holds qubit ``v``; bit value 0 is ``|0>``, the +1
eigenstate of ``sigma_z``.  All kernels return new :class:`StateVector`
objects and leave their arguments untouched.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString

__all__ = [
    "MAX_QUBITS",
    "ENTROPY_PART_LIMIT",
    "StateVector",
    "apply_single",
    "apply_cz",
    "apply_pauli",
    "project",
    "measure_out",
    "insert_qubit",
    "xy_eigenstate",
    "projector",
    "equal_up_to_global_phase",
    "reduced_density_matrix",
    "purity",
    "entanglement_entropy",
    "kron_states",
]

MAX_QUBITS = 24
ENTROPY_PART_LIMIT = 12
ZERO_PROBABILITY = 1e-24
EIGENVALUE_FLOOR = 1e-14

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True, eq=False)
class StateVector:
    """``2**n`` complex amplitudes.  ``is_zero`` marks a probability-0 branch."""

    n: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        if not 0 <= self.n <= MAX_QUBITS:
            raise ValueError(f"qubit count {self.n} outside 0..{MAX_QUBITS}")
        amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        if amps.size != 1 << self.n:
            raise ValueError(f"expected {1 << self.n} amplitudes, got {amps.size}")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def zeros(cls, n: int) -> StateVector:
        return cls(n, np.zeros(1 << n, dtype=complex))

    @classmethod
    def basis(cls, bits: str) -> StateVector:
        """Product state from letters ``0 1 + -``; the first letter is qubit 1."""
        singles = {
            "0": np.array([1, 0], dtype=complex),
            "1": np.array([0, 1], dtype=complex),
            "+": np.array([1, 1], dtype=complex) / math.sqrt(2),
            "-": np.array([1, -1], dtype=complex) / math.sqrt(2),
        }
        try:
            factors = [singles[c] for c in bits]
        except KeyError as exc:
            raise ValueError(f"unknown basis letter {exc.args[0]!r}") from None
        return kron_states([cls(1, f) for f in factors])

    @classmethod
    def plus(cls, n: int) -> StateVector:
        return cls(n, np.full(1 << n, 2 ** (-n / 2), dtype=complex))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> StateVector:
        amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        return cls(n, amps / np.linalg.norm(amps))

    @classmethod
    def random_product(cls, n: int, rng: np.random.Generator) -> StateVector:
        return kron_states([cls.random(1, rng) for _ in range(n)])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def is_zero(self) -> bool:
        return self.norm**2 <= ZERO_PROBABILITY

    def normalized(self) -> StateVector:
        nrm = self.norm
        if nrm**2 <= ZERO_PROBABILITY:
            return StateVector.zeros(self.n)
        return StateVector(self.n, self.amps / nrm)

    def tensor(self) -> np.ndarray:
        """Amplitudes as an ``n``-axis array; axis ``n - v`` is qubit ``v``."""
        return self.amps.reshape((2,) * self.n)

    def inner(self, other: StateVector) -> complex:
        _same_size(self, other)
        return complex(np.vdot(self.amps, other.amps))

    def to_bytes(self) -> bytes:
        """Little-endian float64 (re, im) pairs in index order."""
        return self.amps.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> StateVector:
        amps = np.frombuffer(data, dtype="<c16").astype(np.complex128)
        n = int(amps.size).bit_length() - 1
        return cls(n, amps)


def _same_size(a: StateVector, b: StateVector) -> None:
    if a.n != b.n:
        raise ValueError(f"state size mismatch: {a.n} vs {b.n}")


def _check_qubit(q: int, n: int) -> None:
    if not 1 <= q <= n:
        raise IndexError(f"qubit {q} outside 1..{n}")


def _split(amps: np.ndarray, q: int, n: int) -> np.ndarray:
    return amps.reshape(1 << (n - q), 2, 1 << (q - 1))


def kron_states(states: Sequence[StateVector]) -> StateVector:
    """Tensor product with ``states[0]`` on the lowest qubits."""
    amps = np.ones(1, dtype=complex)
    n = 0
    for s in states:
        amps = np.kron(s.amps, amps)
        n += s.n
    return StateVector(n, amps)


def apply_single(op: np.ndarray, q: int, s: StateVector) -> StateVector:
    """Apply a 2x2 matrix to qubit ``q``."""
    _check_qubit(q, s.n)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2, 2):
        raise ValueError("single-qubit operator must be 2x2")
    out = np.matmul(op, _split(s.amps, q, s.n))
    return StateVector(s.n, out.reshape(-1))


def apply_cz(i: int, j: int, s: StateVector) -> StateVector:
    """Controlled-phase between qubits ``i`` and ``j``."""
    if i == j:
        raise ValueError("controlled-phase needs two distinct qubits")
    _check_qubit(i, s.n)
    _check_qubit(j, s.n)
    t = s.tensor().copy()
    index = [slice(None)] * s.n
    index[s.n - i] = 1
    index[s.n - j] = 1
    t[tuple(index)] *= -1
    return StateVector(s.n, t.reshape(-1))


def apply_pauli(p: PauliString, s: StateVector) -> StateVector:
    """Apply a Pauli string, including its phase."""
    if p.n != s.n:
        raise ValueError(f"Pauli on {p.n} qubits applied to {s.n}-qubit state")
    idx = np.arange(1 << s.n, dtype=np.int64)
    # sigma(x, z) = i**(x z) X**x Z**z, acting as psi[i ^ x] times the Z sign of i ^ x
    src = idx ^ p.x_mask
    signs = 1 - 2 * (np.bitwise_count(src & p.z_mask) & 1).astype(np.int8)
    coeff = 1j ** ((p.phase + bin(p.x_mask & p.z_mask).count("1")) % 4)
    return StateVector(s.n, coeff * signs * s.amps[src])


def xy_eigenstate(theta: float, outcome: int) -> np.ndarray:
    """Eigenvector of ``cos(theta) X + sin(theta) Y`` with eigenvalue ``outcome``."""
    _check_outcome(outcome)
    return np.array([1.0, outcome * cmath.exp(1j * theta)], dtype=complex) / math.sqrt(2)


def projector(theta: float, outcome: int) -> np.ndarray:
    """``(1 + s (cos(theta) X + sin(theta) Y)) / 2``."""
    _check_outcome(outcome)
    return 0.5 * (np.eye(2) + outcome * (math.cos(theta) * X + math.sin(theta) * Y))


def _check_outcome(outcome: int) -> None:
    if outcome not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")


def project(q: int, theta: float, outcome: int, s: StateVector) -> tuple[StateVector, float]:
    """Project qubit ``q`` and renormalize.

    Returns the normalized post-measurement state and the Born probability.
    A probability-0 branch gives an all-zero state (``is_zero`` is true).
    """
    raw = apply_single(projector(theta, outcome), q, s)
    prob = raw.norm**2
    if prob <= ZERO_PROBABILITY:
        return StateVector.zeros(s.n), 0.0
    return StateVector(s.n, raw.amps / math.sqrt(prob)), prob


def measure_out(q: int, theta: float, outcome: int, s: StateVector) -> tuple[StateVector, float]:
    """Project qubit ``q`` and remove it from the register.

    The result lives on ``n - 1`` qubits, with qubits above ``q`` shifted down
    by one.  Tensoring ``xy_eigenstate(theta, outcome)`` back in at ``q``
    reproduces :func:`project` exactly.
    """
    _check_qubit(q, s.n)
    bra = xy_eigenstate(theta, outcome).conj()
    t = _split(s.amps, q, s.n)
    out = (bra[0] * t[:, 0, :] + bra[1] * t[:, 1, :]).reshape(-1)
    prob = float(np.vdot(out, out).real)
    if prob <= ZERO_PROBABILITY:
        return StateVector.zeros(s.n - 1), 0.0
    return StateVector(s.n - 1, out / math.sqrt(prob)), prob


def insert_qubit(q: int, ket: np.ndarray, s: StateVector) -> StateVector:
    """Tensor a single-qubit ``ket`` in at position ``q`` (1..n+1)."""
    if not 1 <= q <= s.n + 1:
        raise IndexError(f"insert position {q} outside 1..{s.n + 1}")
    t = s.amps.reshape(1 << (s.n - q + 1), 1, 1 << (q - 1))
    out = t * np.asarray(ket, dtype=complex).reshape(1, 2, 1)
    return StateVector(s.n + 1, out.reshape(-1))


def equal_up_to_global_phase(a: StateVector, b: StateVector, tol: float = 1e-10) -> tuple[bool, float, float]:
    """Compare normalized states.

    Returns ``(equal, deviation, phase)`` with ``deviation = 1 - |<a|b>|`` and
    ``phase = arg <a|b>``; ``equal`` holds when the deviation is within ``tol``.
    """
    overlap = a.inner(b)
    deviation = max(0.0, 1.0 - abs(overlap))
    return deviation <= tol, deviation, cmath.phase(overlap)


def _bipartite_matrix(s: StateVector, part: Iterable[int]) -> tuple[np.ndarray, list[int]]:
    part = sorted(set(part))
    for q in part:
        _check_qubit(q, s.n)
    rest = [q for q in range(1, s.n + 1) if q not in part]
    # axis n - q is qubit q; keep the highest qubit first so the reshape
    # matches the little-endian index convention within each block
    order = [s.n - q for q in reversed(part)] + [s.n - q for q in reversed(rest)]
    m = np.transpose(s.tensor(), order).reshape(1 << len(part), 1 << len(rest))
    return m, part


def reduced_density_matrix(s: StateVector, part: Iterable[int]) -> np.ndarray:
    """Density matrix of the qubits in ``part``; qubit order as in a ``len(part)``-qubit state."""
    m, part = _bipartite_matrix(s, part)
    if len(part) > ENTROPY_PART_LIMIT:
        raise ValueError(f"reduced matrix over {len(part)} qubits exceeds {ENTROPY_PART_LIMIT}")
    return m @ m.conj().T


def purity(s: StateVector, part: Iterable[int]) -> float:
    """``Tr(rho_part**2)`` for the normalized state."""
    m, _ = _bipartite_matrix(s.normalized(), part)
    sv = np.linalg.svd(m, compute_uv=False)
    return float(np.sum(sv**4))


def entanglement_entropy(s: StateVector, part: Iterable[int]) -> float:
    """Von Neumann entropy (bits) of the reduced state on ``part``."""
    part = set(part)
    if not part or len(part) >= s.n:
        raise ValueError("bipartition part must be a non-empty proper subset")
    if len(part) > ENTROPY_PART_LIMIT:
        raise ValueError(f"part of {len(part)} qubits exceeds limit {ENTROPY_PART_LIMIT}")
    m, _ = _bipartite_matrix(s.normalized(), part)
    # Schmidt coefficients squared are the reduced eigenvalues
    evals = np.linalg.svd(m, compute_uv=False) ** 2
    evals = evals[evals > EIGENVALUE_FLOOR]
    return float(max(0.0, -np.sum(evals * np.log2(evals))))
