"""Pauli strings in binary-symplectic form with an exact phase.

A :class:`PauliString` on ``n`` qubits is ``i**k`` times a tensor product of
Hermitian single-qubit Paulis.  Qubit ``v`` (1-based, as vertices are
numbered) sits at bit ``v - 1`` of ``x_mask`` and ``z_mask``:

====== ====== ========
x bit  z bit  factor
====== ====== ========
0      0      identity
1      0      sigma_x
0      1      sigma_z
1      1      sigma_y
====== ====== ========

Multiplication uses ``sigma_y = i sigma_x sigma_z``, so for example
``X * Z == -i Y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "PauliString",
    "multiply",
    "stabilizer_K",
    "to_dense",
    "flip_signature",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 12

_PHASES = (1, 1j, -1, -1j)
_PHASE_TEXT = ("+", "+i", "-", "-i")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_SINGLE = {(0, 0): _I2, (1, 0): _X, (0, 1): _Z, (1, 1): _Y}


def _popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a Hermitian Pauli product on ``n`` qubits."""

    n: int
    x_mask: int = 0
    z_mask: int = 0
    phase: int = 0

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("qubit count must be non-negative")
        limit = 1 << self.n
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"masks do not fit in {self.n} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def from_ops(cls, n: int, ops: Mapping[int, str], phase: int = 0) -> PauliString:
        """Build from ``{vertex: "X" | "Y" | "Z" | "I"}``."""
        x = z = 0
        for v, op in ops.items():
            if not 1 <= v <= n:
                raise ValueError(f"qubit {v} outside 1..{n}")
            op = op.upper()
            if op not in "IXYZ" or len(op) != 1:
                raise ValueError(f"unknown Pauli letter {op!r}")
            bit = 1 << (v - 1)
            if op in "XY":
                x |= bit
            if op in "ZY":
                z |= bit
        return cls(n, x, z, phase)

    @classmethod
    def single(cls, n: int, v: int, op: str) -> PauliString:
        return cls.from_ops(n, {v: op})

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x_mask | self.z_mask
        return tuple(v + 1 for v in range(self.n) if mask >> v & 1)

    def x_bit(self, v: int) -> int:
        return self.x_mask >> (v - 1) & 1

    def z_bit(self, v: int) -> int:
        return self.z_mask >> (v - 1) & 1

    def op(self, v: int) -> str:
        return "IXZY"[self.x_bit(v) | self.z_bit(v) << 1]

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def same_up_to_phase(self, other: PauliString) -> bool:
        return (self.n, self.x_mask, self.z_mask) == (other.n, other.x_mask, other.z_mask)

    def without_phase(self) -> PauliString:
        return PauliString(self.n, self.x_mask, self.z_mask, 0)

    def commutes_with(self, other: PauliString) -> bool:
        _check_sizes(self, other)
        return (_popcount(self.x_mask & other.z_mask) + _popcount(self.z_mask & other.x_mask)) % 2 == 0

    def restrict(self, qubits: Iterable[int]) -> PauliString:
        """Keep only the factors on ``qubits`` (phase dropped)."""
        mask = 0
        for v in qubits:
            mask |= 1 << (v - 1)
        return PauliString(self.n, self.x_mask & mask, self.z_mask & mask, 0)

    def relabel(self, mapping: Mapping[int, int], n: int) -> PauliString:
        """Move the factor on qubit ``v`` to ``mapping[v]`` in an ``n``-qubit string."""
        x = z = 0
        for v in self.support:
            bit = 1 << (mapping[v] - 1)
            if self.x_bit(v):
                x |= bit
            if self.z_bit(v):
                z |= bit
        return PauliString(n, x, z, self.phase)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __str__(self) -> str:
        if self.is_identity():
            return f"{_PHASE_TEXT[self.phase]}I"
        parts = [f"{self.op(v)}{v}" for v in self.support]
        return _PHASE_TEXT[self.phase] + " ".join(parts)

    def render_masks(self) -> str:
        """Render as ``"+i X{1,3} Z{2}"``."""
        xs = ",".join(str(v) for v in range(1, self.n + 1) if self.x_bit(v))
        zs = ",".join(str(v) for v in range(1, self.n + 1) if self.z_bit(v))
        return f"{_PHASE_TEXT[self.phase]} X{{{xs}}} Z{{{zs}}}"

    def to_json(self) -> dict:
        return {"n": self.n, "ops": {str(v): self.op(v) for v in self.support}, "phase": _PHASE_TEXT[self.phase]}


def _check_sizes(a: PauliString, b: PauliString) -> None:
    if a.n != b.n:
        raise ValueError(f"Pauli size mismatch: {a.n} vs {b.n}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Return the operator product ``a @ b`` with its exact phase."""
    _check_sizes(a, b)
    x = a.x_mask ^ b.x_mask
    z = a.z_mask ^ b.z_mask
    # sigma(x, z) = i**(x z) X**x Z**z; reorder Z_a X_b at the cost of (-1)**(z_a . x_b)
    k = (
        a.phase
        + b.phase
        + _popcount(a.x_mask & a.z_mask)
        + _popcount(b.x_mask & b.z_mask)
        + 2 * _popcount(a.z_mask & b.x_mask)
        - _popcount(x & z)
    )
    return PauliString(a.n, x, z, k)


def product(paulis: Iterable[PauliString], n: int) -> PauliString:
    out = PauliString.identity(n)
    for p in paulis:
        out = multiply(out, p)
    return out


def stabilizer_K(graph, i: int) -> PauliString:
    """Graph-state stabilizer: ``sigma_x`` on ``i`` and ``sigma_z`` on its neighbours."""
    neighbours = graph.neighbors(i)
    z = 0
    for j in neighbours:
        z |= 1 << (j - 1)
    return PauliString(graph.n, 1 << (i - 1), z, 0)


def to_dense(p: PauliString) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix; qubit 1 is the least significant index bit."""
    if p.n > DENSE_LIMIT:
        raise ValueError(f"dense form limited to {DENSE_LIMIT} qubits, got {p.n}")
    out = np.ones((1, 1), dtype=complex)
    for v in range(p.n, 0, -1):
        out = np.kron(out, _SINGLE[(p.x_bit(v), p.z_bit(v))])
    return p.coefficient * out


def flip_signature(p: PauliString, schedule: Mapping[int, object]) -> tuple[frozenset[int], frozenset[int]]:
    """Outcome flips and angle negations caused by moving ``p`` through the projectors.

    ``schedule`` maps each measured qubit to its angle class (``"zero"``,
    ``"half_pi"`` or ``"adaptive"``, or any object with a ``kind`` attribute
    holding one of these).  Returns ``(flipped, negated)``: ``flipped`` holds
    qubits whose outcome label changes, ``negated`` the adaptive qubits whose
    angle changes sign.
    """
    flipped = set()
    negated = set()
    for v, spec in schedule.items():
        kind = getattr(spec, "kind", spec)
        x, z = p.x_bit(v), p.z_bit(v)
        if kind == "half_pi":
            x_flips = x
        elif kind in ("zero", "adaptive"):
            x_flips = 0
            if kind == "adaptive" and x:
                negated.add(v)
        else:
            raise ValueError(f"unknown angle class {kind!r} for qubit {v}")
        if z ^ x_flips:
            flipped.add(v)
    return frozenset(flipped), frozenset(negated)
