"""The rotation and CNOT measurement patterns.

Rotation: a five-qubit chain ``1-2-3-4-5`` with input 1 and output 5.  Qubit 1
is measured at angle 0 and qubits 2-4 adaptively.  The pattern realises
``R . U_ROT(xi, eta, zeta)`` with ``R = X**(g2+g4) Z**(g1+g3)`` and
``g_i = (1 - s_i) / 2``.

CNOT: fifteen qubits, control chain ``1..7``, target chain ``9..15`` and a
bridge ``4-8-12``.  Qubits 2, 3, 4, 5, 6, 8 and 12 are measured at ``pi/2``,
all other non-output qubits at 0.  The edge set and angle assignment are not
legible from the usual drawing; they are the unique choice consistent with
the stabilizer flip table (``K_i`` flips the outcome of each measured
neighbour, and of ``i`` itself exactly when ``theta_i = pi/2``).  Inputs 1
and 9 are not covered by that table and are measured at 0.  The whole
assignment is confirmed by the gate-correctness tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .graph import Graph
from .measurement import AngleSpec, MeasurementSchedule, OutcomeRecord
from .pauli import PauliString, multiply

__all__ = [
    "Rot",
    "Cnot",
    "GateKind",
    "AffineForm",
    "GatePattern",
    "rot_pattern",
    "cnot_pattern",
    "pattern_for",
    "logical_unitary",
    "byproduct",
    "propagate_pauli",
    "euler_signs",
    "ROT_EDGES",
    "CNOT_EDGES",
    "CNOT_HALF_PI",
]

ROT_EDGES = ((1, 2), (2, 3), (3, 4), (4, 5))
CNOT_EDGES = (
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (4, 8), (8, 12),
    (9, 10), (10, 11), (11, 12), (12, 13), (13, 14), (14, 15),
)  # fmt: skip
CNOT_HALF_PI = frozenset({2, 3, 4, 5, 6, 8, 12})


@dataclass(frozen=True)
class Rot:
    """``exp(-i zeta X/2) exp(-i eta Z/2) exp(-i xi X/2)`` on one wire."""

    xi: float
    eta: float
    zeta: float
    wire: int = 0

    def __post_init__(self) -> None:
        if not all(math.isfinite(a) for a in (self.xi, self.eta, self.zeta)):
            raise ValueError("Euler angles must be finite")

    @property
    def wires(self) -> tuple[int, ...]:
        return (self.wire,)

    @property
    def angles(self) -> tuple[float, float, float]:
        return (self.xi, self.eta, self.zeta)

    def with_signs(self, signs: tuple[int, int, int]) -> Rot:
        return Rot(signs[0] * self.xi, signs[1] * self.eta, signs[2] * self.zeta, self.wire)

    def to_json(self) -> dict:
        return {"kind": "rot", "wire": self.wire, "xi": self.xi, "eta": self.eta, "zeta": self.zeta}


@dataclass(frozen=True)
class Cnot:
    control: int = 0
    target: int = 1

    def __post_init__(self) -> None:
        if self.control == self.target:
            raise ValueError("CNOT control and target must differ")

    @property
    def wires(self) -> tuple[int, ...]:
        return (self.control, self.target)

    def to_json(self) -> dict:
        return {"kind": "cnot", "control": self.control, "target": self.target}


GateKind = Union[Rot, Cnot]


@dataclass(frozen=True)
class AffineForm:
    """``const + sum(g_v for v in variables)`` over GF(2)."""

    variables: frozenset[int] = frozenset()
    const: int = 0

    def __add__(self, other: AffineForm) -> AffineForm:
        return AffineForm(self.variables ^ other.variables, self.const ^ other.const)

    def evaluate(self, record: OutcomeRecord | Mapping[int, int]) -> int:
        """Value with unmeasured qubits read as outcome +1."""
        get = record.get if isinstance(record, OutcomeRecord) else (lambda v: record.get(v, 1))
        bit = self.const
        for v in self.variables:
            bit ^= (1 - get(v)) // 2
        return bit

    def relabel(self, mapping: Mapping[int, int]) -> AffineForm:
        return AffineForm(frozenset(mapping[v] for v in self.variables), self.const)

    def __str__(self) -> str:
        terms = [f"g{v}" for v in sorted(self.variables)] + (["1"] if self.const else [])
        return " + ".join(terms) or "0"


def _form(variables: Iterable[int], const: int = 0) -> AffineForm:
    return AffineForm(frozenset(variables), const)


# (x exponent, z exponent) per gate wire, in local pattern labels
ROT_BYPRODUCT = ((_form({2, 4}), _form({1, 3})),)
CNOT_BYPRODUCT = (
    (_form({2, 3, 5, 6}), _form({1, 3, 4, 5, 8, 9, 11}, 1)),
    (_form({2, 3, 8, 10, 12, 14}), _form({9, 11, 13})),
)


@dataclass(frozen=True)
class GatePattern:
    """Graph fragment, angle rules and byproduct rule of one gate, in local labels."""

    gate: GateKind
    graph: Graph
    angles: Mapping[int, AngleSpec]
    order: tuple[int, ...]
    wire_inputs: tuple[int, ...]
    wire_outputs: tuple[int, ...]
    byproduct_forms: tuple[tuple[AffineForm, AffineForm], ...]

    @property
    def measured(self) -> tuple[int, ...]:
        return self.order

    @property
    def schedule(self) -> MeasurementSchedule:
        return MeasurementSchedule((v, self.angles[v]) for v in self.order)


def rot_pattern(xi: float = 0.0, eta: float = 0.0, zeta: float = 0.0) -> GatePattern:
    angles = {
        1: AngleSpec.zero(),
        2: AngleSpec.adaptive(xi, -1, {1}, "xi"),
        3: AngleSpec.adaptive(eta, -1, {2}, "eta"),
        4: AngleSpec.adaptive(zeta, -1, {1, 3}, "zeta"),
    }
    return GatePattern(
        Rot(xi, eta, zeta),
        Graph(5, ROT_EDGES, inputs=[1], outputs=[5]),
        angles,
        (1, 2, 3, 4),
        (1,),
        (5,),
        ROT_BYPRODUCT,
    )


def cnot_pattern() -> GatePattern:
    order = (1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13, 14)
    angles = {v: AngleSpec.half_pi() if v in CNOT_HALF_PI else AngleSpec.zero() for v in order}
    return GatePattern(
        Cnot(0, 1),
        Graph(15, CNOT_EDGES, inputs=[1, 9], outputs=[7, 15]),
        angles,
        order,
        (1, 9),
        (7, 15),
        CNOT_BYPRODUCT,
    )


def pattern_for(gate: GateKind) -> GatePattern:
    if isinstance(gate, Rot):
        return rot_pattern(gate.xi, gate.eta, gate.zeta)
    if isinstance(gate, Cnot):
        return cnot_pattern()
    raise TypeError(f"unsupported gate {gate!r}")


_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _expm_pauli(angle: float, pauli: np.ndarray) -> np.ndarray:
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * pauli


def logical_unitary(gate: GateKind) -> np.ndarray:
    """Exact gate matrix.  For CNOT, qubit 1 of the 4x4 basis is the control."""
    if isinstance(gate, Rot):
        return _expm_pauli(gate.zeta, _X) @ _expm_pauli(gate.eta, _Z) @ _expm_pauli(gate.xi, _X)
    if isinstance(gate, Cnot):
        u = np.zeros((4, 4), dtype=complex)
        for i in range(4):
            c, t = i & 1, i >> 1 & 1
            u[c | (t ^ c) << 1, i] = 1
        return u
    raise TypeError(f"unsupported gate {gate!r}")


def _pauli_from_bits(bits: Iterable[tuple[int, int]]) -> PauliString:
    """``prod_w X_w**a_w  prod_w Z_w**b_w`` on qubits 1, 2, ... in order."""
    bits = list(bits)
    x = z = 0
    for w, (a, b) in enumerate(bits):
        x |= a << w
        z |= b << w
    n = len(bits)
    return multiply(PauliString(n, x, 0), PauliString(n, 0, z))


def byproduct(gate: GateKind | GatePattern, outcomes: OutcomeRecord | Mapping[int, int]) -> PauliString:
    """Byproduct Pauli on the gate's wires (control first for CNOT).

    ``outcomes`` uses the pattern's local qubit labels and must cover every
    qubit the formula reads.
    """
    pattern = gate if isinstance(gate, GatePattern) else pattern_for(gate)
    keys = outcomes.outcomes if isinstance(outcomes, OutcomeRecord) else outcomes
    needed = set()
    for fx, fz in pattern.byproduct_forms:
        needed |= fx.variables | fz.variables
    missing = sorted(needed - set(keys))
    if missing:
        raise KeyError(f"byproduct needs outcomes of qubits {missing}")
    return _pauli_from_bits((fx.evaluate(keys), fz.evaluate(keys)) for fx, fz in pattern.byproduct_forms)


def euler_signs(t: PauliString) -> tuple[int, int, int]:
    """Sign flips of ``(xi, eta, zeta)`` from conjugating a rotation by ``t``."""
    x, z = t.x_bit(1), t.z_bit(1)
    return (-1 if z else 1, -1 if x else 1, -1 if z else 1)


_CNOT_IMAGE = {
    # (x_mask, z_mask) on (control=1, target=2) -> image under U . U^dagger
    ("x", 1): PauliString(2, 0b11, 0),
    ("x", 2): PauliString(2, 0b10, 0),
    ("z", 1): PauliString(2, 0, 0b01),
    ("z", 2): PauliString(2, 0, 0b11),
}


def propagate_pauli(gate: GateKind, t: PauliString) -> tuple[PauliString, tuple[int, int, int]]:
    """Move ``t`` through the gate.

    For a rotation ``t`` is returned unchanged together with the Euler sign
    map ``f`` satisfying ``U(f xi) = t U(xi) t``.  For a CNOT the result is
    ``U t U^dagger`` and the sign map is trivial.
    """
    if isinstance(gate, Rot):
        if t.n != 1:
            raise ValueError("rotation acts on one wire")
        return t, euler_signs(t)
    if isinstance(gate, Cnot):
        if t.n != 2:
            raise ValueError("CNOT acts on two wires")
        # t = i**(phase + |x & z|) X**x Z**z and conjugation is multiplicative
        out = PauliString(2, 0, 0, t.phase + bin(t.x_mask & t.z_mask).count("1"))
        for kind, mask in (("x", t.x_mask), ("z", t.z_mask)):
            for q in (1, 2):
                if mask >> (q - 1) & 1:
                    out = multiply(out, _CNOT_IMAGE[(kind, q)])
        return out, (1, 1, 1)
    raise TypeError(f"unsupported gate {gate!r}")
