"""Local-unitary equivalence between intermediate measured states.

Two outcome branches measured on the same qubits are related by a product of
graph stabilizers ``K_i`` (``i`` not an input vertex).  Pushing ``K_i``
through the projectors changes the branch in a fixed way per measured qubit
``j``:

* angle 0: the outcome flips iff ``K_i`` has ``Z`` on ``j``;
* angle pi/2: the outcome flips iff ``K_i`` has exactly one of ``X``, ``Z`` on ``j``;
* adaptive angle: ``Z`` flips the outcome and ``X`` negates the angle, and
  both must match what the two records prescribe.

Which generators to combine is a linear system over GF(2), solved here by
Gaussian elimination on integer bitsets.  The numerical overlap of the two
states remains the final word on every candidate.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Graph
from .measurement import AngleSpec, Branch, MeasurementSchedule, OutcomeRecord
from .pauli import PauliString, flip_signature, multiply, stabilizer_K
from .statevector import StateVector, apply_pauli, entanglement_entropy, equal_up_to_global_phase

__all__ = [
    "FlipMatrix",
    "NoFlipSolution",
    "EquivalenceCertificate",
    "EntropyTable",
    "flip_matrix",
    "gf2_rank",
    "solve_flip",
    "build_equivalence",
    "verify_certificate",
    "search_equivalence",
    "certify_pair",
    "equivalence_from_byproducts",
    "verify_output_equivalence",
    "entanglement_report",
]

SEARCH_DEPTH = 6


class NoFlipSolution(ValueError):
    """The requested outcome change is outside the span of the generators."""


@dataclass(frozen=True)
class FlipMatrix:
    """Rows are generators ``K_i``; columns are ``("flip", j)`` or ``("negate", j)`` constraints."""

    generators: tuple[int, ...]
    columns: tuple[tuple[str, int], ...]
    rows: tuple[int, ...]  # bitmask over columns, one per generator

    def column_index(self, kind: str, v: int) -> int:
        return self.columns.index((kind, v))

    def row_flips(self, generator: int) -> frozenset[int]:
        """Measured qubits whose outcome ``K_generator`` flips."""
        row = self.rows[self.generators.index(generator)]
        return frozenset(v for k, (kind, v) in enumerate(self.columns) if kind == "flip" and row >> k & 1)

    def row_negations(self, generator: int) -> frozenset[int]:
        row = self.rows[self.generators.index(generator)]
        return frozenset(v for k, (kind, v) in enumerate(self.columns) if kind == "negate" and row >> k & 1)

    def to_array(self) -> np.ndarray:
        return np.array([[row >> k & 1 for k in range(len(self.columns))] for row in self.rows], dtype=np.uint8)

    def target(self, flips: Iterable[int], negations: Iterable[int] = ()) -> int:
        mask = 0
        for v in flips:
            mask |= 1 << self.column_index("flip", v)
        for v in negations:
            mask |= 1 << self.column_index("negate", v)
        return mask

    @property
    def rank(self) -> int:
        return gf2_rank(self.rows)


def _graph_of(g) -> Graph:
    return g if isinstance(g, Graph) else g.graph


def flip_matrix(graph, schedule: MeasurementSchedule | Mapping[int, AngleSpec]) -> FlipMatrix:
    """Flip/negation signature of every available stabilizer on the measured qubits.

    ``graph`` is a :class:`Graph` or anything carrying one as ``.graph``.
    """
    graph = _graph_of(graph)
    specs = schedule.specs if isinstance(schedule, MeasurementSchedule) else dict(schedule)
    measured = sorted(specs)
    columns = [("flip", v) for v in measured]
    columns += [("negate", v) for v in measured if specs[v].kind == "adaptive"]
    index = {c: k for k, c in enumerate(columns)}
    generators = tuple(v for v in graph.vertices if v not in graph.inputs)
    rows = []
    for i in generators:
        flipped, negated = flip_signature(stabilizer_K(graph, i), specs)
        row = 0
        for v in flipped:
            row |= 1 << index[("flip", v)]
        for v in negated:
            row |= 1 << index[("negate", v)]
        rows.append(row)
    return FlipMatrix(generators, tuple(columns), tuple(rows))


def gf2_rank(rows: Sequence[int]) -> int:
    """Rank over GF(2) of integer bitset rows."""
    basis: dict[int, int] = {}  # pivot bit -> reduced row
    for row in rows:
        while row:
            top = row.bit_length() - 1
            if top not in basis:
                basis[top] = row
                break
            row ^= basis[top]
    return len(basis)


def solve_flip(m: FlipMatrix, target: int | Iterable[int], negations: Iterable[int] = ()) -> tuple[int, ...]:
    """Generators whose product has exactly the requested signature.

    ``target`` is either a column bitmask or a set of qubits to flip (with
    ``negations`` naming adaptive qubits whose angle must change sign).
    Free variables are set to zero, so the answer is unique whenever the
    matrix has full row rank.  Raises :class:`NoFlipSolution` otherwise.
    """
    if not isinstance(target, int):
        target = m.target(target, negations)
    # Express target as a combination of rows: eliminate on rows tagged with
    # the set of generators that produced them.
    basis: dict[int, tuple[int, int]] = {}  # pivot -> (row, combination of generators)
    for g, row in enumerate(m.rows):
        combo = 1 << g
        while row:
            top = row.bit_length() - 1
            if top not in basis:
                basis[top] = (row, combo)
                break
            brow, bcombo = basis[top]
            row ^= brow
            combo ^= bcombo
    rest, combo = target, 0
    while rest:
        top = rest.bit_length() - 1
        if top not in basis:
            raise NoFlipSolution(f"signature {target:#x} is not reachable with the available stabilizers")
        brow, bcombo = basis[top]
        rest ^= brow
        combo ^= bcombo
    return tuple(m.generators[g] for g in range(len(m.generators)) if combo >> g & 1)


@dataclass(frozen=True)
class EquivalenceCertificate:
    """A Pauli ``U`` claimed (and, once verified, shown) to map one branch onto another.

    The claim is ``ims_a = U ims_b`` up to a global phase.
    """

    generators: tuple[int, ...]
    operator: PauliString
    method: str = "gf2"
    verdict: bool | None = None
    deviation: float | None = None
    phase: float | None = None
    flips: frozenset[int] = frozenset()
    negations: frozenset[int] = frozenset()
    consistent: bool = True

    def to_json(self) -> dict:
        return {
            "generators": [f"K{i}" for i in self.generators],
            "operator": str(self.operator),
            "method": self.method,
            "verdict": self.verdict,
            "deviation": self.deviation,
            "phase": self.phase,
            "flips": sorted(self.flips),
            "negations": sorted(self.negations),
        }


def _product_of_generators(graph: Graph, generators: Iterable[int]) -> PauliString:
    out = PauliString.identity(graph.n)
    for i in sorted(generators):
        out = multiply(out, stabilizer_K(graph, i))
    return out.without_phase()


def _targets(schedule: MeasurementSchedule, a: OutcomeRecord, b: OutcomeRecord) -> tuple[frozenset, frozenset]:
    specs = schedule.specs
    if set(a.outcomes) != set(specs) or set(b.outcomes) != set(specs):
        raise ValueError("both records must cover exactly the scheduled qubits")
    flips = a.differs(b)
    negations = frozenset(
        v for v, spec in specs.items() if spec.kind == "adaptive" and spec.sign_for(a.outcomes) != spec.sign_for(b.outcomes)
    )
    return flips, negations


def build_equivalence(
    graph,
    schedule: MeasurementSchedule,
    a: OutcomeRecord,
    b: OutcomeRecord,
    matrix: FlipMatrix | None = None,
) -> EquivalenceCertificate:
    """Candidate ``U`` with ``Psi(a) = U Psi(b)``, from the GF(2) flip solver.

    The adaptive angles of each record are recomputed from its own outcomes;
    every adaptive qubit whose angle differs in sign between ``a`` and ``b``
    must receive an ``X`` (or ``Y``) factor.  ``consistent`` records that the
    solved operator's own signature matches the requested change.
    """
    graph = _graph_of(graph)
    m = matrix if matrix is not None else flip_matrix(graph, schedule)
    flips, negations = _targets(schedule, a, b)
    generators = solve_flip(m, flips, negations)
    operator = _product_of_generators(graph, generators)
    got_flips, got_negations = flip_signature(operator, schedule.specs)
    return EquivalenceCertificate(
        generators,
        operator,
        "gf2",
        flips=flips,
        negations=negations,
        consistent=(got_flips == flips and got_negations == negations),
    )


def _as_state(x: StateVector | Branch) -> StateVector:
    return x.state if isinstance(x, Branch) else x


def verify_certificate(
    cert: EquivalenceCertificate, ims_a: StateVector | Branch, ims_b: StateVector | Branch, tol: float = 1e-9
) -> EquivalenceCertificate:
    """Check ``ims_a == U ims_b`` up to a global phase and record the outcome."""
    a, b = _as_state(ims_a), _as_state(ims_b)
    if a.is_zero or b.is_zero:
        ok = a.is_zero and b.is_zero
        return replace(cert, verdict=ok, deviation=0.0 if ok else 1.0, phase=0.0)
    ok, dev, phase = equal_up_to_global_phase(a.normalized(), apply_pauli(cert.operator, b).normalized(), tol)
    return replace(cert, verdict=ok and cert.consistent, deviation=dev, phase=phase)


def search_equivalence(
    graph, ims_a: StateVector, ims_b: StateVector, tol: float = 1e-9, depth: int = SEARCH_DEPTH
) -> EquivalenceCertificate | None:
    """Brute-force search over stabilizer products of up to ``depth`` generators."""
    graph = _graph_of(graph)
    generators = [v for v in graph.vertices if v not in graph.inputs]
    for size in range(depth + 1):
        for subset in itertools.combinations(generators, size):
            cert = EquivalenceCertificate(subset, _product_of_generators(graph, subset), "search")
            checked = verify_certificate(cert, ims_a, ims_b, tol)
            if checked.verdict:
                return checked
    return None


def certify_pair(
    graph,
    schedule: MeasurementSchedule,
    a: Branch,
    b: Branch,
    tol: float = 1e-9,
    matrix: FlipMatrix | None = None,
    states: tuple[StateVector, StateVector] | None = None,
) -> EquivalenceCertificate:
    """Build, verify and, if the solver's candidate fails, fall back to search.

    The returned certificate's ``method`` tells which path produced it; a
    failed verdict is returned as such, never hidden.
    """
    graph = _graph_of(graph)
    sa, sb = states if states is not None else (a.state, b.state)
    try:
        cert = build_equivalence(graph, schedule, a.record, b.record, matrix)
    except ValueError:
        cert = None
    if cert is not None:
        cert = verify_certificate(cert, sa, sb, tol)
        if cert.verdict:
            return cert
    found = search_equivalence(graph, sa, sb, tol)
    if found is not None:
        return found
    if cert is not None:
        return cert
    return EquivalenceCertificate((), PauliString.identity(graph.n), "none", verdict=False, deviation=1.0)


def equivalence_from_byproducts(sg, a: OutcomeRecord, b: OutcomeRecord) -> PauliString:
    """``T(a) T(b)`` on the logical wires, from the byproduct iteration of each record.

    Both records must measure every measurable qubit of the stitched graph.
    """
    from .compiler import adapt

    full = set(sg.measurable)
    for rec in (a, b):
        if set(rec.outcomes) != full:
            raise ValueError("byproduct construction needs records of the full measurement schedule")
    ta = adapt(sg, a)[-1].T_next
    tb = adapt(sg, b)[-1].T_next
    return multiply(ta, tb).without_phase()


def verify_output_equivalence(
    operator: PauliString, out_a: StateVector, out_b: StateVector, tol: float = 1e-9
) -> EquivalenceCertificate:
    """Check ``out_a == operator out_b`` on the output wires."""
    ok, dev, phase = equal_up_to_global_phase(out_a.normalized(), apply_pauli(operator, out_b).normalized(), tol)
    return EquivalenceCertificate((), operator, "byproduct", verdict=ok, deviation=dev, phase=phase)


@dataclass
class EntropyTable:
    """Entropy (bits) per branch and bipartition."""

    branches: list[str]
    bipartitions: list[tuple[int, ...]]
    values: np.ndarray  # shape (branches, bipartitions)
    extras: dict = field(default_factory=dict)

    @property
    def spread(self) -> np.ndarray:
        """Max minus min entropy over branches, per bipartition."""
        if not len(self.branches):
            return np.zeros(len(self.bipartitions))
        return self.values.max(axis=0) - self.values.min(axis=0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["branch", "bipartition", "entropy"])
        for r, name in enumerate(self.branches):
            for c, part in enumerate(self.bipartitions):
                writer.writerow([name, " ".join(map(str, part)), f"{self.values[r, c]:.12f}"])
        return buf.getvalue()


def entanglement_report(
    branches: Sequence[Branch | StateVector], bipartitions: Sequence[Iterable[int]], names: Sequence[str] | None = None
) -> EntropyTable:
    """Von Neumann entropy of every branch across every bipartition."""
    parts = [tuple(sorted(set(p))) for p in bipartitions]
    states = [_as_state(b) for b in branches]
    if states and len({s.n for s in states}) != 1:
        raise ValueError("branches live on different registers")
    if names is None:
        names = []
        for k, b in enumerate(branches):
            if isinstance(b, Branch):
                names.append("".join("+" if s == 1 else "-" for s in b.record.key()))
            else:
                names.append(str(k))
    values = np.zeros((len(states), len(parts)))
    for r, s in enumerate(states):
        for c, part in enumerate(parts):
            # branch states are pure, so either side of the cut gives the entropy
            other = [q for q in range(1, s.n + 1) if q not in part]
            values[r, c] = entanglement_entropy(s, min(part, other, key=len))
    return EntropyTable(list(names), parts, values)
