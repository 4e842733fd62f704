"""Self-check suites run by ``oneway selftest``.

Each suite returns :class:`CheckResult` rows; none raises on a failed check.
Sizes are kept small so the whole set runs in well under a minute.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .compiler import Circuit, execute, ims_branches, push_through, stitch, verify_final
from .equivalence import (
    certify_pair,
    entanglement_report,
    equivalence_from_byproducts,
    flip_matrix,
    solve_flip,
    verify_output_equivalence,
)
from .graph import graph_state, verify_stabilizers
from .measurement import OutcomeRecord
from .patterns import Cnot, Rot, cnot_pattern
from .pauli import PauliString
from .statevector import StateVector, apply_single, projector, xy_eigenstate

# Flip sets of each K_i and the generator combination flipping one outcome
# alone, for the CNOT pattern.
CNOT_FLIPS = {
    2: {1, 2, 3}, 3: {2, 3, 4}, 4: {3, 4, 5, 8}, 5: {4, 5, 6}, 6: {5, 6}, 7: {6},
    8: {4, 8, 12}, 10: {9, 11}, 11: {10, 12}, 12: {8, 11, 12, 13}, 13: {12, 14},
    14: {13}, 15: {14},
}  # fmt: skip
CNOT_COMBINED = {
    1: (2, 3, 5, 6), 2: (3, 4, 5, 7, 8, 13, 15), 3: (4, 6, 7, 8, 13, 15), 4: (5, 6),
    5: (6, 7), 6: (7,), 8: (5, 6, 8, 13, 15), 9: (5, 6, 8, 10, 12, 14),
    10: (11, 13, 15), 11: (5, 6, 8, 12, 14), 12: (13, 15), 13: (14,), 14: (15,),
}  # fmt: skip

TWO_GATE = Circuit(2, (Cnot(0, 1), Rot(0.4, -1.1, 0.7, 0)))
TWO_GATE_MEASURE = (1, 2, 3, 5, 6)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    value: float
    tol: float

    def to_json(self) -> dict:
        return {"suite": self.suite, "name": self.name, "passed": self.passed, "value": self.value, "tol": self.tol}


def _result(suite: str, name: str, value: float, tol: float, ok: bool | None = None) -> CheckResult:
    return CheckResult(suite, name, bool(value <= tol if ok is None else ok), float(value), tol)


def stabilizers(rng: np.random.Generator) -> list[CheckResult]:
    out = []
    for label, circuit in (
        ("rot", Circuit(1, (Rot(0.3, 0.2, 0.1),))),
        ("cnot", Circuit(2, (Cnot(0, 1),))),
        ("two_gate", TWO_GATE),
    ):
        g = stitch(circuit).graph
        worst = 0.0
        for _ in range(3):
            psi = StateVector.random_product(len(g.inputs), rng)
            worst = max(worst, max(c.deviation for c in verify_stabilizers(g, graph_state(g, psi))))
        out.append(_result("stabilizers", label, worst, 1e-10))
    return out


def table(rng: np.random.Generator) -> list[CheckResult]:
    p = cnot_pattern()
    m = flip_matrix(p.graph, p.schedule)
    rows_ok = all(set(m.row_flips(i)) == CNOT_FLIPS[i] for i in m.generators) and set(m.generators) == set(CNOT_FLIPS)
    solved_ok = all(solve_flip(m, [q]) == ops for q, ops in CNOT_COMBINED.items())
    return [
        _result("table", "flip rows", 0.0 if rows_ok else 1.0, 0.0),
        _result("table", "full rank", float(len(m.generators) - m.rank), 0.0),
        _result("table", "combined operators", 0.0 if solved_ok else 1.0, 0.0),
    ]


def _all_pairs(sg, psi, order, tol=1e-9) -> float:
    schedule = sg.schedule_for(order)
    m = flip_matrix(sg, schedule)
    branches = list(ims_branches(sg, psi, order))
    states = [b.state for b in branches]
    worst = 0.0
    for i, j in itertools.combinations(range(len(branches)), 2):
        cert = certify_pair(sg, schedule, branches[i], branches[j], tol, m, (states[i], states[j]))
        worst = max(worst, cert.deviation if cert.verdict else math.inf)
    return worst


def rot_theorem(rng: np.random.Generator) -> list[CheckResult]:
    out = []
    worst_gate = worst_pair = 0.0
    for _ in range(3):
        circuit = Circuit(1, (Rot(*rng.uniform(-math.pi, math.pi, 3)),))
        sg = stitch(circuit)
        psi = StateVector.random(1, rng)
        for record in (OutcomeRecord(dict(zip((1, 2, 3, 4), s))) for s in itertools.product((1, -1), repeat=4)):
            res = execute(sg, psi, outcomes=record)
            worst_gate = max(worst_gate, 1 - verify_final(circuit, psi, res.output, res.T_final))
        for k in range(1, 5):
            worst_pair = max(worst_pair, _all_pairs(sg, psi, list(range(1, k + 1))))
    return [_result("rot", "gate correctness", worst_gate, 1e-10), _result("rot", "prefix certificates", worst_pair, 1e-9)]


def cnot_theorem(rng: np.random.Generator) -> list[CheckResult]:
    circuit = Circuit(2, (Cnot(0, 1),))
    sg = stitch(circuit)
    psi = StateVector.random(2, rng)
    worst = 0.0
    for _ in range(16):
        res = execute(sg, psi, rng=rng)
        worst = max(worst, 1 - verify_final(circuit, psi, res.output, res.T_final))
    base = OutcomeRecord({v: 1 for v in sg.measurable})
    flipped = base.flipped([3])
    op = equivalence_from_byproducts(sg, base, flipped)
    out_a = execute(sg, psi, outcomes=base).output
    out_b = execute(sg, psi, outcomes=flipped).output
    cert = verify_output_equivalence(op, out_a, out_b)
    expected = PauliString.from_ops(2, {1: "Y", 2: "X"})
    return [
        _result("cnot", "gate correctness", worst, 1e-10),
        _result("cnot", "byproduct certificate", cert.deviation, 1e-9, cert.verdict and op.same_up_to_phase(expected)),
    ]


def two_gate(rng: np.random.Generator) -> list[CheckResult]:
    sg = stitch(TWO_GATE)
    psi = StateVector.random(2, rng)
    branches = list(ims_branches(sg, psi, TWO_GATE_MEASURE))
    parts = [range(1, 12), [11], [19], [1, 2, 3, 4], [13, 14, 15, 16, 17]]
    table_ = entanglement_report(branches, parts)
    return [
        _result("two_gate", "branch count", abs(len(branches) - 32), 0),
        _result("two_gate", "entropy spread", float(table_.spread.max()), 1e-9),
    ]


def feed_forward(rng: np.random.Generator) -> list[CheckResult]:
    worst = 0.0
    for _ in range(6):
        gates = []
        for _ in range(2):
            if rng.random() < 0.5:
                gates.append(Rot(*rng.uniform(-math.pi, math.pi, 3), wire=int(rng.integers(2))))
            else:
                c = int(rng.integers(2))
                gates.append(Cnot(c, 1 - c))
        if not any(isinstance(g, Cnot) for g in gates) and {g.wire for g in gates} != {0, 1}:
            gates[1] = Cnot(0, 1)
        circuit = Circuit(2, tuple(gates))
        psi = StateVector.random(2, rng)
        res = execute(circuit, psi, rng=rng)
        worst = max(worst, 1 - verify_final(circuit, psi, res.output, res.T_final))
    return [_result("feed_forward", "random two-gate circuits", worst, 1e-9)]


def push(rng: np.random.Generator) -> list[CheckResult]:
    out = []
    for gate, k, measured in ((Rot(0.5, -0.9, 1.3), 1, (1, 2, 3, 4)), (Cnot(), 2, cnot_pattern().order)):
        worst = 0.0
        for _ in range(8):
            t = PauliString(k, int(rng.integers(1 << k)), int(rng.integers(1 << k)))
            outcomes = {v: int(rng.choice((1, -1))) for v in measured}
            res = push_through(gate, t, StateVector.random(k + 1, rng), outcomes)
            worst = max(worst, res.deviation, res.norm_gap)
        out.append(_result("push_through", type(gate).__name__.lower(), worst, 1e-10))
    return out


def kernels(rng: np.random.Generator) -> list[CheckResult]:
    worst = 0.0
    for _ in range(10):
        theta = rng.uniform(-math.pi, math.pi)
        for s in (1, -1):
            p = projector(theta, s)
            worst = max(worst, np.abs(p - projector(theta + math.pi, -s)).max())
            worst = max(worst, np.abs(p @ p - p).max())
            ket = xy_eigenstate(theta, s)
            worst = max(worst, np.abs(p @ ket - ket).max())
        psi = StateVector.random(3, rng)
        total = sum(
            apply_single(projector(theta, s), 2, psi).norm ** 2 for s in (1, -1)
        )
        worst = max(worst, abs(total - 1))
    return [_result("kernels", "projector identities", worst, 1e-12)]


SUITES: dict[str, Callable[[np.random.Generator], list[CheckResult]]] = {
    "stabilizers": stabilizers,
    "table": table,
    "rot": rot_theorem,
    "cnot": cnot_theorem,
    "two_gate": two_gate,
    "feed_forward": feed_forward,
    "push_through": push,
    "kernels": kernels,
}


def run_all(seed: int = 0, suites: list[str] | None = None) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for name in suites or list(SUITES):
        out.extend(SUITES[name](rng))
    return out
