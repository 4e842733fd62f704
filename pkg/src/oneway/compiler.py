"""Circuits of rotation and CNOT gates compiled onto one stitched graph.

Each gate contributes a fresh copy of its pattern.  A wire's current output
vertex becomes the next gate's input vertex on that wire; wires a gate does
not touch cost nothing.  Vertices are numbered wire by wire (wire 0 first,
left to right along the wire), and each CNOT bridge vertex is numbered right
after the row of the lower of its two wires.  A single CNOT therefore keeps
its own 1..15 labels, and CNOT followed by a rotation on the control wire
gives input ``{1, 13}`` and output ``{11, 19}``.

Feed-forward follows the byproduct iteration ``T_1 = 1``, ``W = T`` (rotation)
or ``U T U^dagger`` (CNOT), ``T_next = R W``; a rotation is executed with
Euler angles ``f xi`` where ``U(f xi) = W U(xi) T^-1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Graph, graph_state
from .measurement import (
    AngleSpec,
    Branch,
    MeasurementSchedule,
    OutcomeRecord,
    ScheduleViolation,
    iter_branches,
    run_branch,
    sample_branch,
    validate_schedule as _validate_order,
)
from .patterns import (
    AffineForm,
    Cnot,
    GateKind,
    GatePattern,
    Rot,
    byproduct,
    logical_unitary,
    pattern_for,
    propagate_pauli,
)
from .pauli import PauliString, multiply
from .statevector import (
    MAX_QUBITS,
    StateVector,
    apply_cz,
    apply_pauli,
    apply_single,
    kron_states,
    measure_out,
    project,
    projector,
    purity,
    xy_eigenstate,
)

__all__ = [
    "Circuit",
    "CircuitError",
    "RegisterCapError",
    "Step",
    "StitchedGraph",
    "AdaptationState",
    "ExecutionResult",
    "stitch",
    "compute_adaptation",
    "adapt",
    "validate_schedule",
    "execute",
    "ims_branches",
    "apply_gate",
    "desired_unitary_state",
    "verify_final",
    "fidelity",
    "PushThroughCheck",
    "push_through",
]


class CircuitError(ValueError):
    """Malformed circuit description."""


class RegisterCapError(RuntimeError):
    """A simulation would need more qubits than allowed."""


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``wires`` logical qubits (0-based wire indices)."""

    wires: int
    gates: tuple[GateKind, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.wires < 1:
            raise CircuitError("a circuit needs at least one wire")
        if not self.gates:
            raise CircuitError("a circuit needs at least one gate")
        touched = set()
        for k, gate in enumerate(self.gates):
            if not isinstance(gate, (Rot, Cnot)):
                raise CircuitError(f"gate {k} is not a rotation or CNOT")
            for w in gate.wires:
                if not 0 <= w < self.wires:
                    raise CircuitError(f"gate {k} uses wire {w} outside 0..{self.wires - 1}")
                touched.add(w)
        idle = sorted(set(range(self.wires)) - touched)
        if idle:
            raise CircuitError(f"wires {idle} are never acted on")

    def to_json(self) -> dict:
        return {"wires": self.wires, "gates": [g.to_json() for g in self.gates]}

    @classmethod
    def from_json(cls, data: dict | str) -> Circuit:
        if isinstance(data, str):
            data = json.loads(data)
        try:
            wires = int(data["wires"])
            gates = []
            for k, spec in enumerate(data["gates"]):
                kind = str(spec["kind"]).lower()
                if kind == "rot":
                    gates.append(
                        Rot(float(spec["xi"]), float(spec["eta"]), float(spec["zeta"]), int(spec.get("wire", 0)))
                    )
                elif kind == "cnot":
                    gates.append(Cnot(int(spec["control"]), int(spec["target"])))
                else:
                    raise CircuitError(f"gate {k}: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, CircuitError):
                raise
            raise CircuitError(f"bad circuit description: {exc}") from exc
        return cls(wires, tuple(gates))


@dataclass(frozen=True)
class Step:
    """One gate placed in the stitched graph."""

    index: int
    gate: GateKind
    pattern: GatePattern
    local_to_global: Mapping[int, int]
    inputs: Mapping[int, int]  # wire -> vertex, the section X_I of this step
    outputs: Mapping[int, int]  # wire -> vertex, the section X_O of this step

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(self.local_to_global[v] for v in self.pattern.order)

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self.local_to_global.values()))

    @property
    def new_vertices(self) -> tuple[int, ...]:
        inputs = {self.local_to_global[v] for v in self.pattern.wire_inputs}
        return tuple(v for v in self.vertices if v not in inputs)

    @property
    def edges(self) -> list[tuple[int, int]]:
        m = self.local_to_global
        return [(m[i], m[j]) for i, j in self.pattern.graph.sorted_edges()]

    def local_outcomes(self, record: OutcomeRecord | Mapping[int, int]) -> dict[int, int]:
        get = record.get if isinstance(record, OutcomeRecord) else (lambda v: record.get(v, 1))
        return {local: get(self.local_to_global[local]) for local in self.pattern.order}


@dataclass(frozen=True)
class StitchedGraph:
    circuit: Circuit
    graph: Graph
    steps: tuple[Step, ...]
    schedule: MeasurementSchedule  # full default order, angle rules include feed-forward

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def measurable(self) -> tuple[int, ...]:
        return self.schedule.vertices

    def step_of(self, v: int) -> int:
        for step in self.steps:
            if v in step.local_to_global.values() and v not in step.outputs.values():
                return step.index
        raise KeyError(f"vertex {v} is not measured in any step")

    def grouping(self, order: Iterable[int]) -> tuple[tuple[int, ...], ...]:
        order = list(order)
        groups = []
        for step in self.steps:
            members = set(step.measured)
            group = tuple(v for v in order if v in members)
            if group:
                groups.append(group)
        return tuple(groups)

    def schedule_for(self, order: Sequence[int] | None = None) -> MeasurementSchedule:
        return self.schedule if order is None else self.schedule.restricted(order)

    def to_json(self) -> dict:
        data = self.graph.to_json()
        data["angles"] = {str(v): spec.describe() for v, spec in self.schedule.entries}
        data["order"] = list(self.schedule.vertices)
        data["steps"] = [
            {
                "gate": step.gate.to_json(),
                "vertices": list(step.vertices),
                "measured": list(step.measured),
                "inputs": {str(w): v for w, v in step.inputs.items()},
                "outputs": {str(w): v for w, v in step.outputs.items()},
            }
            for step in self.steps
        ]
        return data


# symbolic Pauli over wires: wire -> (x exponent, z exponent)
_Symbolic = dict


def _symbolic_identity(wires: int) -> _Symbolic:
    return {w: (AffineForm(), AffineForm()) for w in range(wires)}


def _rot_specs(step_map: Mapping[int, int], gate: Rot, tx: AffineForm, tz: AffineForm) -> dict[int, AngleSpec]:
    """Global angle rules of a rotation whose Euler signs are set by ``T = X**tx Z**tz``."""
    m = step_map

    def adaptive(base, label, own, form):
        sign = -1 * (-1) ** form.const
        depends = frozenset(m[v] for v in own) ^ form.variables
        return AngleSpec.adaptive(base, sign, depends, label)

    return {
        m[1]: AngleSpec.zero(),
        m[2]: adaptive(gate.xi, "xi", {1}, tz),
        m[3]: adaptive(gate.eta, "eta", {2}, tx),
        m[4]: adaptive(gate.zeta, "zeta", {1, 3}, tz),
    }


def stitch(circuit: Circuit) -> StitchedGraph:
    """Place every gate pattern into one graph with fresh vertex ids."""
    rows: dict[int, list] = {w: [("input", w)] for w in range(circuit.wires)}
    bridges: dict[int, list] = {w: [] for w in range(circuit.wires)}
    current = {w: ("input", w) for w in range(circuit.wires)}
    placed = []
    for k, gate in enumerate(circuit.gates):
        pattern = pattern_for(gate)
        keys = {}
        if isinstance(gate, Rot):
            keys[1] = current[gate.wire]
            for v in (2, 3, 4, 5):
                keys[v] = (k, v)
                rows[gate.wire].append((k, v))
            current[gate.wire] = (k, 5)
        else:
            keys[1] = current[gate.control]
            keys[9] = current[gate.target]
            for v in range(2, 8):
                keys[v] = (k, v)
                rows[gate.control].append((k, v))
            for v in range(10, 16):
                keys[v] = (k, v)
                rows[gate.target].append((k, v))
            keys[8] = (k, 8)
            bridges[min(gate.control, gate.target)].append((k, 8))
            current[gate.control] = (k, 7)
            current[gate.target] = (k, 15)
        placed.append((gate, pattern, keys))

    ids = {}
    for w in range(circuit.wires):
        for key in rows[w] + bridges[w]:
            ids[key] = len(ids) + 1

    steps = []
    edges = []
    for k, (gate, pattern, keys) in enumerate(placed):
        m = {local: ids[key] for local, key in keys.items()}
        inputs = {w: m[v] for w, v in zip(gate.wires, pattern.wire_inputs)}
        outputs = {w: m[v] for w, v in zip(gate.wires, pattern.wire_outputs)}
        step = Step(k, gate, pattern, m, inputs, outputs)
        steps.append(step)
        edges.extend(step.edges)

    c_in = [ids[("input", w)] for w in range(circuit.wires)]
    c_out = [ids[current[w]] for w in range(circuit.wires)]
    graph = Graph(len(ids), edges, inputs=c_in, outputs=c_out)

    # sections X_I of each step chain into X_O of the previous one
    sections = {w: c_in[w] for w in range(circuit.wires)}
    full_steps = []
    for step in steps:
        x_in = dict(sections)
        sections.update(step.outputs)
        full_steps.append(Step(step.index, step.gate, step.pattern, step.local_to_global, x_in, dict(sections)))

    return StitchedGraph(circuit, graph, tuple(full_steps), _symbolic_schedule(circuit, full_steps))


def _symbolic_schedule(circuit: Circuit, steps: Sequence[Step]) -> MeasurementSchedule:
    t = _symbolic_identity(circuit.wires)
    entries = []
    for step in steps:
        gate, m = step.gate, step.local_to_global
        if isinstance(gate, Rot):
            tx, tz = t[gate.wire]
            specs = _rot_specs(m, gate, tx, tz)
            w = dict(t)
        else:
            w = dict(t)
            (xc, zc), (xt, zt) = t[gate.control], t[gate.target]
            w[gate.control] = (xc, zc + zt)
            w[gate.target] = (xt + xc, zt)
            specs = {m[v]: spec for v, spec in step.pattern.angles.items()}
        entries.extend((m[v], specs[m[v]]) for v in step.pattern.order)
        for wire, (fx, fz) in zip(gate.wires, step.pattern.byproduct_forms):
            wx, wz = w[wire]
            w[wire] = (wx + fx.relabel(m), wz + fz.relabel(m))
        t = w
    return MeasurementSchedule(entries)


def validate_schedule(sg: StitchedGraph, order: Sequence[int]) -> list[ScheduleViolation]:
    """Violations of measuring ``order`` on the stitched graph (empty when valid)."""
    return _validate_order(sg.schedule, order)


# ----------------------------------------------------------------------------
# concrete feed-forward


def _embed(p: PauliString, wires: Sequence[int], total: int) -> PauliString:
    return p.relabel({q + 1: w + 1 for q, w in enumerate(wires)}, total)


def _extract(t: PauliString, wires: Sequence[int]) -> PauliString:
    x = z = 0
    for q, w in enumerate(wires):
        x |= t.x_bit(w + 1) << q
        z |= t.z_bit(w + 1) << q
    return PauliString(len(wires), x, z, 0)


@dataclass(frozen=True)
class AdaptationState:
    """Feed-forward data of one step: ``T`` before, ``W``, Euler signs, ``R`` and ``T`` after."""

    step: int
    T: PauliString
    W: PauliString
    signs: tuple[int, int, int]
    R: PauliString
    T_next: PauliString


def compute_adaptation(T: PauliString, gate: GateKind) -> tuple[PauliString, tuple[int, int, int]]:
    """``(W, f)`` for a gate preceded by the accumulated byproduct ``T`` (a Pauli on all wires)."""
    wires = gate.wires
    sub = _extract(T, wires)
    image, signs = propagate_pauli(gate, sub)
    rest_mask = ~sum(1 << w for w in wires)
    rest = PauliString(T.n, T.x_mask & rest_mask, T.z_mask & rest_mask, 0)
    w = multiply(_embed(image, wires, T.n), rest)
    # conjugation keeps the overall phase of T; carry it over
    w = PauliString(w.n, w.x_mask, w.z_mask, w.phase + T.phase)
    return w, signs


def adapt(sg: StitchedGraph, record: OutcomeRecord | Mapping[int, int]) -> list[AdaptationState]:
    """Run the byproduct iteration for one outcome record (unmeasured qubits read +1)."""
    wires = sg.circuit.wires
    t = PauliString.identity(wires)
    states = []
    for step in sg.steps:
        w, signs = compute_adaptation(t, step.gate)
        r = _embed(byproduct(step.pattern, step.local_outcomes(record)), step.gate.wires, wires)
        t_next = multiply(r, w)
        states.append(AdaptationState(step.index, t, w, signs, r, t_next))
        t = t_next
    return states


def step_angles(step: Step, signs: tuple[int, int, int], record: Mapping[int, int]) -> dict[int, float]:
    """Concrete angles of a step's measured qubits given its Euler signs (global labels)."""
    local = {v: record[g] for v, g in step.local_to_global.items() if g in record}
    gate = step.gate
    if isinstance(gate, Rot):
        xi, eta, zeta = gate.with_signs(signs).angles
        rules = {
            1: lambda: 0.0,
            2: lambda: -local[1] * xi,
            3: lambda: -local[2] * eta,
            4: lambda: -local[1] * local[3] * zeta,
        }
        out = {}
        for v, rule in rules.items():
            try:
                out[step.local_to_global[v]] = rule()
            except KeyError:
                pass
        return out
    return {step.local_to_global[v]: spec.angle({}) for v, spec in step.pattern.angles.items()}


# ----------------------------------------------------------------------------
# execution


@dataclass
class StepReport:
    step: int
    gate: dict
    outcomes: dict[int, int]
    angles: dict[int, float]
    byproduct: PauliString
    W: PauliString
    signs: tuple[int, int, int]
    T_next: PauliString
    output_purity: float | None
    probability: float

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "gate": self.gate,
            "outcomes": {str(v): s for v, s in self.outcomes.items()},
            "angles": {str(v): a for v, a in self.angles.items()},
            "byproduct": str(self.byproduct),
            "W": str(self.W),
            "euler_signs": list(self.signs),
            "T_next": str(self.T_next),
            "output_purity": self.output_purity,
            "probability": self.probability,
        }


@dataclass
class ExecutionResult:
    """Outcome of :func:`execute`.

    Full-schedule runs fill ``output`` (the state on the logical wires, wire
    ``w`` on qubit ``w + 1``); partial runs fill ``ims`` with the intermediate
    measured state of the whole stitched graph.
    """

    record: OutcomeRecord
    T_final: PauliString
    probability: float
    output: StateVector | None = None
    ims: Branch | None = None
    steps: list[StepReport] = field(default_factory=list)
    adaptation: list[AdaptationState] = field(default_factory=list)

    @property
    def is_zero(self) -> bool:
        return self.probability == 0.0


def _permute(state: StateVector, labels: Sequence[int], order: Sequence[int]) -> StateVector:
    """Reorder qubits so that ``order[k]`` ends up on qubit ``k + 1``."""
    n = state.n
    t = state.tensor()
    axes = [0] * n
    for k, v in enumerate(order):
        axes[n - (k + 1)] = n - (labels.index(v) + 1)
    return StateVector(n, np.ascontiguousarray(np.transpose(t, axes)).reshape(-1))


def _choose(
    v: int,
    theta: float,
    state: StateVector,
    q: int,
    forced: Mapping[int, int] | None,
    rng: np.random.Generator | None,
) -> tuple[int, StateVector, float]:
    if forced is not None:
        outcome = forced[v]
        new, p = project(q, theta, outcome, state)
        return outcome, new, p
    plus, p_plus = project(q, theta, 1, state)
    if rng.random() < p_plus:
        return 1, plus, p_plus
    minus, p_minus = project(q, theta, -1, state)
    return -1, minus, p_minus


def execute(
    circuit: Circuit | StitchedGraph,
    psi_in: StateVector,
    outcomes: OutcomeRecord | Mapping[int, int] | None = None,
    rng: np.random.Generator | None = None,
    measure: Sequence[int] | None = None,
    tol: float = 1e-10,
    max_qubits: int = MAX_QUBITS,
) -> ExecutionResult:
    """Run the measurement pattern of a circuit.

    Outcomes come from ``outcomes`` (forced, probability-0 branches allowed)
    or are sampled from ``rng``.  Without ``measure`` every step is measured
    completely, gate by gate, and measured qubits are dropped after checking
    that the remaining output section is pure.  With ``measure`` the whole
    stitched graph is simulated and the given qubits are measured in order.
    """
    sg = circuit if isinstance(circuit, StitchedGraph) else stitch(circuit)
    if psi_in.n != sg.circuit.wires:
        raise ValueError(f"input state has {psi_in.n} qubits for {sg.circuit.wires} wires")
    if outcomes is None and rng is None:
        raise ValueError("give forced outcomes or a random generator")
    forced = None
    if outcomes is not None:
        forced = outcomes.outcomes if isinstance(outcomes, OutcomeRecord) else dict(outcomes)
    if measure is not None:
        return _execute_partial(sg, psi_in, forced, rng, list(measure), max_qubits)
    return _execute_full(sg, psi_in, forced, rng, tol, max_qubits)


def _execute_partial(sg, psi_in, forced, rng, measure, max_qubits) -> ExecutionResult:
    violations = validate_schedule(sg, measure)
    if violations:
        raise ValueError("invalid measurement order: " + "; ".join(map(str, violations)))
    if sg.n > max_qubits:
        raise RegisterCapError(f"stitched graph has {sg.n} qubits, cap is {max_qubits}")
    schedule = sg.schedule_for(measure)
    state = graph_state(sg.graph, psi_in)
    if forced is not None:
        branch = run_branch(state, schedule, {v: forced[v] for v in measure})
    else:
        branch = sample_branch(state, schedule, rng)
    record = OutcomeRecord(branch.record.outcomes, sg.grouping(measure))
    branch.record = record
    adaptation = adapt(sg, record)
    return ExecutionResult(record, adaptation[-1].T_next, branch.probability, ims=branch, adaptation=adaptation)


def _execute_full(sg, psi_in, forced, rng, tol, max_qubits) -> ExecutionResult:
    wires = sg.circuit.wires
    labels = [sg.steps[0].inputs[w] for w in range(wires)]
    state = psi_in
    t = PauliString.identity(wires)
    record: dict[int, int] = {}
    reports = []
    adaptation = []
    total_prob = 1.0
    for step in sg.steps:
        new = list(step.new_vertices)
        if len(labels) + len(new) > max_qubits:
            raise RegisterCapError(f"step {step.index} needs {len(labels) + len(new)} qubits, cap is {max_qubits}")
        state = kron_states([state, StateVector.plus(len(new))])
        labels = labels + new
        for i, j in step.edges:
            state = apply_cz(labels.index(i) + 1, labels.index(j) + 1, state)

        w, signs = compute_adaptation(t, step.gate)
        angles = {}
        step_prob = 1.0
        for v in step.measured:
            theta = step_angles(step, signs, record)[v]
            outcome, state, p = _choose(v, theta, state, labels.index(v) + 1, forced, rng)
            record[v] = outcome
            angles[v] = theta
            step_prob *= p
            if p == 0.0:
                state = StateVector.zeros(state.n)
        total_prob *= step_prob

        out_vertices = [step.outputs[wire] for wire in range(wires)]
        pure = None
        if not state.is_zero:
            pure = purity(state, [labels.index(v) + 1 for v in out_vertices])
            if pure < 1 - tol:
                raise AssertionError(f"step {step.index}: output section not pure (purity {pure})")
        for v in sorted(step.measured, key=labels.index, reverse=True):
            q = labels.index(v) + 1
            if state.is_zero:
                state = StateVector.zeros(state.n - 1)
            else:
                state, _ = measure_out(q, angles[v], record[v], state)
            labels.pop(q - 1)

        r = _embed(byproduct(step.pattern, step.local_outcomes(record)), step.gate.wires, wires)
        t_next = multiply(r, w)
        adaptation.append(AdaptationState(step.index, t, w, signs, r, t_next))
        reports.append(
            StepReport(
                step.index,
                step.gate.to_json(),
                {v: record[v] for v in step.measured},
                angles,
                r,
                w,
                signs,
                t_next,
                pure,
                step_prob,
            )
        )
        t = t_next

    output = _permute(state, labels, [sg.steps[-1].outputs[w] for w in range(wires)])
    out_record = OutcomeRecord(record, tuple(step.measured for step in sg.steps))
    return ExecutionResult(out_record, t, total_prob, output=output, steps=reports, adaptation=adaptation)


def ims_branches(sg: StitchedGraph, psi_in: StateVector, measure: Sequence[int] | None = None, cap: int = 16):
    """Iterate over every outcome branch of measuring ``measure`` on the stitched graph."""
    order = list(sg.measurable if measure is None else measure)
    violations = validate_schedule(sg, order)
    if violations:
        raise ValueError("invalid measurement order: " + "; ".join(map(str, violations)))
    if sg.n > MAX_QUBITS:
        raise RegisterCapError(f"stitched graph has {sg.n} qubits, cap is {MAX_QUBITS}")
    state = graph_state(sg.graph, psi_in)
    return iter_branches(state, sg.schedule_for(order), cap, sg.grouping(order))


# ----------------------------------------------------------------------------
# verification


def apply_gate(gate: GateKind, state: StateVector) -> StateVector:
    """Apply a logical gate to a wire register (wire ``w`` on qubit ``w + 1``)."""
    if isinstance(gate, Rot):
        return apply_single(logical_unitary(gate), gate.wire + 1, state)
    n = state.n
    t = state.tensor().copy()
    c_axis, t_axis = n - (gate.control + 1), n - (gate.target + 1)
    index = [slice(None)] * n
    index[c_axis] = 1
    sub = t[tuple(index)]
    # after fixing the control axis, axes above it shift down by one
    flip_axis = t_axis if t_axis < c_axis else t_axis - 1
    t[tuple(index)] = np.flip(sub, axis=flip_axis).copy()
    return StateVector(n, t.reshape(-1))


def desired_unitary_state(circuit: Circuit, psi_in: StateVector) -> StateVector:
    """``U_m ... U_1 psi_in`` computed directly from the logical gate matrices."""
    state = psi_in
    for gate in circuit.gates:
        state = apply_gate(gate, state)
    return state


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(a.normalized().inner(b.normalized())) ** 2


def verify_final(circuit: Circuit, psi_in: StateVector, output: StateVector, T_final: PauliString) -> float:
    """Fidelity between the output and ``T_final U_desired psi_in``."""
    expected = apply_pauli(T_final, desired_unitary_state(circuit, psi_in))
    return fidelity(output, expected)


# ----------------------------------------------------------------------------
# push-through relation


_SINGLE_PAULIS = (("I", 0, 0), ("X", 1, 0), ("Y", 1, 1), ("Z", 0, 1))


@dataclass(frozen=True)
class PushThroughCheck:
    """Both sides of ``P(f xi, s) S T~ |Psi> = W~ P(xi, s) S |Psi>`` for one gate pattern.

    ``padding`` is the Pauli ``O`` on the measured qubits that completes
    ``W~ = O W``; it is read off per qubit from the two sets of eigenstates.
    """

    gate: GateKind
    T: PauliString
    W: PauliString
    signs: tuple[int, int, int]
    padding: PauliString
    deviation: float
    norm_gap: float
    passed: bool


def _pattern_register(pattern: GatePattern, psi: StateVector) -> StateVector:
    # gate wires on their input vertices, spectators after the pattern, |+> elsewhere
    n, k = pattern.graph.n, len(pattern.wire_inputs)
    extra = psi.n - k
    others = [v for v in pattern.graph.vertices if v not in pattern.wire_inputs]
    staged = kron_states([psi, StateVector.plus(len(others))])
    placement = list(pattern.wire_inputs) + [n + j + 1 for j in range(extra)] + others
    return _permute(staged, placement, list(range(1, n + extra + 1)))


def _project_all(state: StateVector, angles: Mapping[int, float], outcomes: Mapping[int, int]) -> StateVector:
    for v in sorted(angles):
        state = apply_single(projector(angles[v], outcomes[v]), v, state)
    return state


def push_through(
    gate: GateKind,
    T: PauliString,
    psi: StateVector,
    outcomes: Mapping[int, int],
    tol: float = 1e-10,
) -> PushThroughCheck:
    """Evaluate the push-through relation for a Pauli ``T`` on the gate's wires.

    ``psi`` holds the gate wires on its first qubits (control first for a
    CNOT) and any number of spectator qubits after them, so the input may be
    entangled with the rest of a larger computation.  Projectors are left
    unnormalized; both the state and its norm must agree.
    """
    pattern = pattern_for(gate)
    local_gate = pattern.gate
    k = len(local_gate.wires)
    if T.n != k:
        raise ValueError(f"T acts on {T.n} wires, gate has {k}")
    if psi.n < k:
        raise ValueError("input state is smaller than the gate")
    W, signs = compute_adaptation(T, local_gate)
    total = psi.n - k + pattern.graph.n
    t_tilde = T.relabel({q + 1: v for q, v in enumerate(pattern.wire_inputs)}, total)
    register = _pattern_register(pattern, psi)
    shifted = apply_pauli(t_tilde, register)  # T acts before the entangler
    for i, j in pattern.graph.sorted_edges():
        register = apply_cz(i, j, register)
        shifted = apply_cz(i, j, shifted)
    if isinstance(local_gate, Rot):
        moved = pattern_for(local_gate.with_signs(signs))
    else:
        moved = pattern
    angles_f = moved.schedule.angles(outcomes)
    angles = pattern.schedule.angles(outcomes)
    lhs = _project_all(shifted, angles_f, outcomes)
    rhs = _project_all(register, angles, outcomes)

    x = z = 0
    for v in angles:
        target = xy_eigenstate(angles_f[v], outcomes[v])
        source = xy_eigenstate(angles[v], outcomes[v])
        best = max(
            _SINGLE_PAULIS,
            key=lambda p: abs(np.vdot(target, apply_single(_PAULI_MATS[p[0]], 1, StateVector(1, source)).amps)),
        )
        x |= best[1] << (v - 1)
        z |= best[2] << (v - 1)
    padding = PauliString(total, x, z)
    w_tilde = multiply(padding, W.relabel({q + 1: v for q, v in enumerate(pattern.wire_outputs)}, total))
    rhs = apply_pauli(w_tilde, rhs)
    ln, rn = lhs.norm, rhs.norm
    gap = abs(ln - rn)
    if ln**2 <= 1e-24 and rn**2 <= 1e-24:
        deviation = 0.0
    else:
        deviation = max(0.0, 1.0 - abs(lhs.inner(rhs)) / (ln * rn))
    return PushThroughCheck(local_gate, T, W, signs, padding, deviation, gap, deviation <= tol and gap <= tol)


_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
