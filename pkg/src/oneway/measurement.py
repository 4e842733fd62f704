"""Measurement angles, outcome records, schedule validation and branch enumeration."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .statevector import StateVector, insert_qubit, measure_out, xy_eigenstate

__all__ = [
    "AngleSpec",
    "OutcomeRecord",
    "MeasurementSchedule",
    "ScheduleViolation",
    "MissingOutcomeError",
    "BranchCapError",
    "Branch",
    "DEFAULT_BRANCH_CAP",
    "rot_angles",
    "validate_schedule",
    "iter_branches",
    "enumerate_branches",
    "sample_branch",
    "run_branch",
]

DEFAULT_BRANCH_CAP = 16


class MissingOutcomeError(KeyError):
    """An adaptive angle was requested before the outcomes it consumes."""


class BranchCapError(ValueError):
    """Too many measured qubits to enumerate exhaustively."""


@dataclass(frozen=True)
class AngleSpec:
    """Measurement angle of one qubit.

    ``kind`` is ``"zero"``, ``"half_pi"`` or ``"adaptive"``.  An adaptive
    angle equals ``sign * prod(s_j for j in depends) * base``.
    """

    kind: str
    base: float = 0.0
    sign: int = 1
    depends: frozenset[int] = frozenset()
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "half_pi", "adaptive"):
            raise ValueError(f"unknown angle kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "depends", frozenset(self.depends))

    @classmethod
    def zero(cls) -> AngleSpec:
        return cls("zero")

    @classmethod
    def half_pi(cls) -> AngleSpec:
        return cls("half_pi")

    @classmethod
    def adaptive(cls, base: float, sign: int, depends: Iterable[int], label: str = "") -> AngleSpec:
        return cls("adaptive", float(base), sign, frozenset(depends), label)

    def sign_for(self, outcomes: Mapping[int, int]) -> int:
        """The outcome-dependent sign multiplying ``base``."""
        sign = self.sign
        for j in self.depends:
            try:
                sign *= outcomes[j]
            except KeyError:
                raise MissingOutcomeError(j) from None
        return sign

    def angle(self, outcomes: Mapping[int, int]) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "half_pi":
            return math.pi / 2
        return self.sign_for(outcomes) * self.base

    def relabel(self, mapping: Mapping[int, int]) -> AngleSpec:
        return AngleSpec(self.kind, self.base, self.sign, frozenset(mapping[j] for j in self.depends), self.label)

    def describe(self) -> dict:
        if self.kind != "adaptive":
            return {"kind": self.kind}
        return {
            "kind": "adaptive",
            "label": self.label,
            "base": self.base,
            "sign": self.sign,
            "depends": sorted(self.depends),
        }


@dataclass(frozen=True)
class OutcomeRecord:
    """Outcomes ``s_v = +-1`` of the measured qubits, in measurement order.

    ``steps`` optionally groups the measured qubits by gate step.
    """

    outcomes: Mapping[int, int]
    steps: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        outcomes = dict(self.outcomes)
        for v, s in outcomes.items():
            if s not in (1, -1):
                raise ValueError(f"outcome of qubit {v} must be +1 or -1, got {s!r}")
        object.__setattr__(self, "outcomes", outcomes)
        steps = tuple(tuple(step) for step in self.steps)
        if steps:
            grouped = [v for step in steps for v in step]
            if len(grouped) != len(set(grouped)) or set(grouped) != set(outcomes):
                raise ValueError("step grouping must partition the measured qubits")
        object.__setattr__(self, "steps", steps)

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(self.outcomes)

    def __getitem__(self, v: int) -> int:
        return self.outcomes[v]

    def __contains__(self, v: int) -> bool:
        return v in self.outcomes

    def __len__(self) -> int:
        return len(self.outcomes)

    def get(self, v: int, default: int = 1) -> int:
        """Outcome of ``v``; unmeasured qubits read as ``default`` (+1)."""
        return self.outcomes.get(v, default)

    def g(self, v: int) -> int:
        """Binary outcome ``(1 - s) / 2``, 0 for unmeasured qubits."""
        return (1 - self.get(v)) // 2

    def flipped(self, vertices: Iterable[int]) -> OutcomeRecord:
        out = dict(self.outcomes)
        for v in vertices:
            out[v] = -out[v]
        return OutcomeRecord(out, self.steps)

    def differs(self, other: OutcomeRecord) -> frozenset[int]:
        if set(self.outcomes) != set(other.outcomes):
            raise ValueError("records cover different measured sets")
        return frozenset(v for v in self.outcomes if self.outcomes[v] != other.outcomes[v])

    def key(self) -> tuple[int, ...]:
        return tuple(self.outcomes[v] for v in self.outcomes)

    def to_json(self) -> list[dict[str, int]] | dict[str, int]:
        if not self.steps:
            return {str(v): s for v, s in self.outcomes.items()}
        return [{str(v): self.outcomes[v] for v in step} for step in self.steps]

    @classmethod
    def from_json(cls, data) -> OutcomeRecord:
        if isinstance(data, str):
            data = json.loads(data)
        if isinstance(data, dict):
            return cls({int(v): int(s) for v, s in data.items()})
        steps = []
        outcomes: dict[int, int] = {}
        for step in data:
            steps.append(tuple(int(v) for v in step))
            outcomes.update({int(v): int(s) for v, s in step.items()})
        return cls(outcomes, tuple(steps))


@dataclass(frozen=True)
class MeasurementSchedule:
    """Ordered ``(vertex, AngleSpec)`` entries."""

    entries: tuple[tuple[int, AngleSpec], ...]

    def __init__(self, entries: Iterable[tuple[int, AngleSpec]]) -> None:
        entries = tuple((int(v), spec) for v, spec in entries)
        vertices = [v for v, _ in entries]
        if len(vertices) != len(set(vertices)):
            raise ValueError("a qubit appears twice in the schedule")
        object.__setattr__(self, "entries", entries)

    @property
    def vertices(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.entries)

    @property
    def specs(self) -> dict[int, AngleSpec]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def restricted(self, order: Sequence[int]) -> MeasurementSchedule:
        """The same angle rules applied in the given qubit order."""
        specs = self.specs
        missing = [v for v in order if v not in specs]
        if missing:
            raise KeyError(f"qubits {missing} are not measurable in this schedule")
        return MeasurementSchedule((v, specs[v]) for v in order)

    def angles(self, record: Mapping[int, int] | OutcomeRecord) -> dict[int, float]:
        outcomes = record.outcomes if isinstance(record, OutcomeRecord) else record
        return {v: spec.angle(outcomes) for v, spec in self.entries}


def rot_angles(
    xi: float, eta: float, zeta: float, partial: Mapping[int, int] | OutcomeRecord, count: int = 4
) -> tuple[float, ...]:
    """The first ``count`` measurement angles of the rotation pattern.

    ``theta_1 = 0``, ``theta_2 = -s_1 xi``, ``theta_3 = -s_2 eta`` and
    ``theta_4 = -s_1 s_3 zeta``; ``partial`` maps pattern qubits to outcomes.
    """
    s = partial.outcomes if isinstance(partial, OutcomeRecord) else partial
    rules = (
        lambda: 0.0,
        lambda: -s[1] * xi,
        lambda: -s[2] * eta,
        lambda: -s[1] * s[3] * zeta,
    )
    out = []
    for rule in rules[:count]:
        try:
            out.append(rule())
        except KeyError as exc:
            raise MissingOutcomeError(exc.args[0]) from None
    return tuple(out)


@dataclass(frozen=True)
class ScheduleViolation:
    vertex: int
    reason: str
    missing: frozenset[int] = frozenset()

    def __str__(self) -> str:
        if self.missing:
            return f"qubit {self.vertex}: {self.reason} {sorted(self.missing)}"
        return f"qubit {self.vertex}: {self.reason}"


def validate_schedule(schedule: MeasurementSchedule, order: Sequence[int] | None = None) -> list[ScheduleViolation]:
    """Check that each adaptive qubit comes after every outcome its angle consumes.

    ``order`` defaults to the schedule's own order.  An empty list means valid.
    """
    specs = schedule.specs
    if order is None:
        order = schedule.vertices
    violations = []
    seen: set[int] = set()
    for v in order:
        if v in seen:
            violations.append(ScheduleViolation(v, "measured twice"))
            continue
        if v not in specs:
            violations.append(ScheduleViolation(v, "not a measurable qubit"))
            seen.add(v)
            continue
        missing = specs[v].depends - seen
        if missing:
            violations.append(ScheduleViolation(v, "angle needs outcomes of", frozenset(missing)))
        seen.add(v)
    return violations


@dataclass
class Branch:
    """One outcome assignment with its intermediate measured state.

    The state is stored compactly: ``residual`` holds the unmeasured qubits
    (``remaining``, ascending) and each measured qubit sits in the known
    eigenstate ``xy_eigenstate(theta, outcome)``.  :attr:`state` expands to
    the full normalized register.
    """

    record: OutcomeRecord
    probability: float
    residual: StateVector
    measured: tuple[tuple[int, float, int], ...]
    n: int
    remaining: tuple[int, ...] = field(default=())

    @property
    def is_zero(self) -> bool:
        return self.probability == 0.0

    @property
    def angles(self) -> dict[int, float]:
        return {v: theta for v, theta, _ in self.measured}

    @property
    def state(self) -> StateVector:
        if self.is_zero:
            return StateVector.zeros(self.n)
        s = self.residual
        for v, theta, outcome in sorted(self.measured):
            s = insert_qubit(v, xy_eigenstate(theta, outcome), s)
        return s

    def measured_factor(self, v: int) -> np.ndarray:
        for u, theta, outcome in self.measured:
            if u == v:
                return xy_eigenstate(theta, outcome)
        raise KeyError(v)


def _check_cap(schedule: MeasurementSchedule, cap: int) -> None:
    if len(schedule) > cap:
        raise BranchCapError(f"{len(schedule)} measured qubits exceed the branch cap of {cap}")


def _step(
    state: StateVector, labels: list[int], v: int, theta: float, outcome: int
) -> tuple[StateVector, float, list[int]]:
    q = labels.index(v) + 1
    if state.is_zero:
        return StateVector.zeros(state.n - 1), 0.0, labels[: q - 1] + labels[q:]
    new, prob = measure_out(q, theta, outcome, state)
    return new, prob, labels[: q - 1] + labels[q:]


def iter_branches(
    state: StateVector,
    schedule: MeasurementSchedule,
    cap: int = DEFAULT_BRANCH_CAP,
    steps: tuple[tuple[int, ...], ...] = (),
) -> Iterator[Branch]:
    """Yield every outcome branch, ``+1`` before ``-1`` at each qubit.

    Shared prefixes are simulated once (depth-first over the outcome tree).
    Probability-0 branches are yielded with ``probability == 0``.
    """
    _check_cap(schedule, cap)
    violations = validate_schedule(schedule)
    if violations:
        raise ValueError("invalid schedule: " + "; ".join(map(str, violations)))
    entries = schedule.entries
    n = state.n

    def walk(k, s, labels, outcomes, measured, prob):
        if k == len(entries):
            record = OutcomeRecord(dict(outcomes), steps)
            yield Branch(record, prob, s, tuple(measured), n, tuple(labels))
            return
        v, spec = entries[k]
        theta = spec.angle(outcomes)
        for outcome in (1, -1):
            child, p, child_labels = _step(s, labels, v, theta, outcome)
            outcomes[v] = outcome
            measured.append((v, theta, outcome))
            yield from walk(k + 1, child, child_labels, outcomes, measured, prob * p)
            measured.pop()
            del outcomes[v]

    yield from walk(0, state, list(range(1, n + 1)), {}, [], 1.0)


def enumerate_branches(
    state: StateVector,
    schedule: MeasurementSchedule,
    cap: int = DEFAULT_BRANCH_CAP,
    steps: tuple[tuple[int, ...], ...] = (),
) -> list[Branch]:
    """All ``2**k`` branches of a ``k``-qubit schedule, in lexicographic outcome order."""
    return list(iter_branches(state, schedule, cap, steps))


def run_branch(
    state: StateVector, schedule: MeasurementSchedule, outcomes: Mapping[int, int] | OutcomeRecord
) -> Branch:
    """Follow a single forced outcome assignment (probability-0 branches allowed)."""
    if isinstance(outcomes, OutcomeRecord):
        outcomes = outcomes.outcomes
    labels = list(range(1, state.n + 1))
    s, prob = state, 1.0
    done: dict[int, int] = {}
    measured = []
    for v, spec in schedule:
        theta = spec.angle(done)
        s, p, labels = _step(s, labels, v, theta, outcomes[v])
        prob *= p
        done[v] = outcomes[v]
        measured.append((v, theta, outcomes[v]))
    return Branch(OutcomeRecord(done), prob, s, tuple(measured), state.n, tuple(labels))


def sample_branch(state: StateVector, schedule: MeasurementSchedule, rng: np.random.Generator) -> Branch:
    """Draw one branch with Born-rule probabilities."""
    labels = list(range(1, state.n + 1))
    s, prob = state, 1.0
    done: dict[int, int] = {}
    measured = []
    for v, spec in schedule:
        theta = spec.angle(done)
        plus, p_plus, plus_labels = _step(s, labels, v, theta, 1)
        if rng.random() < p_plus:
            s, p, outcome = plus, p_plus, 1
            labels = plus_labels
        else:
            s, p, labels = _step(s, labels, v, theta, -1)
            outcome = -1
        prob *= p
        done[v] = outcome
        measured.append((v, theta, outcome))
    return Branch(OutcomeRecord(done), prob, s, tuple(measured), state.n, tuple(labels))


def all_records(vertices: Sequence[int]) -> Iterator[OutcomeRecord]:
    """Every outcome assignment on ``vertices`` in the same order as :func:`iter_branches`."""
    for outs in itertools.product((1, -1), repeat=len(vertices)):
        yield OutcomeRecord(dict(zip(vertices, outs)))
