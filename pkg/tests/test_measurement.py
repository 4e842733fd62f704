import math

import numpy as np
import pytest

from oneway.graph import Graph, graph_state
from oneway.measurement import (
    AngleSpec,
    BranchCapError,
    MeasurementSchedule,
    MissingOutcomeError,
    OutcomeRecord,
    all_records,
    enumerate_branches,
    iter_branches,
    rot_angles,
    run_branch,
    sample_branch,
    validate_schedule,
)
from oneway.patterns import cnot_pattern, rot_pattern
from oneway.statevector import StateVector, equal_up_to_global_phase, project


def test_rot_angles_examples():
    assert rot_angles(0.1, 0.2, 0.3, {1: 1, 2: 1, 3: 1}) == (0.0, -0.1, -0.2, -0.3)
    th = rot_angles(0.1, 0.2, 0.3, {1: -1, 2: 1, 3: 1})
    assert th[1] == pytest.approx(0.1) and th[3] == pytest.approx(0.3)
    assert rot_angles(0, 0, 0, {1: -1, 2: -1, 3: 1}) == (0.0, 0.0, 0.0, 0.0)


def test_rot_angles_missing():
    with pytest.raises(MissingOutcomeError):
        rot_angles(0.1, 0.2, 0.3, {1: 1})
    assert rot_angles(0.1, 0.2, 0.3, {1: 1}, count=2) == (0.0, -0.1)


def test_angle_spec():
    spec = AngleSpec.adaptive(0.5, -1, {1, 3})
    assert spec.angle({1: -1, 3: 1}) == pytest.approx(0.5)
    assert AngleSpec.half_pi().angle({}) == pytest.approx(math.pi / 2)
    with pytest.raises(ValueError):
        AngleSpec("sideways")


def test_validate_schedule_examples():
    sched = rot_pattern(0.1, 0.2, 0.3).schedule
    assert validate_schedule(sched, [1, 2, 3, 4]) == []
    bad = validate_schedule(sched, [2, 1, 3, 4])
    assert [v.vertex for v in bad] == [2] and bad[0].missing == {1}
    cnot = cnot_pattern().schedule
    order = list(cnot.vertices)
    np.random.default_rng(3).shuffle(order)
    assert validate_schedule(cnot, order) == []
    assert validate_schedule(sched, [1, 1])[0].reason == "measured twice"
    assert validate_schedule(sched, [5])[0].reason == "not a measurable qubit"


def test_single_qubit_enumeration():
    sched = MeasurementSchedule([(1, AngleSpec.zero())])
    branches = enumerate_branches(StateVector.basis("+"), sched)
    assert [b.record[1] for b in branches] == [1, -1]
    assert branches[0].probability == pytest.approx(1.0)
    assert branches[1].probability == 0.0 and branches[1].is_zero and branches[1].state.is_zero


def test_rot_first_measurement_on_zero_input():
    p = rot_pattern(0.3, 0.4, 0.5)
    state = graph_state(p.graph, StateVector.basis("0"))
    branches = enumerate_branches(state, p.schedule.restricted([1]))
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])


def test_rot_first_measurement_on_plus_input():
    # K_1 is not a stabilizer (1 is an input), so the outcome is not deterministic
    p = rot_pattern(0.3, 0.4, 0.5)
    state = graph_state(p.graph, StateVector.basis("+"))
    branches = enumerate_branches(state, p.schedule.restricted([1]))
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])


def test_completeness_and_replay(rng):
    p = rot_pattern(*rng.uniform(-3, 3, 3))
    state = graph_state(p.graph, StateVector.random(1, rng))
    branches = enumerate_branches(state, p.schedule)
    assert len(branches) == 16
    assert abs(sum(b.probability for b in branches) - 1) < 1e-10
    for b in branches[:5]:
        s = state
        for v, theta, outcome in b.measured:
            s, _ = project(v, theta, outcome, s)
        assert np.abs(s.amps - b.state.amps).max() < 1e-12
        again = run_branch(state, p.schedule, b.record)
        assert again.probability == pytest.approx(b.probability)
        assert equal_up_to_global_phase(again.state, b.state, 1e-12)[0]


def test_order_invariance_for_fixed_angles(rng):
    p = cnot_pattern()
    g = Graph(15, p.graph.edges, inputs=[1, 9], outputs=[7, 15])
    state = graph_state(g, StateVector.random(2, rng))
    a = [2, 3, 8, 10]
    b = [10, 8, 3, 2]
    pa = {b_.record.key(): b_.probability for b_ in enumerate_branches(state, p.schedule.restricted(a))}
    pb = {
        tuple(b_.record[v] for v in a): b_.probability for b_ in enumerate_branches(state, p.schedule.restricted(b))
    }
    for key, prob in pa.items():
        assert abs(prob - pb[key]) < 1e-12


def test_branch_cap(rng):
    sched = MeasurementSchedule([(v, AngleSpec.zero()) for v in range(1, 6)])
    with pytest.raises(BranchCapError):
        next(iter_branches(StateVector.plus(5), sched, cap=4))


def test_invalid_schedule_rejected():
    sched = rot_pattern(0.1, 0.2, 0.3).schedule.restricted([3, 1, 2])
    with pytest.raises(ValueError):
        next(iter_branches(StateVector.plus(5), sched))


def test_sampling_is_seeded(rng):
    p = rot_pattern(0.4, 0.5, 0.6)
    state = graph_state(p.graph, StateVector.random(1, rng))
    a = sample_branch(state, p.schedule, np.random.default_rng(5))
    b = sample_branch(state, p.schedule, np.random.default_rng(5))
    assert a.record.outcomes == b.record.outcomes


def test_record_json_roundtrip():
    rec = OutcomeRecord({1: 1, 2: -1, 3: 1}, ((1, 2), (3,)))
    again = OutcomeRecord.from_json(rec.to_json())
    assert again.outcomes == rec.outcomes and again.steps == rec.steps
    assert rec.get(9) == 1 and rec.g(2) == 1
    assert rec.differs(rec.flipped([3])) == {3}
    with pytest.raises(ValueError):
        OutcomeRecord({1: 0})


def test_all_records_order():
    recs = list(all_records([4, 7]))
    assert [r.key() for r in recs] == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
