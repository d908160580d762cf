import pytest

from wcsched.errors import IncompleteTrace, InvalidInstance
from wcsched.generators import gen_adversarial
from wcsched.engine import simulate
from wcsched.model import Event, Fleet, Instance, Job, Mode, ScheduleTrace, derive_metrics, require_valid, validate_instance


def one_machine_trace(jobs_and_times):
    events = []
    for jid, r, start, end in jobs_and_times:
        events += [Event("arrival", r, jid), Event("dispatch", start, jid, 0), Event("complete", end, jid, 0)]
    events.sort(key=lambda e: e.time)
    return ScheduleTrace(events, (1.0,), Mode.NONPREEMPTIVE)


def test_single_job_metrics():
    inst = Instance.from_arrays([0], [5])
    m = derive_metrics(one_machine_trace([(1, 0, 0, 5)]), inst)
    assert m.total_flow == 5 and m.total_completion == 5


def test_two_unit_jobs_metrics():
    inst = Instance.from_arrays([0, 0], [1, 1])
    m = derive_metrics(one_machine_trace([(1, 0, 0, 1), (2, 0, 1, 2)]), inst)
    assert m.total_completion == 3 and m.total_flow == 3


def test_completion_equals_flow_plus_arrivals():
    inst = gen_adversarial(2, 4, 3)
    m = derive_metrics(simulate(inst, Fleet.identical(2), "srpt"), inst)
    assert m.total_completion == pytest.approx(m.total_flow + m.total_arrival)
    assert m.total_arrival == 6
    assert m.size_ratio == 4


def test_weighted_metrics():
    inst = Instance.from_arrays([0, 0], [1, 1], weights=[2, 3])
    m = derive_metrics(one_machine_trace([(1, 0, 0, 1), (2, 0, 1, 2)]), inst)
    assert m.weighted_completion == 2 * 1 + 3 * 2


def test_incomplete_trace_is_rejected():
    inst = Instance.from_arrays([0, 0], [1, 1])
    with pytest.raises(IncompleteTrace):
        derive_metrics(one_machine_trace([(1, 0, 0, 1)]), inst)


def test_validation_accepts_well_formed():
    assert validate_instance(Instance.from_arrays([0, 1, 1], [1, 2, 3])) == []


def test_validation_flags_zero_workload():
    msgs = validate_instance(Instance((Job(1, 0.0, 0.0),)))
    assert any("workload must be positive" in m for m in msgs)


def test_validation_flags_decreasing_arrivals():
    msgs = validate_instance(Instance((Job(1, 5.0, 1.0), Job(2, 3.0, 1.0))))
    assert any("arrivals non-decreasing" in m for m in msgs)
    with pytest.raises(InvalidInstance):
        require_valid(Instance((Job(1, 5.0, 1.0), Job(2, 3.0, 1.0))))


def test_from_arrays_sorts_and_numbers_by_arrival():
    inst = Instance.from_arrays([2, 0, 1], [1, 2, 3])
    assert list(inst.arrivals) == [0, 1, 2]
    assert list(inst.workloads) == [2, 3, 1]
    assert list(inst.ids) == [1, 2, 3]
    assert list(inst.interarrivals) == [0, 1, 1]


def test_fleet_and_mode():
    f = Fleet.with_speeds([2, 1], "non-preemptive")
    assert f.mode is Mode.NONPREEMPTIVE and f.total_speed == 3 and f.max_speed == 2
    assert not f.is_identical and Fleet.identical(3).is_identical
    with pytest.raises(ValueError):
        Fleet(2, (1.0,))
    with pytest.raises(ValueError):
        Mode.parse("sometimes")


def test_trace_helpers():
    trace = ScheduleTrace([
        Event("arrival", 0, 1), Event("dispatch", 0, 1, 0), Event("preempt", 1, 1, 0),
        Event("dispatch", 2, 1, 1), Event("complete", 3, 1, 1),
    ], (1.0, 1.0))
    assert trace.service_intervals() == {1: [(0, 1, 0), (2, 3, 1)]}
    assert trace.first_dispatch() == {1: 0}
    assert trace.horizon == 3 and trace.count("dispatch") == 2
