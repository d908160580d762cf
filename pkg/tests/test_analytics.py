import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wcsched.analytics import (
    arrival_time_lower_bound,
    completion_lower_bound,
    cyclic_partition,
    cyclic_window_sums,
    empirical_cdf,
    fcfs_cross_check,
    lindley_closed_form,
    lindley_waits,
    lower_bounds,
    per_job_lower_bound,
    sample_stability,
    scaled_max_diagnostic,
    size_ratio,
    speed_routing_split,
    stability_stats,
    workload_lower_bound,
)
from wcsched.engine import simulate
from wcsched.errors import EmptyInstance, EmptySample, LengthMismatch
from wcsched.generators import gen_adversarial, gen_stochastic, reference_workload, threshold_lift
from wcsched.model import Event, Fleet, Instance, Mode, ScheduleTrace
from wcsched.oracles import mm1_corpus, opt_nonpreemptive


@pytest.mark.parametrize("p, dr, want", [
    ([4, 4], [0, 1], [0, 3]),
    ([1, 1, 1], [0, 2, 2], [0, 0, 0]),
    ([3, 3, 3], [0, 1, 1], [0, 2, 4]),
])
def test_lindley_examples(p, dr, want):
    assert list(lindley_waits(p, dr)) == want
    assert list(lindley_closed_form(p, dr)) == want


def test_lindley_length_mismatch():
    with pytest.raises(LengthMismatch):
        lindley_waits([1, 2], [0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 10), st.floats(0, 10)), min_size=1, max_size=40))
def test_lindley_recursion_equals_closed_form(rows):
    p, dr = zip(*rows)
    assert np.allclose(lindley_waits(p, dr, check=False), lindley_closed_form(p, dr), rtol=1e-9, atol=1e-9)


def test_engine_fcfs_matches_lindley():
    inst = mm1_corpus(1, n=200, seed=3)[0]
    assert fcfs_cross_check(inst).ok
    assert fcfs_cross_check(Instance.from_arrays([0], [1])).ok


def test_cross_check_reports_corrupted_index():
    inst = Instance.from_arrays([0, 1, 2, 3], [2, 2, 2, 2])
    trace = simulate(inst, Fleet.identical(1, Mode.NONPREEMPTIVE), "fcfs")
    corrupted = [Event(e.kind, e.time + 1, e.job, e.machine) if e.kind == "dispatch" and e.job == 3 else e
                 for e in trace.events]
    check = fcfs_cross_check(inst, ScheduleTrace(corrupted, trace.speeds, trace.mode))
    assert not check.ok and check.index == 2


def test_lower_bound_examples():
    assert arrival_time_lower_bound(Instance.from_arrays([0, 1, 2], [1, 1, 1])) == 3
    assert arrival_time_lower_bound(gen_adversarial(2, 4, 3)) == 6
    assert arrival_time_lower_bound(Instance.from_arrays([0, 0], [1, 1])) == 0
    assert workload_lower_bound(Instance.from_arrays([0], [2]), Fleet.identical(1)) == 2
    assert workload_lower_bound(Instance.from_arrays([0, 0], [1, 2]), Fleet.identical(1)) == 4
    assert workload_lower_bound(Instance.from_arrays([0, 0], [1, 1]), Fleet.identical(2)) == 1.5
    assert completion_lower_bound(Instance.from_arrays([0], [5]), Fleet.identical(1)) == 5


def test_bounds_on_adversarial_instance_sit_below_the_optimum():
    inst = gen_adversarial(2, 4, 3)
    fleet = Fleet.identical(2, Mode.NONPREEMPTIVE)
    b = lower_bounds(inst, fleet)
    assert b.best == max(b.arrival, b.workload, b.per_job)
    assert b.best <= opt_nonpreemptive(inst, fleet).optimal_completion + 1e-9


def test_zero_arrivals_make_workload_bound_win():
    inst = Instance.from_arrays([0, 0, 0], [3, 1, 2])
    b = lower_bounds(inst, Fleet.identical(1))
    assert b.arrival == 0 and b.source == "workload" and b.best == 1 + 3 + 6


def test_per_job_bound_uses_fastest_machine():
    inst = Instance.from_arrays([1], [4])
    assert per_job_lower_bound(inst, Fleet.with_speeds([2, 1])) == 3


def test_size_ratio():
    assert size_ratio(Instance.from_arrays([0, 0], [4, 1])) == 4
    assert size_ratio(Instance.from_arrays([0, 0], [2, 2])) == 1
    rng = np.random.default_rng(0)
    lifted = threshold_lift(Instance.from_arrays(np.zeros(50), np.r_[0.2, 3, rng.uniform(0.2, 3, 48)]), 1)
    assert size_ratio(lifted) == 3
    with pytest.raises(EmptyInstance):
        size_ratio(Instance(()))


def test_cyclic_partition():
    inst = Instance.from_arrays([1, 2, 3, 4], [1, 2, 3, 4])
    s1, s2 = cyclic_partition(inst, 2)
    assert list(s1.ids) == [1, 3] and list(s2.ids) == [2, 4]
    assert cyclic_partition(inst, 1)[0].jobs == inst.jobs
    w1, w2 = cyclic_window_sums([1, 1, 1, 1], 2)
    assert list(w1) == [1, 2] and list(w2) == [2, 2]


def test_cyclic_partition_stream_gaps_are_window_sums():
    inst = gen_stochastic(reference_workload(30, seed=4))
    for m in (1, 2, 3, 5):
        streams = cyclic_partition(inst, m)
        assert sorted(np.concatenate([s.workloads for s in streams])) == sorted(inst.workloads)
        for stream, window in zip(streams, cyclic_window_sums(inst.interarrivals, m)):
            gaps = np.diff(stream.arrivals)
            assert np.allclose(gaps, window[1:], rtol=1e-12)


def test_speed_routing_split():
    inst = Instance.from_arrays(np.arange(10_000.0), np.ones(10_000))
    a, b = speed_routing_split(inst, [1, 1], seed=1)
    assert abs(a.n - 5000) <= 3 * 50
    fast, slow = speed_routing_split(inst, [3, 1], seed=2)
    assert abs(fast.n / 10_000 - 0.75) <= 3 * np.sqrt(0.75 * 0.25 / 10_000)
    assert speed_routing_split(inst, [1])[0].jobs == inst.jobs


def test_stability_examples():
    assert stability_stats(40, 1 / 0.45, 20, n=10).rho_n == pytest.approx(0.9, abs=1e-12)
    crit = stability_stats(1.0, 1.0, 1, n=10)
    assert crit.rho_n == 1 and crit.s_multi == 0
    assert stability_stats(3.0, 1.0, 2, n=10).s_multi == 1


def test_stability_windows_extend_with_last_mean():
    r = stability_stats([1.0, 1.0, 6.0], [1.0, 2.0, 3.0], m=2)
    assert r.rho_n == pytest.approx(1.0)  # 6 / (3 + 3)
    assert r.s_single == pytest.approx((0 + 0 + 0) / 3)


def test_sample_stability():
    inst = gen_stochastic(reference_workload(2000, seed=5))
    assert sample_stability(inst, 20).rho_n == pytest.approx(0.9, rel=0.1)


def test_empirical_cdf():
    assert empirical_cdf([1, 1, 2]).points == [(1.0, 2 / 3), (2.0, 1.0)]
    assert empirical_cdf([7]).points == [(7.0, 1.0)]
    with pytest.raises(EmptySample):
        empirical_cdf([])
    u = np.random.default_rng(0).random(10_000)
    F = empirical_cdf(u)
    assert F.is_valid()
    assert np.max(np.abs(F.probs - F.values)) < 0.03


def test_scaled_max_diagnostic():
    ns, v = scaled_max_diagnostic(np.full(100, 2.0), 2)
    assert np.allclose(v, 2 / np.sqrt(ns)) and np.all(np.diff(v) < 0)
    rng = np.random.default_rng(0)
    _, v = scaled_max_diagnostic(rng.exponential(1, 100_000), 2)
    assert v[-1] < 0.1 * v[99]
    _, v = scaled_max_diagnostic(1 + rng.pareto(1.5, 100_000), 2)
    assert v[-1] > 0.1 * v[99]
    with pytest.raises(ValueError):
        scaled_max_diagnostic([1.0], 0)
