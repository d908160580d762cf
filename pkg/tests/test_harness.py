import csv

import numpy as np
import pytest

from wcsched.errors import IncompatibleMode
from wcsched.generators import reference_workload
from wcsched.harness import (
    ExperimentSpec,
    convergence_table,
    ecdf_dominance,
    format_table,
    pairwise_flow_ratio,
    run_experiment,
    reference_experiment,
    write_outputs,
)
from wcsched.model import Mode


def small_spec(**kw):
    base = dict(m=4, disciplines=("fcfs", "srpt", "random"), n_grid=(40, 160), replications=4,
                workload=reference_workload(10, arrival_rate=0.09), seed=5)
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(ValueError):
        small_spec(replications=0)
    with pytest.raises(ValueError):
        small_spec(n_grid=(100, 50))
    with pytest.raises(ValueError):
        small_spec(denominator="guess")
    with pytest.raises(ValueError):
        small_spec(adversarial_B=4.0)
    with pytest.raises(IncompatibleMode):
        small_spec(mode=Mode.PREEMPTIVE)


def test_ratios_are_at_least_one_with_certified_bounds():
    for denom in ("arrival-lb", "best-lb"):
        result = run_experiment(small_spec(denominator=denom))
        assert len(result.samples) == 3 * 2 * 4
        assert all(s.ratio >= 1 - 1e-12 and s.flow_ratio >= 1 - 1e-12 for s in result.samples)


def test_reruns_are_identical_and_parallel_runs_match():
    a = run_experiment(small_spec())
    b = run_experiment(small_spec())
    c = run_experiment(small_spec(), jobs=2)
    assert a.samples == b.samples == c.samples


def test_adding_a_discipline_does_not_perturb_other_cells():
    a = run_experiment(small_spec())
    b = run_experiment(small_spec(disciplines=("fcfs", "srpt", "random", "spt")))
    assert [s for s in b.samples if s.discipline != "spt"] == a.samples


def test_oracle_denominator_on_small_instances():
    spec = small_spec(m=2, n_grid=(4, 6), denominator="oracle", mode=Mode.NONPREEMPTIVE,
                      disciplines=("fcfs", "spt", "random"), workload=reference_workload(4, arrival_rate=0.05))
    result = run_experiment(spec)
    assert all(s.flow_ratio >= 1 - 1e-9 for s in result.samples)


def test_convergence_table_and_outputs(tmp_path):
    result = run_experiment(small_spec())
    rows = convergence_table(result)
    assert [(r.discipline, r.n) for r in rows] == sorted((r.discipline, r.n) for r in rows)
    assert "discipline" in format_table(rows)
    paths = write_outputs(result, tmp_path)
    with paths["ratios.csv"].open() as fh:
        assert len(list(csv.DictReader(fh))) == len(result.samples)
    with paths["ecdf.csv"].open() as fh:
        header = fh.readline().strip()
    assert header == "discipline,n,value,cum_prob"
    assert "flow-time ratio" in paths["table.txt"].read_text()
    first = {p: paths[p].read_bytes() for p in paths}
    write_outputs(run_experiment(small_spec()), tmp_path)
    assert first == {p: paths[p].read_bytes() for p in paths}


def test_single_grid_point_is_an_error():
    result = run_experiment(small_spec(n_grid=(40,)))
    with pytest.raises(ValueError):
        convergence_table(result)


def test_fcfs_ratios_stay_small_in_the_reference_regime():
    spec = reference_experiment(0.45, n_grid=(1000,), replications=10, disciplines=("fcfs",))
    result = run_experiment(spec)
    assert max(s.ratio for s in result.samples) <= 7


def test_srpt_converges_in_the_reference_regime():
    spec = reference_experiment(0.45, n_grid=(500, 4000), replications=8, disciplines=("srpt",))
    result = run_experiment(spec)
    assert result.ratios("srpt", 4000).mean() < result.ratios("srpt", 500).mean()
    assert ecdf_dominance(result, "srpt", 500, 4000) >= 0.9


def test_adversarial_lrpt_srpt_trajectory():
    spec = ExperimentSpec(m=2, disciplines=("lrpt", "srpt"), n_grid=(10, 100, 1000), replications=1,
                          adversarial_B=64.0)
    traj = pairwise_flow_ratio(run_experiment(spec), "lrpt", "srpt")
    for n, value in traj.items():
        assert value == pytest.approx((64 + n * 65) / (2 * n + 64))
    values = list(traj.values())
    assert np.all(np.diff(values) > 0)
