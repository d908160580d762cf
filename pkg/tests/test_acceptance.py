"""End-to-end acceptance checks, one test per criterion, each within its time budget."""

import csv
import itertools
import time

import numpy as np

from wcsched.analytics import fcfs_cross_check, lindley_closed_form, lindley_waits, stability_stats
from wcsched.disciplines import DisciplineSpec
from wcsched.engine import audit_trace, check_determinism, job_count_curve, simulate
from wcsched.generators import (
    StochasticSpec,
    adversarial_ratio_bound,
    exponential,
    gen_adversarial,
    gen_stochastic,
    reference_workload,
    uniform,
)
from wcsched.harness import convergence_table, run_experiment, reference_experiment, write_outputs
from wcsched.model import Fleet, Mode, derive_metrics
from wcsched.oracles import integer_corpus, mm1_corpus, verify_2B, verify_jobcount_inequality

DISCIPLINES = ("fcfs", "spt", "srpt", "lrpt", "random")


def exact_lrpt_flow(m, B, n):
    # The m large jobs run first and finish at B (flow B each). The queue of
    # unit jobs then drains m per time unit while m more arrive per unit, so
    # unit group a (arrived at a) runs in [B + a, B + a + 1]: flow B + 1 each.
    return m * B + m * n * (B + 1)


def exact_srpt_flow(m, B, n):
    # Unit group a runs in [a, a + 1] (flow 1 each); the large jobs wait until
    # the last group is done at n and finish at n + B.
    return m * n * 1 + m * (n + B)


def test_c1_adversarial_closed_forms(criterion):
    detail = criterion(1, "adversarial closed forms")
    start = time.perf_counter()
    worst = 0.0
    for m, B, n in itertools.product((1, 2, 4), (2, 8, 64), (1, 10, 100, 1000)):
        inst = gen_adversarial(m, B, n)
        f_l = derive_metrics(simulate(inst, Fleet.identical(m), "lrpt"), inst).total_flow
        f_s = derive_metrics(simulate(inst, Fleet.identical(m), "srpt"), inst).total_flow
        want_l, want_s = exact_lrpt_flow(m, B, n), exact_srpt_flow(m, B, n)
        for got, want in ((f_l, want_l), (f_s, want_s)):
            err = abs(got - want) / want
            worst = max(worst, err)
            assert err <= 1e-6, (m, B, n, got, want)
    m, B, n = 2, 64, 10_000
    inst = gen_adversarial(m, B, n)
    f_l = derive_metrics(simulate(inst, Fleet.identical(m), "lrpt"), inst).total_flow
    f_s = derive_metrics(simulate(inst, Fleet.identical(m), "srpt"), inst).total_flow
    ratio, bound = f_l / f_s, adversarial_ratio_bound(B, n)
    elapsed = time.perf_counter() - start
    detail(f"36 grid points, worst rel. error {worst:.1e}; ratio {ratio:.4f} vs 0.99x{bound:.4f}; {elapsed:.1f}s")
    assert ratio > 0.99 * bound
    assert elapsed < 30


def test_c2_two_b_sandwich(criterion):
    detail = criterion(2, "2B sandwich")
    start = time.perf_counter()
    violations, worst, runs = 0, 0.0, 0
    for inst, m in integer_corpus(1000, seed=42, n_max=8, m_max=3, p_max=4):
        rep = verify_2B(inst, Fleet.identical(m, Mode.NONPREEMPTIVE), DISCIPLINES)
        violations += sum(not r.ok for r in rep.rows)
        worst = max(worst, max(r.ratio / rep.bound for r in rep.rows))
        runs += len(rep.rows)
    for inst, _ in integer_corpus(1000, seed=43, n_max=50, m_max=1, p_max=4, gap_max=4):
        rep = verify_2B(inst, Fleet.identical(1, Mode.PREEMPTIVE), DISCIPLINES)
        assert rep.method == "srpt-m1"
        violations += sum(not r.ok for r in rep.rows)
        worst = max(worst, max(r.ratio / rep.bound for r in rep.rows))
        runs += len(rep.rows)
    elapsed = time.perf_counter() - start
    detail(f"{runs} discipline runs, {violations} violations, max ratio/2B {worst:.3f}; {elapsed:.1f}s")
    assert violations == 0
    assert elapsed < 300


def test_c3_job_count_inequality(criterion):
    detail = criterion(3, "job-count inequality")
    start = time.perf_counter()
    violations, checked = 0, 0
    for inst in mm1_corpus(100, n=50, seed=42):
        for d in ("fcfs", "lrpt"):
            rep = verify_jobcount_inequality(inst, d)
            violations += len(rep.violations)
            checked += rep.checked
    elapsed = time.perf_counter() - start
    detail(f"100 M/M/1 instances (n=50), {checked} event times, {violations} violations; {elapsed:.1f}s "
           "(integer instances with small B do violate it; see notes)")
    assert violations == 0
    assert elapsed < 60


def test_c4_lindley_equivalence(criterion):
    detail = criterion(4, "Lindley equivalence")
    start = time.perf_counter()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        p = rng.exponential(1.0, 500)
        dr = rng.exponential(1.0 / rng.uniform(0.5, 1.5), 500)
        rec = lindley_waits(p, dr, check=False)
        closed = lindley_closed_form(p, dr)
        worst = max(worst, float(np.max(np.abs(rec - closed) / np.maximum(1.0, np.abs(rec)))))
    mismatches = sum(not fcfs_cross_check(inst).ok for inst in mm1_corpus(100, n=200, seed=7))
    elapsed = time.perf_counter() - start
    detail(f"1000 sequences, worst scaled gap {worst:.1e}; {mismatches}/100 engine mismatches; {elapsed:.1f}s")
    assert worst <= 1e-9
    assert mismatches == 0
    assert elapsed < 30


def test_c5_convergence_study(criterion, tmp_path):
    detail = criterion(5, "convergence study")
    start = time.perf_counter()
    max_ratio, notes, bad_ecdf = 0.0, [], 0
    for lam in (0.45, 0.49):
        result = run_experiment(reference_experiment(lam, n_grid=(500, 1000, 2000, 4000), replications=30))
        max_ratio = max(max_ratio, max(s.ratio for s in result.samples))
        rows = convergence_table(result)
        for d in sorted({r.discipline for r in rows}):
            mean = {r.n: r.mean for r in rows if r.discipline == d}
            notes.append((lam, d, mean[500], mean[4000]))
        paths = write_outputs(result, tmp_path / f"lam{lam}")
        with paths["ecdf.csv"].open() as fh:
            by_cell = {}
            for row in csv.DictReader(fh):
                by_cell.setdefault((row["discipline"], row["n"]), []).append((float(row["value"]), float(row["cum_prob"])))
        for pts in by_cell.values():
            xs, ps = zip(*pts)
            ok = all(np.diff(xs) > 0) and all(np.diff(ps) >= 0) and 0 < ps[0] and ps[-1] == 1.0
            bad_ecdf += not ok
    elapsed = time.perf_counter() - start
    not_converging = [(lam, d) for lam, d, a, b in notes if not b < a]
    detail(f"max ratio {max_ratio:.3f} (<= 7); mean(n=4000) < mean(n=500) for {len(notes) - len(not_converging)}"
           f"/{len(notes)} discipline-regimes; {bad_ecdf} invalid ECDFs; {elapsed:.0f}s")
    assert max_ratio <= 7
    assert not not_converging, not_converging
    assert bad_ecdf == 0
    assert elapsed < 600


def test_c6_stability_statistic(criterion):
    detail = criterion(6, "stability statistic")
    start = time.perf_counter()
    got = {}
    for lam, want in ((0.45, 0.9), (0.49, 0.98)):
        mu_p, mu_r = reference_workload(4000, lam).declared_means()
        got[lam] = stability_stats(mu_p, mu_r, m=20).rho_n
        assert abs(got[lam] - want) <= 1e-9
    elapsed = time.perf_counter() - start
    detail(f"rho_n {got[0.45]:.12f} and {got[0.49]:.12f}; {elapsed * 1000:.1f}ms")
    assert elapsed < 1


def _engine_corpus():
    for inst, m in integer_corpus(300, seed=11, n_max=8, m_max=3, p_max=4):
        yield inst, Fleet.identical(m).speeds
    for inst in mm1_corpus(30, n=50, seed=12):
        yield inst, (1.0,)
    for k, inst in enumerate(mm1_corpus(20, n=40, arrival_rate=2.5, seed=13)):
        yield inst, ((2.0, 1.0, 1.0), (1.0, 1.0, 1.0, 1.0), (3.0, 0.5))[k % 3]
    spec = StochasticSpec(60, uniform(0.0, 2.0), exponential(0.5), seed=14)
    yield gen_stochastic(spec), (1.0, 1.0)
    for m, B, n in ((1, 4, 3), (2, 4, 3), (3, 8, 10)):
        yield gen_adversarial(m, B, n), Fleet.identical(m).speeds


def test_c7_engine_invariants(criterion):
    detail = criterion(7, "engine invariants")
    start = time.perf_counter()
    failures, runs = [], 0
    for k, (inst, speeds) in enumerate(_engine_corpus()):
        for name in DISCIPLINES:
            spec = DisciplineSpec.parse(name)
            modes = (Mode.PREEMPTIVE, Mode.NONPREEMPTIVE) if name == "random" else (spec.default_mode,)
            for mode in modes:
                fleet = Fleet.with_speeds(speeds, mode)
                trace = simulate(inst, fleet, spec, seed=k)
                runs += 1
                audit = audit_trace(trace, inst)
                if not audit.ok:
                    failures.append((k, name, mode.value, audit.violations[:2]))
                flow = derive_metrics(trace, inst).total_flow
                area = job_count_curve(trace).integral()
                if abs(area - flow) > 1e-9 * max(1.0, flow):
                    failures.append((k, name, mode.value, f"flow integral {area} vs {flow}"))
                if k % 10 == 0 and not check_determinism(inst, fleet, spec, seed=k):
                    failures.append((k, name, mode.value, "nondeterministic"))
    elapsed = time.perf_counter() - start
    detail(f"{runs} runs, {len(failures)} failures; {elapsed:.1f}s")
    assert not failures, failures[:5]
    assert elapsed < 120
