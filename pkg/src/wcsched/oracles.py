"""Exact offline optima on small instances and the checks built on them.

The non-preemptive optimum searches over all job orders and lets the
schedule sit idle on purpose: a job may be placed ahead of one that is
already waiting. Only semi-active schedules need to be searched, since
delaying a job past max(release, machine free) never lowers total flow.
Within a group of equal-speed machines a job can always be placed on the one
that frees up first: exchanging the tails of two machines that are both free
at that moment keeps every start time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .analytics import completion_lower_bound, size_ratio
from .disciplines import Discipline, DisciplineSpec
from .engine import job_count_curve, simulate
from .errors import TooLarge
from .model import Event, Fleet, Instance, Mode, ScheduleTrace, derive_metrics

DP_LIMIT_M1 = 12
EXHAUSTIVE_LIMIT = 8


@dataclass(frozen=True)
class OracleResult:
    optimal_flow: float
    optimal_completion: float
    witness: ScheduleTrace
    method: str  # subset-DP | exhaustive | srpt-m1


def _speed_classes(speeds: Sequence[float]) -> list[tuple[float, list[int]]]:
    out: dict[float, list[int]] = {}
    for i, s in enumerate(speeds):
        out.setdefault(s, []).append(i)
    return sorted(out.items(), key=lambda kv: -kv[0])


def _witness(instance: Instance, speeds: Sequence[float], plan: Iterable[tuple[int, int]]) -> ScheduleTrace:
    """Replay (job index, speed class) choices into a trace."""
    classes = _speed_classes(speeds)
    avail = [0.0] * len(speeds)
    rows = []
    for j, c in plan:
        job = instance.jobs[j]
        s, members = classes[c]
        i = min(members, key=lambda k: (avail[k], k))
        start = max(job.arrival, avail[i])
        end = start + job.workload / s
        avail[i] = end
        rows.append(Event("dispatch", start, job.id, i))
        rows.append(Event("complete", end, job.id, i))
    rows += [Event("arrival", job.arrival, job.id, None) for job in instance.jobs]
    rank = {"complete": 0, "preempt": 1, "arrival": 2, "dispatch": 3}
    rows.sort(key=lambda e: (e.time, rank[e.kind], e.job))
    return ScheduleTrace(rows, tuple(speeds), Mode.NONPREEMPTIVE, {"discipline": "oracle"})


def _subset_dp(instance: Instance, speeds: Sequence[float]) -> tuple[float, list[tuple[int, int]]]:
    """Frontier DP over (scheduled subset, per-class sorted machine availability)."""
    jobs = instance.jobs
    n = len(jobs)
    classes = _speed_classes(speeds)
    start_avail = tuple(tuple(0.0 for _ in members) for _, members in classes)
    # frontier[mask] -> list of (avail, cost, parent_mask, parent_idx, j, c)
    frontier: dict[int, list[tuple]] = {0: [(start_avail, 0.0, -1, -1, -1, -1)]}
    by_size: list[list[int]] = [[] for _ in range(n + 1)]
    by_size[0].append(0)
    for size in range(n):
        for mask in by_size[size]:
            for idx, (avail, cost, *_rest) in enumerate(frontier[mask]):
                for j in range(n):
                    bit = 1 << j
                    if mask & bit:
                        continue
                    r, p = jobs[j].arrival, jobs[j].workload
                    for c, (s, _) in enumerate(classes):
                        a = avail[c][0]
                        end = max(r, a) + p / s
                        row = tuple(sorted(avail[c][1:] + (end,)))
                        new_avail = avail[:c] + (row,) + avail[c + 1:]
                        entry = (new_avail, cost + end - r, mask, idx, j, c)
                        nm = mask | bit
                        if nm not in frontier:
                            frontier[nm] = []
                            by_size[size + 1].append(nm)
                        _insert_pareto(frontier[nm], entry)
    full = (1 << n) - 1
    best_idx = min(range(len(frontier[full])), key=lambda k: frontier[full][k][1])
    best = frontier[full][best_idx][1]
    plan = []
    mask, idx = full, best_idx
    while mask:
        _, _, pm, pi, j, c = frontier[mask][idx]
        plan.append((j, c))
        mask, idx = pm, pi
    plan.reverse()
    return best, plan


def _dominates(a: tuple, b: tuple) -> bool:
    if a[1] > b[1]:
        return False
    for ra, rb in zip(a[0], b[0]):
        for x, y in zip(ra, rb):
            if x > y:
                return False
    return True


def _insert_pareto(front: list[tuple], entry: tuple) -> None:
    for other in front:
        if _dominates(other, entry):
            return
    front[:] = [o for o in front if not _dominates(entry, o)]
    front.append(entry)


def _exhaustive(instance: Instance, speeds: Sequence[float]) -> tuple[float, list[tuple[int, int]]]:
    """Depth-first enumeration of job orders (and speed groups), pruned by incumbent."""
    jobs = instance.jobs
    n = len(jobs)
    classes = _speed_classes(speeds)
    vmax = classes[0][0]
    avail = [[0.0] * len(members) for _, members in classes]
    r = [j.arrival for j in jobs]
    p = [j.workload for j in jobs]
    best = [math.inf, []]
    plan: list[tuple[int, int]] = []
    used = [False] * n

    def remaining_bound(earliest: float) -> float:
        return math.fsum(max(r[j], earliest) - r[j] + p[j] / vmax for j in range(n) if not used[j])

    def dfs(cost: float, depth: int) -> None:
        if depth == n:
            if cost < best[0]:
                best[0] = cost
                best[1] = list(plan)
            return
        earliest = min(row[0] for row in avail)
        if cost + remaining_bound(earliest) >= best[0]:
            return
        for j in range(n):
            if used[j]:
                continue
            for c, (s, _) in enumerate(classes):
                row = avail[c]
                a = row[0]
                end = max(r[j], a) + p[j] / s
                saved = list(row)
                row.pop(0)
                row.append(end)
                row.sort()
                used[j] = True
                plan.append((j, c))
                dfs(cost + end - r[j], depth + 1)
                plan.pop()
                used[j] = False
                avail[c] = saved

    dfs(0.0, 0)
    return best[0], best[1]


def opt_nonpreemptive(instance: Instance, fleet: Fleet, method: str | None = None) -> OracleResult:
    """Exact minimum total flow over all non-preemptive schedules.

    ``method`` defaults to "subset-DP" on one machine and "exhaustive" otherwise;
    either may be forced within its size limit.
    """
    n = instance.n
    if method is None:
        method = "subset-DP" if fleet.m == 1 else "exhaustive"
    limit = DP_LIMIT_M1 if (method == "subset-DP" and fleet.m == 1) else EXHAUSTIVE_LIMIT
    if n > limit:
        raise TooLarge(f"{method} oracle handles at most {limit} jobs on {fleet.m} machine(s), got {n}", limit)
    if n == 0:
        empty = ScheduleTrace([], fleet.speeds, Mode.NONPREEMPTIVE)
        return OracleResult(0.0, 0.0, empty, method)
    if method == "subset-DP":
        value, plan = _subset_dp(instance, fleet.speeds)
    elif method == "exhaustive":
        value, plan = _exhaustive(instance, fleet.speeds)
    else:
        raise ValueError(f"unknown oracle method {method!r}")
    witness = _witness(instance, fleet.speeds, plan)
    metrics = derive_metrics(witness, instance)
    return OracleResult(metrics.total_flow, metrics.total_completion, witness, method)


def opt_preemptive_m1(instance: Instance) -> OracleResult:
    """SRPT on a single unit-speed machine, which is the preemptive optimum."""
    trace = simulate(instance, Fleet.identical(1, Mode.PREEMPTIVE), "srpt")
    metrics = derive_metrics(trace, instance)
    return OracleResult(metrics.total_flow, metrics.total_completion, trace, "srpt-m1")


# -- verification ----------------------------------------------------------

ALL_DISCIPLINES = ("fcfs", "spt", "srpt", "lrpt", "random")


def native_fleet(fleet: Fleet, discipline: DisciplineSpec) -> Fleet:
    """The fleet itself if the discipline supports its mode, else the same machines in the other mode."""
    if discipline.supports(fleet.mode):
        return fleet
    other = Mode.NONPREEMPTIVE if fleet.mode is Mode.PREEMPTIVE else Mode.PREEMPTIVE
    return Fleet(fleet.m, fleet.speeds, other)


@dataclass(frozen=True)
class RatioRow:
    discipline: str
    mode: str
    flow: float
    ratio: float
    ok: bool


@dataclass
class TwoBReport:
    B: float
    optimal_flow: float
    method: str
    rows: list[RatioRow] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return 2 * self.B

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.rows)

    @property
    def max_ratio(self) -> float:
        return max((r.ratio for r in self.rows), default=0.0)


def optimal_flow(instance: Instance, fleet: Fleet) -> tuple[float, str]:
    """Best available exact (or, failing that, pessimistic) optimal flow and its label."""
    if fleet.m == 1 and fleet.mode is Mode.PREEMPTIVE and fleet.speeds == (1.0,):
        return opt_preemptive_m1(instance).optimal_flow, "srpt-m1"
    if fleet.mode is Mode.NONPREEMPTIVE:
        res = opt_nonpreemptive(instance, fleet)
        return res.optimal_flow, res.method
    flow_lb = completion_lower_bound(instance, fleet) - math.fsum(j.arrival for j in instance.jobs)
    return flow_lb, "pessimistic-lb"


def verify_2B(
    instance: Instance,
    fleet: Fleet,
    disciplines: Iterable[str | DisciplineSpec] = ALL_DISCIPLINES,
    seed: int | None = None,
    tol: float = 1e-9,
) -> TwoBReport:
    """Check flow(pi) <= 2B * optimal flow for each discipline.

    Each discipline runs in the fleet's mode when it supports it, otherwise
    on the same machines in the other mode. For a preemptive fleet with
    m >= 2 no exact optimum is available and the denominator is a lower
    bound, labeled "pessimistic-lb".
    """
    B = size_ratio(instance)
    opt, method = optimal_flow(instance, fleet)
    report = TwoBReport(B, opt, method)
    for d in disciplines:
        spec = DisciplineSpec.parse(d)
        f = native_fleet(fleet, spec)
        flow = derive_metrics(simulate(instance, f, spec, seed), instance).total_flow
        ratio = flow / opt if opt > 0 else 1.0
        ok = flow <= 2 * B * opt * (1 + tol)
        report.rows.append(RatioRow(spec.label, f.mode.value, flow, ratio, ok))
    return report


@dataclass
class JobCountReport:
    B: float
    m: int
    checked: int = 0
    violations: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_jobcount_inequality(
    instance: Instance,
    discipline: str | DisciplineSpec,
    m: int = 1,
    seed: int | None = None,
) -> JobCountReport:
    """Check n_pi(t) <= B (n_opt(t) + m - 1) at every event time of both runs.

    The reference is SRPT on one preemptive machine, which minimises the
    number of jobs present at every instant.
    """
    if m != 1:
        raise ValueError("the exact job-count reference needs a single machine")
    spec = DisciplineSpec.parse(discipline)
    fleet = native_fleet(Fleet.identical(1, Mode.PREEMPTIVE), spec)
    n_pi = job_count_curve(simulate(instance, fleet, spec, seed))
    n_opt = job_count_curve(opt_preemptive_m1(instance).witness)
    B = size_ratio(instance)
    report = JobCountReport(B, m)
    for t in _settled_times(np.union1d(n_pi.times, n_opt.times)):
        a, b = n_pi(t), n_opt(t)
        report.checked += 1
        if a > B * (b + m - 1) + 1e-9:
            report.violations.append((t, a, b))
    return report


def _settled_times(times: np.ndarray, rel: float = 1e-9) -> list[float]:
    """Sorted event times with near-equal runs collapsed to their last member.

    Two runs that empty the system together can disagree on the instant in
    the last few bits; evaluating after the whole run of near-equal times
    compares the states both traces agree on.
    """
    out: list[float] = []
    for t in times.tolist():
        if out and t - out[-1] <= rel * max(1.0, abs(t)):
            out[-1] = t
        else:
            out.append(t)
    return out


# -- seeded corpora --------------------------------------------------------


def integer_corpus(
    count: int,
    seed: int = 42,
    n_max: int = 8,
    m_max: int = 3,
    p_max: int = 4,
    gap_max: int = 2,
    n_min: int = 1,
) -> list[tuple[Instance, int]]:
    """Small integer instances paired with a machine count.

    Workloads are uniform on {1..p_max}; interarrival gaps are uniform on
    {0..gap_max}; n and m are uniform on their ranges.
    """
    out = []
    for k in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        n = int(rng.integers(n_min, n_max + 1))
        m = int(rng.integers(1, m_max + 1))
        p = rng.integers(1, p_max + 1, n)
        r = np.cumsum(rng.integers(0, gap_max + 1, n))
        inst = Instance.from_arrays(r, p, meta={"corpus": "integer", "seed": seed, "index": k})
        out.append((inst, m))
    return out


def mm1_corpus(count: int, n: int = 50, arrival_rate: float = 0.9, workload_rate: float = 1.0, seed: int = 42) -> list[Instance]:
    from .generators import StochasticSpec, exponential, gen_stochastic

    return [
        gen_stochastic(StochasticSpec(n, exponential(arrival_rate), exponential(workload_rate),
                                      seed=int(np.random.SeedSequence([seed, k]).generate_state(1)[0])))
        for k in range(count)
    ]
