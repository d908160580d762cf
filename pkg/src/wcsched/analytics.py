"""Queueing analytics: Lindley waits, lower bounds, stream reductions, stability, ECDFs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInstance, EmptySample, LengthMismatch
from .model import Fleet, Instance, Job, Mode, ScheduleTrace, isclose


class LindleyMismatch(AssertionError):
    pass


def lindley_closed_form(workloads: Sequence[float], interarrivals: Sequence[float]) -> np.ndarray:
    """FCFS waits as W_k = T_{k-1} - min_{0<=j<=k-1} T_j.

    T_0 = 0 and T_j = sum_{i<=j} (p_i - dr_{i+1}).
    """
    p = np.asarray(workloads, dtype=float)
    dr = np.asarray(interarrivals, dtype=float)
    if p.shape != dr.shape:
        raise LengthMismatch(f"{p.size} workloads vs {dr.size} interarrivals")
    if p.size == 0:
        return np.zeros(0)
    v = p[:-1] - dr[1:]
    T = np.concatenate(([0.0], np.cumsum(v)))
    return T - np.minimum.accumulate(T)


def lindley_waits(
    workloads: Sequence[float], interarrivals: Sequence[float], check: bool = True
) -> np.ndarray:
    """FCFS single-server waiting times by the Lindley recursion.

    ``interarrivals[k]`` is the gap between job k-1 and job k; the first entry
    only offsets the first arrival and does not enter the recursion. With
    ``check`` the recursion is compared against the closed form.
    """
    p = [float(x) for x in workloads]
    dr = [float(x) for x in interarrivals]
    if len(p) != len(dr):
        raise LengthMismatch(f"{len(p)} workloads vs {len(dr)} interarrivals")
    w = [0.0] * len(p)
    for k in range(1, len(p)):
        w[k] = max(w[k - 1] + p[k - 1] - dr[k], 0.0)
    out = np.array(w)
    if check and len(p):
        closed = lindley_closed_form(p, dr)
        scale = np.maximum(1.0, np.abs(out))
        bad = np.nonzero(np.abs(out - closed) > 1e-9 * scale)[0]
        if bad.size:
            k = int(bad[0])
            raise LindleyMismatch(f"wait {k}: recursion {out[k]!r} vs closed form {closed[k]!r}")
    return out


@dataclass(frozen=True)
class CrossCheck:
    ok: bool
    index: int | None = None
    engine_wait: float | None = None
    lindley_wait: float | None = None


def fcfs_cross_check(instance: Instance, trace: ScheduleTrace | None = None, tol: float = 1e-9) -> CrossCheck:
    """Compare engine FCFS waits on one machine with the Lindley recursion.

    ``trace`` defaults to a fresh single-machine FCFS run. The first
    mismatching position (0-based, arrival order) is reported.
    """
    if trace is None:
        from .engine import simulate

        trace = simulate(instance, Fleet.identical(1, Mode.NONPREEMPTIVE), "fcfs")
    starts = trace.first_dispatch()
    expected = lindley_waits(instance.workloads, instance.interarrivals)
    for k, job in enumerate(instance.jobs):
        got = starts[job.id] - job.arrival
        if not isclose(got, expected[k], rel=tol, abs_=tol):
            return CrossCheck(False, k, got, float(expected[k]))
    return CrossCheck(True)


# -- lower bounds on the optimal total completion time ---------------------


def arrival_time_lower_bound(instance: Instance) -> float:
    return math.fsum(j.arrival for j in instance.jobs)


def workload_lower_bound(instance: Instance, fleet: Fleet) -> float:
    """Sum over k of (k smallest workloads) / total speed.

    The k-th job to finish cannot do so before the machines have delivered
    the k smallest workloads.
    """
    p = np.sort(instance.workloads)
    return math.fsum(np.cumsum(p).tolist()) / fleet.total_speed


def per_job_lower_bound(instance: Instance, fleet: Fleet) -> float:
    vmax = fleet.max_speed
    return math.fsum(j.arrival + j.workload / vmax for j in instance.jobs)


@dataclass(frozen=True)
class Bounds:
    arrival: float
    workload: float
    per_job: float

    @property
    def best(self) -> float:
        return max(self.arrival, self.workload, self.per_job)

    @property
    def source(self) -> str:
        return max((self.arrival, "arrival"), (self.workload, "workload"), (self.per_job, "per-job"))[1]

    def as_dict(self) -> dict[str, float | str]:
        return {
            "arrival_lb": self.arrival,
            "workload_lb": self.workload,
            "per_job_lb": self.per_job,
            "completion_lb": self.best,
            "completion_lb_source": self.source,
        }


def lower_bounds(instance: Instance, fleet: Fleet) -> Bounds:
    return Bounds(
        arrival_time_lower_bound(instance),
        workload_lower_bound(instance, fleet),
        per_job_lower_bound(instance, fleet),
    )


def completion_lower_bound(instance: Instance, fleet: Fleet) -> float:
    """Largest of the certified lower bounds on optimal total completion time."""
    return lower_bounds(instance, fleet).best


def size_ratio(instance: Instance) -> float:
    if not instance.n:
        raise EmptyInstance("size ratio of an empty instance")
    p = instance.workloads
    return float(p.max() / p.min())


# -- reductions to single-server streams -----------------------------------


def cyclic_partition(instance: Instance, m: int) -> list[Instance]:
    """Route the j-th arriving job to stream ((j-1) mod m) + 1.

    Stream i receives jobs i, i+m, i+2m, ... with their original arrival
    times, so each stream's interarrival gaps are window sums of m original
    gaps (ending at the job itself; gaps before the first job count as 0).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    streams = []
    for i in range(m):
        jobs = instance.jobs[i::m]
        streams.append(Instance(tuple(jobs), {**instance.meta, "stream": i + 1, "of": m}))
    return streams


def cyclic_window_sums(interarrivals: Sequence[float], m: int) -> list[np.ndarray]:
    """Per stream i, the gaps sum_{s<m} dr_{(j-1)m+i-s} with dr_k = 0 for k <= 0."""
    dr = np.concatenate((np.zeros(m), np.asarray(interarrivals, dtype=float)))
    n = len(dr) - m
    out = []
    for i in range(1, m + 1):
        idx = range(i, n + 1, m)
        out.append(np.array([math.fsum(dr[m + k - s - 1] for s in range(m)) for k in idx]))
    return out


def speed_routing_split(instance: Instance, speeds: Sequence[float], seed: int = 42) -> list[Instance]:
    """Route each job independently to machine i with probability s_i / sum(s)."""
    s = np.asarray(speeds, dtype=float)
    if s.size == 0 or np.any(s <= 0):
        raise ValueError("speeds must be positive")
    probs = s / s.sum()
    rng = np.random.default_rng(seed)
    route = rng.choice(s.size, size=instance.n, p=probs) if instance.n else np.zeros(0, int)
    buckets: list[list[Job]] = [[] for _ in range(s.size)]
    for job, r in zip(instance.jobs, route):
        buckets[int(r)].append(job)
    return [
        Instance(tuple(b), {**instance.meta, "machine": i, "speed": float(s[i]), "route_seed": seed})
        for i, b in enumerate(buckets)
    ]


# -- stability statistics --------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    rho_n: float
    s_single: float
    s_multi: float
    n: int
    estimator: str = "declared"

    def as_dict(self) -> dict[str, float | int | str]:
        return {"rho_n": self.rho_n, "s_single": self.s_single, "s_multi": self.s_multi,
                "n": self.n, "estimator": self.estimator}


def stability_stats(
    mean_workload: Sequence[float] | float,
    mean_interarrival: Sequence[float] | float,
    m: int,
    n: int | None = None,
    estimator: str = "declared",
) -> StabilityReport:
    """Load statistics from per-index means.

    rho_n = max_l mu_p(l) / sum_{k=l}^{l+m-1} mu_r(k), with the interarrival
    means extended past n by repeating the last one. s_single averages
    (mu_p(k) - window sum)^+ and s_multi averages (mu_p(k) - m mu_r(k))^+.
    Scalars are broadcast to length ``n``.
    """
    if n is None:
        n = max(np.size(mean_workload), np.size(mean_interarrival))
    mu_p = _schedule(mean_workload, n)
    mu_r = _schedule(mean_interarrival, n)
    if mu_p.size != n or mu_r.size != n:
        raise LengthMismatch("mean schedules must have length n")
    if np.any(mu_p <= 0) or np.any(mu_r <= 0):
        raise ValueError("means must be positive")
    extended = np.concatenate((mu_r, np.full(m - 1, mu_r[-1])))
    csum = np.concatenate(([0.0], np.cumsum(extended)))
    windows = csum[m:m + n] - csum[:n]
    rho = float(np.max(mu_p / windows))
    s_single = float(np.sum(np.maximum(mu_p - windows, 0.0)) / n)
    s_multi = float(np.sum(np.maximum(mu_p - m * mu_r, 0.0)) / n)
    return StabilityReport(rho, s_single, s_multi, n, estimator)


def _schedule(x, n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    return np.full(n, float(arr)) if arr.ndim == 0 else arr


def sample_stability(instance: Instance, m: int) -> StabilityReport:
    """Plug-in version using the realized sample means as constant schedules."""
    if not instance.n:
        raise EmptyInstance("no jobs")
    return stability_stats(
        float(instance.workloads.mean()), float(instance.interarrivals.mean()), m, instance.n, "sample"
    )


# -- empirical distributions and diagnostics ------------------------------


@dataclass(frozen=True)
class EmpiricalCDF:
    values: np.ndarray
    probs: np.ndarray
    n: int

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    def __call__(self, x: float) -> float:
        k = int(np.searchsorted(self.values, x, side="right"))
        return 0.0 if k == 0 else float(self.probs[k - 1])

    def is_valid(self) -> bool:
        return (
            self.values.size > 0
            and bool(np.all(np.diff(self.values) > 0))
            and bool(np.all(np.diff(self.probs) >= 0))
            and self.probs[-1] == 1.0
            and bool(np.all(self.probs > 0))
        )


def empirical_cdf(samples: Sequence[float]) -> EmpiricalCDF:
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise EmptySample("empirical CDF of no samples")
    values, counts = np.unique(x, return_counts=True)
    cum = np.cumsum(counts)
    probs = cum / x.size
    probs[-1] = 1.0
    return EmpiricalCDF(values, probs, int(x.size))


def scaled_max_diagnostic(samples: Sequence[float], r: float) -> tuple[np.ndarray, np.ndarray]:
    """Trajectory of max_{i<=n} X_i / n^{1/r} for n = 1..len(samples)."""
    if not r > 0:
        raise ValueError("r must be positive")
    x = np.asarray(samples, dtype=float)
    ns = np.arange(1, x.size + 1)
    return ns, np.maximum.accumulate(x) / ns ** (1.0 / r)
