"""Domain types shared across the package, plus metric derivation from traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import IncompleteTrace, InvalidInstance

REL_TOL = 1e-9
ABS_TOL = 1e-12


def isclose(a: float, b: float, rel: float = REL_TOL, abs_: float = ABS_TOL) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)


@dataclass(frozen=True)
class Job:
    id: int
    arrival: float
    workload: float
    weight: float = 1.0


@dataclass(frozen=True)
class Instance:
    """An arrival-ordered job sequence with free-form provenance in ``meta``."""

    jobs: tuple[Job, ...]
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def from_jobs(cls, jobs: Iterable[Job], meta: Mapping[str, Any] | None = None) -> "Instance":
        ordered = tuple(sorted(jobs, key=lambda j: (j.arrival, j.id)))
        return cls(ordered, dict(meta or {}))

    @classmethod
    def from_arrays(
        cls,
        arrivals: Sequence[float],
        workloads: Sequence[float],
        weights: Sequence[float] | None = None,
        ids: Sequence[int] | None = None,
        meta: Mapping[str, Any] | None = None,
    ) -> "Instance":
        """Build an instance; ids default to 1..n in ascending-arrival order."""
        arrivals = [float(x) for x in arrivals]
        workloads = [float(x) for x in workloads]
        if len(arrivals) != len(workloads):
            raise InvalidInstance("arrivals and workloads differ in length")
        if weights is None:
            weights = [1.0] * len(arrivals)
        if ids is None:
            order = sorted(range(len(arrivals)), key=lambda i: (arrivals[i], i))
            jobs = [
                Job(k + 1, arrivals[i], workloads[i], float(weights[i]))
                for k, i in enumerate(order)
            ]
        else:
            jobs = [
                Job(int(i), a, p, float(w))
                for i, a, p, w in zip(ids, arrivals, workloads, weights)
            ]
        return cls.from_jobs(jobs, meta)

    def __len__(self) -> int:
        return len(self.jobs)

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def ids(self) -> np.ndarray:
        return np.array([j.id for j in self.jobs], dtype=np.int64)

    @property
    def arrivals(self) -> np.ndarray:
        return np.array([j.arrival for j in self.jobs], dtype=float)

    @property
    def workloads(self) -> np.ndarray:
        return np.array([j.workload for j in self.jobs], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([j.weight for j in self.jobs], dtype=float)

    @property
    def interarrivals(self) -> np.ndarray:
        """Gaps r_i - r_{i-1} with r_0 = 0."""
        return np.diff(self.arrivals, prepend=0.0)

    def with_meta(self, **extra: Any) -> "Instance":
        return Instance(self.jobs, {**self.meta, **extra})


class Mode(str, Enum):
    PREEMPTIVE = "preemptive"
    NONPREEMPTIVE = "nonpreemptive"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        if isinstance(value, Mode):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for mode in cls:
            if mode.value == key:
                return mode
        raise ValueError(f"unknown mode {value!r}")


@dataclass(frozen=True)
class Fleet:
    m: int
    speeds: tuple[float, ...]
    mode: Mode = Mode.PREEMPTIVE

    def __post_init__(self):
        object.__setattr__(self, "speeds", tuple(float(s) for s in self.speeds))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.m < 1:
            raise ValueError("a fleet needs at least one machine")
        if len(self.speeds) != self.m:
            raise ValueError(f"expected {self.m} speeds, got {len(self.speeds)}")
        if any(not s > 0 for s in self.speeds):
            raise ValueError("machine speeds must be positive")

    @classmethod
    def identical(cls, m: int, mode: Mode | str = Mode.PREEMPTIVE) -> "Fleet":
        return cls(m, (1.0,) * m, Mode.parse(mode))

    @classmethod
    def with_speeds(cls, speeds: Sequence[float], mode: Mode | str = Mode.PREEMPTIVE) -> "Fleet":
        return cls(len(speeds), tuple(speeds), Mode.parse(mode))

    @property
    def total_speed(self) -> float:
        return math.fsum(self.speeds)

    @property
    def max_speed(self) -> float:
        return max(self.speeds)

    @property
    def min_speed(self) -> float:
        return min(self.speeds)

    @property
    def is_identical(self) -> bool:
        return all(s == 1.0 for s in self.speeds)


class Event(NamedTuple):
    kind: str  # arrival | dispatch | preempt | complete
    time: float
    job: int
    machine: int | None = None


EVENT_KINDS = ("arrival", "dispatch", "preempt", "complete")


@dataclass
class ScheduleTrace:
    """Time-ordered event history of one run. Machines are 0-based indices."""

    events: list[Event]
    speeds: tuple[float, ...]
    mode: Mode = Mode.PREEMPTIVE
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def horizon(self) -> float:
        times = [e.time for e in self.events if e.kind == "complete"]
        return max(times) if times else 0.0

    def completions(self) -> dict[int, float]:
        return {e.job: e.time for e in self.events if e.kind == "complete"}

    def arrivals(self) -> dict[int, float]:
        return {e.job: e.time for e in self.events if e.kind == "arrival"}

    def service_intervals(self) -> dict[int, list[tuple[float, float, int]]]:
        """Per job, the (start, end, machine) intervals during which it ran."""
        open_: dict[int, tuple[float, int]] = {}
        out: dict[int, list[tuple[float, float, int]]] = {}
        for e in self.events:
            if e.kind == "dispatch":
                open_[e.job] = (e.time, e.machine)
            elif e.kind in ("preempt", "complete") and e.job in open_:
                start, mach = open_.pop(e.job)
                out.setdefault(e.job, []).append((start, e.time, mach))
        return out

    def first_dispatch(self) -> dict[int, float]:
        out: dict[int, float] = {}
        for e in self.events:
            if e.kind == "dispatch" and e.job not in out:
                out[e.job] = e.time
        return out

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)


@dataclass(frozen=True)
class JobRecord:
    id: int
    completion: float
    flow: float


@dataclass(frozen=True)
class MetricsReport:
    per_job: tuple[JobRecord, ...]
    total_completion: float
    total_flow: float
    weighted_completion: float
    weighted_flow: float
    total_arrival: float
    n: int
    size_ratio: float

    def as_dict(self) -> dict[str, float]:
        return {
            "n": self.n,
            "total_completion": self.total_completion,
            "total_flow": self.total_flow,
            "weighted_completion": self.weighted_completion,
            "weighted_flow": self.weighted_flow,
            "total_arrival": self.total_arrival,
            "size_ratio": self.size_ratio,
        }


def derive_metrics(trace: ScheduleTrace, instance: Instance) -> MetricsReport:
    done = trace.completions()
    missing = [j.id for j in instance.jobs if j.id not in done]
    if missing:
        raise IncompleteTrace(f"{len(missing)} job(s) never complete, first id {missing[0]}")
    records = tuple(JobRecord(j.id, done[j.id], done[j.id] - j.arrival) for j in instance.jobs)
    total_c = math.fsum(r.completion for r in records)
    total_f = math.fsum(r.flow for r in records)
    total_r = math.fsum(j.arrival for j in instance.jobs)
    wc = math.fsum(j.weight * r.completion for j, r in zip(instance.jobs, records))
    wf = math.fsum(j.weight * r.flow for j, r in zip(instance.jobs, records))
    if instance.n:
        p = [j.workload for j in instance.jobs]
        ratio = max(p) / min(p)
    else:
        ratio = 1.0
    return MetricsReport(records, total_c, total_f, wc, wf, total_r, instance.n, ratio)


def validate_instance(instance: Instance) -> list[str]:
    """Return every violated job/instance invariant; an empty list means valid."""
    problems = []
    seen: set[int] = set()
    prev: Job | None = None
    for job in instance.jobs:
        if job.id in seen:
            problems.append(f"job {job.id}: duplicate id")
        seen.add(job.id)
        if not job.workload > 0 or not math.isfinite(job.workload):
            problems.append(f"job {job.id}: workload must be positive")
        if not job.weight > 0 or not math.isfinite(job.weight):
            problems.append(f"job {job.id}: weight must be positive")
        if not job.arrival >= 0 or not math.isfinite(job.arrival):
            problems.append(f"job {job.id}: arrival must be non-negative")
        if prev is not None:
            if job.arrival < prev.arrival:
                problems.append(f"job {job.id}: arrivals non-decreasing (follows job {prev.id})")
            elif job.id < prev.id:
                problems.append(f"job {job.id}: ids must ascend with arrival (follows job {prev.id})")
        prev = job
    return problems


def require_valid(instance: Instance) -> None:
    problems = validate_instance(instance)
    if problems:
        raise InvalidInstance("; ".join(problems))
