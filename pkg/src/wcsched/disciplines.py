"""Scheduling disciplines.

A discipline is a priority order over released, unfinished jobs, plus an
optional request to be re-evaluated at a future time. Deterministic orders all
fall back to ascending job id on ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .model import Job, Mode


class Discipline(str, Enum):
    FCFS = "fcfs"
    SPT = "spt"
    SRPT = "srpt"
    LRPT = "lrpt"
    RANDOM = "random"


_MODES = {
    Discipline.FCFS: {Mode.NONPREEMPTIVE},
    Discipline.SPT: {Mode.NONPREEMPTIVE},
    Discipline.SRPT: {Mode.PREEMPTIVE},
    Discipline.LRPT: {Mode.PREEMPTIVE},
    Discipline.RANDOM: {Mode.PREEMPTIVE, Mode.NONPREEMPTIVE},
}

DEFAULT_QUANTUM = 1e-3


@dataclass(frozen=True)
class DisciplineSpec:
    name: Discipline
    quantum: float = DEFAULT_QUANTUM
    stream: int | None = None

    def __post_init__(self):
        if not isinstance(self.name, Discipline):
            object.__setattr__(self, "name", Discipline(str(self.name).lower()))
        if not self.quantum > 0:
            raise ValueError("quantum must be positive")

    @classmethod
    def parse(cls, value: "DisciplineSpec | Discipline | str", **params) -> "DisciplineSpec":
        if isinstance(value, DisciplineSpec):
            return value
        if isinstance(value, Discipline):
            return cls(value, **params)
        try:
            return cls(Discipline(str(value).strip().lower()), **params)
        except ValueError:
            raise ValueError(f"unknown discipline {value!r}") from None

    def supports(self, mode: Mode | str) -> bool:
        return Mode.parse(mode) in _MODES[self.name]

    @property
    def default_mode(self) -> Mode:
        if self.name is Discipline.RANDOM:
            return Mode.NONPREEMPTIVE
        return next(iter(_MODES[self.name]))

    @property
    def label(self) -> str:
        return self.name.value


def priority_key(spec: DisciplineSpec, job: Job, remaining: float) -> tuple:
    """Sort key for the deterministic disciplines; smaller runs first."""
    name = spec.name
    if name is Discipline.FCFS:
        return (job.arrival, job.id)
    if name is Discipline.SPT:
        return (job.workload, job.id)
    if name is Discipline.SRPT:
        return (remaining, job.id)
    if name is Discipline.LRPT:
        return (-remaining, job.id)
    raise ValueError(f"{name.value} has no deterministic key")


def priority_order(
    spec: DisciplineSpec,
    released: Iterable[tuple[Job, float]],
    clock: float = 0.0,
    rng: np.random.Generator | None = None,
) -> list[Job]:
    """Order released, unfinished ``(job, remaining)`` pairs by priority."""
    released = list(released)
    if spec.name is Discipline.RANDOM:
        if rng is None:
            raise ValueError("RANDOM needs an rng")
        perm = rng.permutation(len(released))
        return [released[i][0] for i in perm]
    return [job for job, rem in sorted(released, key=lambda jr: priority_key(spec, jr[0], jr[1]))]


def wakeup_request(
    spec: DisciplineSpec,
    running: Sequence[tuple[float, float]],
    waiting: Iterable[float],
    clock: float,
) -> float | None:
    """Next time the discipline wants a reschedule, or None.

    ``running`` holds (remaining work, machine speed) pairs and ``waiting`` the
    remaining work of queued jobs. Only LRPT asks: a running job whose
    remaining work will fall to the largest waiting remainder must be
    re-examined then. The answer is floored at ``clock + quantum``. A running
    job already level with the waiting maximum won its tie and asks nothing.
    """
    if spec.name is not Discipline.LRPT:
        return None
    waiting = list(waiting)
    if not waiting or not running:
        return None
    top = max(waiting)
    tol = 1e-9 * max(1.0, abs(top))
    best = math.inf
    for rem, speed in running:
        if rem > top + tol:
            best = min(best, clock + (rem - top) / speed)
    if best == math.inf:
        return None
    return max(best, clock + spec.quantum)
