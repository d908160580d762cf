"""Deterministic event-driven simulator for parallel-machine disciplines.

Same-time events are handled as: completions, then arrivals, then a single
scheduling decision. Preemptive disciplines are re-evaluated at arrivals,
completions and discipline wake-ups; non-preemptive ones only dispatch onto
idle machines. Selected jobs go to machines in decreasing speed order.

A running job's remaining work is not stored; it is derived from the
machine's predicted finish time, which is the single source of truth.
"""

from __future__ import annotations

import heapq
import logging
import math
from bisect import insort
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .disciplines import Discipline, DisciplineSpec, priority_key, wakeup_request
from .errors import IncompatibleMode, IncompleteTrace, NonTermination
from .model import Event, Fleet, Instance, Mode, ScheduleTrace, isclose, require_valid

log = logging.getLogger(__name__)

DEFAULT_SEED = 42
EVENT_BUDGET_PER_JOB = 10**6
_INF = math.inf


def discipline_rng(seed: int | None, spec: DisciplineSpec) -> np.random.Generator:
    seed = DEFAULT_SEED if seed is None else seed
    entropy = [int(seed)] if spec.stream is None else [int(seed), int(spec.stream)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def simulate(
    instance: Instance,
    fleet: Fleet,
    discipline: DisciplineSpec | Discipline | str,
    seed: int | None = None,
    *,
    event_budget_per_job: int = EVENT_BUDGET_PER_JOB,
) -> ScheduleTrace:
    """Run ``discipline`` over ``instance`` on ``fleet`` and return the trace."""
    spec = DisciplineSpec.parse(discipline)
    if not spec.supports(fleet.mode):
        raise IncompatibleMode(f"{spec.label} does not support {fleet.mode.value} mode")
    require_valid(instance)
    run = _Run(instance, fleet, spec, discipline_rng(seed, spec), event_budget_per_job)
    events = run.run()
    return ScheduleTrace(
        events,
        fleet.speeds,
        fleet.mode,
        {"discipline": spec.label, "seed": DEFAULT_SEED if seed is None else seed},
    )


class _Run:
    def __init__(self, instance, fleet, spec, rng, budget):
        self.spec = spec
        self.rng = rng
        self.jobs = instance.jobs
        self.n = len(self.jobs)
        self.ids = [j.id for j in self.jobs]
        self.arrival = [j.arrival for j in self.jobs]
        self.work = [j.workload for j in self.jobs]
        self.m = fleet.m
        self.speed = list(fleet.speeds)
        self.preemptive = fleet.mode is Mode.PREEMPTIVE
        self.random = spec.name is Discipline.RANDOM
        self.lrpt = spec.name is Discipline.LRPT
        self.budget = budget * max(self.n, 1)

        order = sorted(range(self.m), key=lambda i: (-self.speed[i], i))
        self.machine_order = order
        self.classes: list[list[int]] = []
        for i in order:
            if self.classes and self.speed[self.classes[-1][0]] == self.speed[i]:
                self.classes[-1].append(i)
            else:
                self.classes.append([i])
        self.single_class = len(self.classes) == 1

        self.rem = list(self.work)  # valid for jobs that are not running
        self.mach_job = [-1] * self.m
        self.job_mach = [-1] * self.n
        self.fin = [_INF] * self.m
        self.pool: list = []  # heap of (key, j) or, for RANDOM, a list of j
        self.clock = 0.0
        self.wake = _INF
        self.events: list[Event] = []

    # -- helpers ---------------------------------------------------------
    def _key(self, j: int, rem: float) -> tuple:
        return priority_key(self.spec, self.jobs[j], rem)

    def _running_rem(self, i: int) -> float:
        return (self.fin[i] - self.clock) * self.speed[i]

    def _pool_add(self, j: int) -> None:
        if self.random:
            self.pool.append(j)
        else:
            heapq.heappush(self.pool, (self._key(j, self.rem[j]), j))

    # -- main loop -------------------------------------------------------
    def run(self) -> list[Event]:
        n, m = self.n, self.m
        arrival, fin, ids, ev = self.arrival, self.fin, self.ids, self.events
        nxt = 0
        done = 0
        steps = 0
        while done < n:
            steps += 1
            if steps > self.budget:
                raise NonTermination(
                    f"{steps} event steps for {n} jobs at t={self.clock!r}; "
                    f"discipline {self.spec.label} is switching without progress"
                )
            t_arr = arrival[nxt] if nxt < n else _INF
            t_fin = min(fin)
            t = min(t_arr, t_fin, self.wake)
            if t == _INF:
                raise NonTermination("no pending event but unfinished jobs remain")
            self.clock = t
            if t_fin == t:
                for i in range(m):
                    if fin[i] == t:
                        j = self.mach_job[i]
                        ev.append(Event("complete", t, ids[j], i))
                        self.mach_job[i] = -1
                        self.job_mach[j] = -1
                        self.rem[j] = 0.0
                        fin[i] = _INF
                        done += 1
            while nxt < n and arrival[nxt] <= t:
                ev.append(Event("arrival", arrival[nxt], ids[nxt], None))
                self._pool_add(nxt)
                nxt += 1
            self.wake = _INF
            if self.preemptive:
                self._decide_preemptive()
            else:
                self._decide_nonpreemptive()
        return ev

    # -- decisions -------------------------------------------------------
    def _decide_nonpreemptive(self) -> None:
        free = [i for i in self.machine_order if self.mach_job[i] == -1]
        if not free or not self.pool:
            return
        k = min(len(free), len(self.pool))
        if self.random:
            pool = self.pool
            picked = self.rng.permutation(len(pool))[:k].tolist()
            chosen = [pool[p] for p in picked]
            for p in sorted(picked, reverse=True):
                pool[p] = pool[-1]
                pool.pop()
        else:
            chosen = [heapq.heappop(self.pool)[1] for _ in range(k)]
        for i, j in zip(free, chosen):
            self._dispatch(j, i)

    def _decide_preemptive(self) -> None:
        clock, m = self.clock, self.m
        running = {}
        for i in range(m):
            j = self.mach_job[i]
            if j != -1:
                running[j] = self._running_rem(i)
        if not running and not self.pool:
            return

        if self.random:
            everyone = sorted(list(running) + self.pool)
            perm = self.rng.permutation(len(everyone))
            selected = [everyone[p] for p in perm[:m]]
            chosen = set(selected)
            self.pool = [j for j in everyone if j not in chosen]
            for j, r in running.items():
                self.rem[j] = r
            self._assign(selected)
            return

        pool = self.pool
        if self.lrpt and pool:
            top = -pool[0][0][0]
            tol = 1e-9 * max(1.0, abs(top))
            for j, r in running.items():
                if r != top and abs(r - top) <= tol:
                    running[j] = top
                    i = self.job_mach[j]
                    self.fin[i] = clock + top / self.speed[i]
        sel = sorted((self._key(j, r), j) for j, r in running.items())
        while len(sel) < m and pool:
            sel.append(heapq.heappop(pool))
        while pool and pool[0] < sel[-1]:
            worst = sel.pop()
            insort(sel, heapq.heappushpop(pool, worst))
        selected = [j for _, j in sel]
        for j, r in running.items():
            self.rem[j] = r
        # losers were pushed back by heappushpop, keyed on their current remaining work
        self._assign(selected)
        if self.lrpt:
            self._lrpt_wakeup()

    def _lrpt_wakeup(self) -> None:
        if not self.pool:
            return
        top = -self.pool[0][0][0]
        run = [(self._running_rem(i), self.speed[i]) for i in range(self.m) if self.mach_job[i] != -1]
        nxt = wakeup_request(self.spec, run, [top], self.clock)
        self.wake = _INF if nxt is None else nxt

    def _assign(self, selected: Sequence[int]) -> None:
        """Place ``selected`` (priority order) onto machines; emit preempt/dispatch.

        Jobs that lose their machine must already be back in the pool with
        their remaining work recorded.
        """
        m = self.m
        job_mach = self.job_mach
        new = [-1] * m
        pos = 0
        for cls in self.classes:
            chunk = selected[pos:pos + len(cls)]
            pos += len(cls)
            members = cls if self.single_class else set(cls)
            for j in chunk:
                if job_mach[j] != -1 and (self.single_class or job_mach[j] in members):
                    new[job_mach[j]] = j
            free = (i for i in cls if new[i] == -1)
            for j in chunk:
                if job_mach[j] == -1 or new[job_mach[j]] != j:
                    new[next(free)] = j

        clock, ids, ev, old = self.clock, self.ids, self.events, self.mach_job
        for i in range(m):
            j = old[i]
            if j != -1 and new[i] != j:
                ev.append(Event("preempt", clock, ids[j], i))
                self.fin[i] = _INF
                job_mach[j] = -1
                old[i] = -1
        for i in range(m):
            j = new[i]
            if j != -1 and old[i] != j:
                self._dispatch(j, i)

    def _dispatch(self, j: int, i: int) -> None:
        self.events.append(Event("dispatch", self.clock, self.ids[j], i))
        self.mach_job[i] = j
        self.job_mach[j] = i
        self.fin[i] = self.clock + self.rem[j] / self.speed[i]


# -- trace analysis ----------------------------------------------------------


@dataclass
class StepFunction:
    """Right-continuous step function: ``values[k]`` holds on ``[times[k], times[k+1])``.

    Zero before ``times[0]``; the last value holds forever.
    """

    times: np.ndarray
    values: np.ndarray

    def __call__(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return 0.0 if k < 0 else float(self.values[k])

    def integral(self) -> float:
        if len(self.times) < 2:
            return 0.0
        widths = np.diff(self.times)
        return math.fsum((widths * self.values[:-1]).tolist())


def job_count_curve(trace: ScheduleTrace) -> StepFunction:
    """Number of jobs alive (arrived, not completed) as a function of time."""
    arrived = trace.arrivals()
    done = trace.completions()
    if set(arrived) != set(done):
        missing = sorted(set(arrived) - set(done))
        raise IncompleteTrace(f"job {missing[0]} never completes")
    deltas: dict[float, int] = {}
    for t in arrived.values():
        deltas[t] = deltas.get(t, 0) + 1
    for t in done.values():
        deltas[t] = deltas.get(t, 0) - 1
    times = np.array(sorted(deltas), dtype=float)
    values = np.cumsum([deltas[t] for t in times]).astype(float)
    return StepFunction(times, values)


@dataclass
class AuditReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)


def audit_trace(trace: ScheduleTrace, instance: Instance, tol: float = 1e-9) -> AuditReport:
    """Check structural invariants of a finished trace.

    Covers: one arrival and one completion per job, no early completion,
    integrated service equals workload, one job per machine and one machine
    per job, and work conservation (no positive-length interval with an idle
    machine while a dispatchable job waits).
    """
    rep = AuditReport()
    jobs = {j.id: j for j in instance.jobs}
    speeds = trace.speeds
    vmax = max(speeds) if speeds else 1.0
    arrivals: dict[int, int] = {}
    completes: dict[int, int] = {}
    for e in trace.events:
        if e.kind == "arrival":
            arrivals[e.job] = arrivals.get(e.job, 0) + 1
        elif e.kind == "complete":
            completes[e.job] = completes.get(e.job, 0) + 1
    for jid, job in jobs.items():
        if arrivals.get(jid) != 1:
            rep.add(f"job {jid}: {arrivals.get(jid, 0)} arrival events")
        if completes.get(jid) != 1:
            rep.add(f"job {jid}: {completes.get(jid, 0)} completion events")
    if not rep.ok:
        return rep

    prev_t = -math.inf
    for e in trace.events:
        if e.time < prev_t:
            rep.add(f"events out of order at t={e.time}")
            break
        prev_t = e.time

    done = trace.completions()
    for jid, job in jobs.items():
        earliest = job.arrival + job.workload / vmax
        if done[jid] < earliest and not isclose(done[jid], earliest, tol):
            rep.add(f"job {jid}: completes at {done[jid]} before {earliest}")

    intervals = trace.service_intervals()
    for jid, job in jobs.items():
        served = math.fsum((b - a) * speeds[i] for a, b, i in intervals.get(jid, []))
        if not isclose(served, job.workload, tol):
            rep.add(f"job {jid}: served {served!r} of workload {job.workload!r}")
        for a, _, _ in intervals.get(jid, []):
            if a < job.arrival and not isclose(a, job.arrival, tol):
                rep.add(f"job {jid}: dispatched at {a} before arrival {job.arrival}")

    # replay machine occupancy
    preemptive = trace.mode is Mode.PREEMPTIVE
    on_machine: dict[int, int] = {}
    where: dict[int, int] = {}
    released: set[int] = set()
    started: set[int] = set()
    finished: set[int] = set()
    m = len(speeds)
    events = trace.events
    k = 0
    while k < len(events):
        t = events[k].time
        while k < len(events) and events[k].time == t:
            e = events[k]
            k += 1
            if e.kind == "arrival":
                released.add(e.job)
            elif e.kind == "dispatch":
                if e.machine in on_machine:
                    rep.add(f"t={t}: machine {e.machine} double-booked")
                if e.job in where:
                    rep.add(f"t={t}: job {e.job} on two machines")
                if not preemptive and e.job in started:
                    rep.add(f"t={t}: job {e.job} restarted in non-preemptive mode")
                on_machine[e.machine] = e.job
                where[e.job] = e.machine
                started.add(e.job)
            elif e.kind in ("preempt", "complete"):
                if on_machine.get(e.machine) != e.job:
                    rep.add(f"t={t}: {e.kind} of job {e.job} not running on machine {e.machine}")
                on_machine.pop(e.machine, None)
                where.pop(e.job, None)
                if e.kind == "complete":
                    finished.add(e.job)
                elif not preemptive:
                    rep.add(f"t={t}: preemption in non-preemptive mode")
        t_next = events[k].time if k < len(events) else t
        if t_next > t and len(on_machine) < m:
            if preemptive:
                waiting = len(released) - len(finished) - len(where)
            else:
                waiting = len(released - started)
            if waiting > 0:
                rep.add(f"idle machine on [{t}, {t_next}) with {waiting} dispatchable job(s)")
    return rep


def check_determinism(instance: Instance, fleet: Fleet, discipline, seed: int | None = None) -> bool:
    a = simulate(instance, fleet, discipline, seed)
    b = simulate(instance, fleet, discipline, seed)
    return a.events == b.events
