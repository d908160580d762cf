"""Seeded replication experiments: ratios to lower bounds, ECDFs, convergence tables."""

from __future__ import annotations

import csv
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .analytics import EmpiricalCDF, completion_lower_bound, empirical_cdf
from .disciplines import DisciplineSpec
from .engine import simulate
from .errors import IncompatibleMode
from .generators import StochasticSpec, gen_adversarial, gen_stochastic, reference_workload
from .model import Fleet, Instance, Mode, derive_metrics
from .oracles import opt_nonpreemptive, opt_preemptive_m1

DENOMINATORS = ("arrival-lb", "best-lb", "oracle")
REFERENCE_DISCIPLINES = ("fcfs", "srpt", "lrpt", "spt", "random")
REFERENCE_GRID = (125, 250, 500, 1000, 2000, 4000)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a workload model, disciplines, an n grid and replications.

    Exactly one of ``workload`` (a stochastic spec whose n and seed are
    replaced per cell) and ``adversarial_B`` is set. ``mode=None`` runs every
    discipline in its own default mode; a fixed mode must suit all of them.
    ``quantum`` is the LRPT minimum run before a same-value preemption.
    """

    m: int = 20
    disciplines: tuple[str, ...] = REFERENCE_DISCIPLINES
    n_grid: tuple[int, ...] = REFERENCE_GRID
    replications: int = 30
    seed: int = 42
    denominator: str = "arrival-lb"
    workload: StochasticSpec | None = None
    adversarial_B: float | None = None
    speeds: tuple[float, ...] | None = None
    mode: Mode | None = None
    quantum: float = 1e-3

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n grid must be non-empty and strictly ascending")
        if self.denominator not in DENOMINATORS:
            raise ValueError(f"denominator must be one of {DENOMINATORS}")
        if (self.workload is None) == (self.adversarial_B is None):
            raise ValueError("set exactly one of workload and adversarial_B")
        if self.speeds is not None and len(self.speeds) != self.m:
            raise ValueError("speeds must list one speed per machine")
        for d in self.disciplines:
            spec = self.discipline(d)
            if self.mode is not None and not spec.supports(self.mode):
                raise IncompatibleMode(f"{spec.label} does not support {Mode.parse(self.mode).value} mode")

    def discipline(self, name: str) -> DisciplineSpec:
        return DisciplineSpec.parse(name, quantum=self.quantum)

    def fleet_for(self, spec: DisciplineSpec) -> Fleet:
        mode = spec.default_mode if self.mode is None else Mode.parse(self.mode)
        if self.speeds is None:
            return Fleet.identical(self.m, mode)
        return Fleet.with_speeds(self.speeds, mode)

    def instance_seed(self, n: int, rep: int) -> int:
        return int(np.random.SeedSequence([self.seed, n, rep]).generate_state(1)[0])

    def discipline_seed(self, name: str, n: int, rep: int) -> int:
        tag = zlib.crc32(name.encode())
        return int(np.random.SeedSequence([self.seed, tag, n, rep]).generate_state(1)[0])

    def instance(self, n: int, rep: int) -> Instance:
        if self.adversarial_B is not None:
            return gen_adversarial(self.m, self.adversarial_B, n)
        return gen_stochastic(self.workload.with_n(n).with_seed(self.instance_seed(n, rep)))

    def as_dict(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "disciplines": list(self.disciplines),
            "n_grid": list(self.n_grid),
            "replications": self.replications,
            "seed": self.seed,
            "denominator": self.denominator,
            "workload": None if self.workload is None else self.workload.as_dict(),
            "adversarial_B": self.adversarial_B,
            "speeds": None if self.speeds is None else list(self.speeds),
            "mode": None if self.mode is None else Mode.parse(self.mode).value,
            "quantum": self.quantum,
        }


def reference_experiment(
    arrival_rate: float = 0.45,
    n_grid: Sequence[int] = REFERENCE_GRID,
    replications: int = 30,
    seed: int = 42,
    quantum: float = 1.0,
    disciplines: Sequence[str] = REFERENCE_DISCIPLINES,
) -> ExperimentSpec:
    """Twenty machines, exponential workloads of mean 40, Poisson arrivals.

    LRPT's quantum defaults to 1.0 here: tied LRPT jobs rotate once per
    quantum, so the engine default would cost about 40,000 swaps per job.
    """
    return ExperimentSpec(
        m=20,
        disciplines=tuple(disciplines),
        n_grid=tuple(n_grid),
        replications=replications,
        seed=seed,
        workload=reference_workload(n_grid[0], arrival_rate),
        quantum=quantum,
    )


@dataclass(frozen=True)
class Sample:
    discipline: str
    n: int
    replication: int
    ratio: float
    flow_ratio: float
    total_completion: float
    total_flow: float
    denominator: float


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    samples: list[Sample] = field(default_factory=list)

    def ratios(self, discipline: str, n: int, kind: str = "completion") -> np.ndarray:
        attr = "ratio" if kind == "completion" else "flow_ratio"
        return np.array([getattr(s, attr) for s in self.samples if s.discipline == discipline and s.n == n])

    def flows(self, discipline: str, n: int) -> np.ndarray:
        return np.array([s.total_flow for s in self.samples if s.discipline == discipline and s.n == n])

    def cells(self) -> list[tuple[str, int]]:
        return sorted({(s.discipline, s.n) for s in self.samples})

    def ecdf(self, discipline: str, n: int) -> EmpiricalCDF:
        return empirical_cdf(self.ratios(discipline, n))

    def summary(self) -> list[dict[str, Any]]:
        out = []
        for d, n in self.cells():
            r = self.ratios(d, n)
            out.append({"discipline": d, "n": n, "mean": float(r.mean()), "max": float(r.max()),
                        "p95": float(np.quantile(r, 0.95)), "count": int(r.size)})
        return out


def _denominators(spec: ExperimentSpec, inst: Instance, fleet: Fleet) -> tuple[float, float]:
    """(completion denominator, flow denominator) for one instance."""
    total_r = math.fsum(j.arrival for j in inst.jobs)
    if spec.denominator == "oracle":
        if fleet.mode is Mode.PREEMPTIVE and fleet.m == 1:
            res = opt_preemptive_m1(inst)
        else:
            res = opt_nonpreemptive(inst, Fleet(fleet.m, fleet.speeds, Mode.NONPREEMPTIVE))
        return res.optimal_completion, res.optimal_flow
    lb = completion_lower_bound(inst, fleet)
    completion = total_r if spec.denominator == "arrival-lb" else lb
    return completion, lb - total_r


def _run_cell(spec: ExperimentSpec, n: int, rep: int) -> list[Sample]:
    inst = spec.instance(n, rep)
    out = []
    for name in spec.disciplines:
        d = spec.discipline(name)
        fleet = spec.fleet_for(d)
        metrics = derive_metrics(simulate(inst, fleet, d, spec.discipline_seed(d.label, n, rep)), inst)
        c_den, f_den = _denominators(spec, inst, fleet)
        out.append(Sample(
            d.label, n, rep,
            metrics.total_completion / c_den if c_den > 0 else math.inf,
            metrics.total_flow / f_den if f_den > 0 else math.inf,
            metrics.total_completion, metrics.total_flow, c_den,
        ))
    return out


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Run every (n, replication) cell; ``jobs > 1`` spreads cells over processes.

    Results are sorted by (discipline, n, replication), so they do not depend
    on execution order.
    """
    cells = [(n, rep) for n in spec.n_grid for rep in range(spec.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, [spec] * len(cells), *zip(*cells)))
    else:
        chunks = [_run_cell(spec, n, rep) for n, rep in cells]
    samples = sorted((s for chunk in chunks for s in chunk), key=lambda s: (s.discipline, s.n, s.replication))
    return ExperimentResult(spec, samples)


# -- summaries -------------------------------------------------------------


@dataclass(frozen=True)
class TableRow:
    discipline: str
    n: int
    mean: float
    p95: float
    max: float
    monotone: bool  # mean ratios of this discipline never increase along the grid


def convergence_table(result: ExperimentResult, kind: str = "completion") -> list[TableRow]:
    grid = sorted({s.n for s in result.samples})
    if len(grid) < 2:
        raise ValueError("a convergence table needs at least two grid points")
    rows = []
    for d in sorted({s.discipline for s in result.samples}):
        stats = []
        for n in grid:
            r = result.ratios(d, n, kind)
            stats.append((n, float(r.mean()), float(np.quantile(r, 0.95)), float(r.max())))
        means = [m for _, m, _, _ in stats]
        monotone = all(b <= a for a, b in zip(means, means[1:]))
        rows += [TableRow(d, n, mean, p95, mx, monotone) for n, mean, p95, mx in stats]
    return rows


def format_table(rows: Iterable[TableRow]) -> str:
    lines = [f"{'discipline':<10} {'n':>6} {'mean':>10} {'p95':>10} {'max':>10}  trend"]
    for r in rows:
        trend = "decreasing" if r.monotone else "NON-MONOTONE"
        lines.append(f"{r.discipline:<10} {r.n:>6} {r.mean:>10.6f} {r.p95:>10.6f} {r.max:>10.6f}  {trend}")
    return "\n".join(lines) + "\n"


def pairwise_flow_ratio(result: ExperimentResult, numerator: str, denominator: str) -> dict[int, float]:
    """Per n, the mean over replications of flow(numerator) / flow(denominator)."""
    out = {}
    for n in sorted({s.n for s in result.samples}):
        a, b = result.flows(numerator, n), result.flows(denominator, n)
        out[n] = float(np.mean(a / b))
    return out


def ecdf_dominance(result: ExperimentResult, discipline: str, n_small: int, n_large: int) -> float:
    """Fraction of pooled ratio values x with F_large(x) >= F_small(x).

    A value near 1 means the larger-n ratios are stochastically smaller.
    """
    small, large = result.ecdf(discipline, n_small), result.ecdf(discipline, n_large)
    points = np.union1d(small.values, large.values)
    return float(np.mean([large(x) >= small(x) for x in points]))


def write_outputs(result: ExperimentResult, outdir: str | Path) -> dict[str, Path]:
    """Write ratios.csv, ecdf.csv, table.txt and spec.json into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {name: outdir / name for name in ("ratios.csv", "ecdf.csv", "table.txt", "spec.json")}
    with paths["ratios.csv"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("discipline", "n", "replication", "ratio", "flow_ratio"))
        for s in result.samples:
            w.writerow((s.discipline, s.n, s.replication, repr(s.ratio), repr(s.flow_ratio)))
    with paths["ecdf.csv"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("discipline", "n", "value", "cum_prob"))
        for d, n in result.cells():
            for x, p in result.ecdf(d, n).points:
                w.writerow((d, n, repr(x), repr(p)))
    grid = sorted({s.n for s in result.samples})
    if len(grid) >= 2:
        text = "completion-time ratio\n" + format_table(convergence_table(result))
        text += "\nflow-time ratio\n" + format_table(convergence_table(result, "flow"))
    else:
        text = "\n".join(f"{r['discipline']} n={r['n']} mean={r['mean']:.6f} max={r['max']:.6f}"
                         for r in result.summary()) + "\n"
    paths["table.txt"].write_text(text, encoding="utf-8")
    paths["spec.json"].write_text(json.dumps(result.spec.as_dict(), indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    return paths
