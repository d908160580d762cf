"""Instance generators: renewal streams, the LRPT-vs-SRPT adversary, workload lifting."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import UnsupportedDistribution
from .model import Instance, Job

FAMILIES = ("exponential", "uniform", "deterministic", "lognormal", "pareto", "bounded_pareto")
PARETO_EPS = 0.1


@dataclass(frozen=True)
class Distribution:
    """A positive distribution, identified by family name and parameters.

    exponential(rate); uniform(low, high); deterministic(value);
    lognormal(mu, sigma) of the underlying normal; pareto(alpha, scale) with
    support [scale, inf); bounded_pareto(alpha, low, high).
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        fam = self.family.lower().replace("-", "_")
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if fam not in FAMILIES:
            raise UnsupportedDistribution(f"unknown distribution family {self.family!r}")
        expected = {"exponential": 1, "uniform": 2, "deterministic": 1, "lognormal": 2,
                    "pareto": 2, "bounded_pareto": 3}[fam]
        if len(self.params) != expected:
            raise UnsupportedDistribution(f"{fam} takes {expected} parameter(s), got {len(self.params)}")
        p = self.params
        bad = (
            (fam == "exponential" and not p[0] > 0)
            or (fam == "uniform" and not 0 <= p[0] <= p[1])
            or (fam == "deterministic" and not p[0] >= 0)
            or (fam == "lognormal" and not p[1] >= 0)
            or (fam == "pareto" and not (p[0] > 0 and p[1] > 0))
            or (fam == "bounded_pareto" and not (p[0] > 0 and 0 < p[1] < p[2]))
        )
        if bad:
            raise UnsupportedDistribution(f"invalid parameters {p} for {fam}")

    @property
    def mean(self) -> float:
        fam, p = self.family, self.params
        if fam == "exponential":
            return 1.0 / p[0]
        if fam == "uniform":
            return 0.5 * (p[0] + p[1])
        if fam == "deterministic":
            return p[0]
        if fam == "lognormal":
            return math.exp(p[0] + 0.5 * p[1] ** 2)
        if fam == "pareto":
            a, xm = p
            return math.inf if a <= 1 else a * xm / (a - 1)
        a, lo, hi = p
        if a == 1:
            return lo * hi / (hi - lo) * math.log(hi / lo)
        return (lo**a / (1 - (lo / hi) ** a)) * (a / (a - 1)) * (lo ** (1 - a) - hi ** (1 - a))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        fam, p = self.family, self.params
        if fam == "exponential":
            return rng.exponential(1.0 / p[0], size)
        if fam == "uniform":
            return rng.uniform(p[0], p[1], size)
        if fam == "deterministic":
            return np.full(size, p[0])
        if fam == "lognormal":
            return rng.lognormal(p[0], p[1], size)
        if fam == "pareto":
            return p[1] * (1.0 + rng.pareto(p[0], size))
        a, lo, hi = p
        u = rng.random(size)
        # inverse CDF of the Pareto law truncated to [lo, hi]
        return lo * (1.0 - u * (1.0 - (lo / hi) ** a)) ** (-1.0 / a)

    def as_dict(self) -> dict[str, Any]:
        return {"family": self.family, "params": list(self.params)}


def exponential(rate: float) -> Distribution:
    return Distribution("exponential", (rate,))


def uniform(low: float, high: float) -> Distribution:
    return Distribution("uniform", (low, high))


def deterministic(value: float) -> Distribution:
    return Distribution("deterministic", (value,))


def lognormal(mu: float, sigma: float) -> Distribution:
    return Distribution("lognormal", (mu, sigma))


def pareto(alpha: float, scale: float = 1.0) -> Distribution:
    return Distribution("pareto", (alpha, scale))


def bounded_pareto(alpha: float, low: float, high: float) -> Distribution:
    return Distribution("bounded_pareto", (alpha, low, high))


@dataclass(frozen=True)
class StochasticSpec:
    """Renewal arrivals with i.i.d. workloads and weights.

    ``ramp=(a, b)`` scales the k-th interarrival by a factor moving linearly
    from ``a`` (first job) to ``b`` (last job), giving non-identical
    interarrival means.
    """

    n: int
    arrival: Distribution = field(default_factory=lambda: exponential(1.0))
    workload: Distribution = field(default_factory=lambda: exponential(1.0))
    weight: Distribution = field(default_factory=lambda: deterministic(1.0))
    seed: int = 42
    ramp: tuple[float, float] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.workload.family == "pareto" and self.workload.params[0] <= 2 + PARETO_EPS:
            raise UnsupportedDistribution(
                f"pareto workloads need alpha > {2 + PARETO_EPS} for a finite (2+eps)-th moment"
            )
        if self.workload.family == "deterministic" and not self.workload.params[0] > 0:
            raise UnsupportedDistribution("deterministic workload must be positive")
        if self.weight.family == "deterministic" and not self.weight.params[0] > 0:
            raise UnsupportedDistribution("deterministic weight must be positive")
        if self.ramp is not None and not (self.ramp[0] > 0 and self.ramp[1] > 0):
            raise ValueError("ramp factors must be positive")

    def ramp_factors(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        if self.ramp is None:
            return np.ones(n)
        return np.linspace(self.ramp[0], self.ramp[1], n)

    def declared_means(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-index (workload mean, interarrival mean) implied by the spec."""
        mu_p = np.full(self.n, self.workload.mean)
        mu_r = self.arrival.mean * self.ramp_factors()
        return mu_p, mu_r

    def with_n(self, n: int) -> "StochasticSpec":
        return StochasticSpec(n, self.arrival, self.workload, self.weight, self.seed, self.ramp)

    def with_seed(self, seed: int) -> "StochasticSpec":
        return StochasticSpec(self.n, self.arrival, self.workload, self.weight, seed, self.ramp)

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["arrival"] = self.arrival.as_dict()
        d["workload"] = self.workload.as_dict()
        d["weight"] = self.weight.as_dict()
        return d


def gen_stochastic(spec: StochasticSpec) -> Instance:
    rng = np.random.default_rng(spec.seed)
    gaps = spec.arrival.sample(rng, spec.n) * spec.ramp_factors()
    work = spec.workload.sample(rng, spec.n)
    weights = spec.weight.sample(rng, spec.n)
    arrivals = np.cumsum(gaps)
    jobs = [
        Job(k + 1, float(arrivals[k]), float(work[k]), float(weights[k]))
        for k in range(spec.n)
    ]
    return Instance(tuple(jobs), {"generator": "stochastic", **spec.as_dict()})


def reference_workload(n: int, arrival_rate: float = 0.45, workload_rate: float = 1 / 40, seed: int = 42) -> StochasticSpec:
    """Poisson arrivals at ``arrival_rate`` and exponential workloads (mean 40 by default)."""
    return StochasticSpec(n, exponential(arrival_rate), exponential(workload_rate), seed=seed)


def gen_adversarial(m: int, B: float, n: int) -> Instance:
    """m jobs of size B at t=0, then m unit jobs at each of t = 0, 1, ..., n-1.

    The large jobs take ids 1..m so they precede the simultaneous unit jobs.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    if not B >= 1:
        raise ValueError("B must be at least 1")
    jobs = [Job(i + 1, 0.0, float(B)) for i in range(m)]
    next_id = m + 1
    for t in range(n):
        for _ in range(m):
            jobs.append(Job(next_id, float(t), 1.0))
            next_id += 1
    return Instance(tuple(jobs), {"generator": "adversarial", "m": m, "B": B, "n": n})


def adversarial_ratio_bound(B: float, n: int) -> float:
    """(n+1)B / (2n+B): the LRPT-to-SRPT flow ratio lower bound on the adversary."""
    return (n + 1) * B / (2 * n + B)


def threshold_lift(instance: Instance, delta: float) -> Instance:
    """Raise every workload below ``delta`` up to ``delta``."""
    if not delta > 0:
        raise ValueError("lift threshold must be positive")
    jobs = tuple(
        Job(j.id, j.arrival, max(j.workload, delta), j.weight) for j in instance.jobs
    )
    return Instance(jobs, {**instance.meta, "lift": delta})


def spec_from_mapping(cfg: Mapping[str, Any]) -> StochasticSpec:
    """Build a spec from a flat key/value mapping (config files, CLI flags).

    Keys: n, seed, arrival_rate | arrival_dist + arrival_params,
    workload_rate | workload_dist + workload_params, weight_dist + weight_params,
    ramp_start + ramp_end.
    """

    def dist(prefix: str, default: Distribution) -> Distribution:
        if f"{prefix}_dist" in cfg:
            params = cfg.get(f"{prefix}_params", [])
            if isinstance(params, (int, float)):
                params = [params]
            return Distribution(str(cfg[f"{prefix}_dist"]), tuple(params))
        if f"{prefix}_rate" in cfg:
            return exponential(float(cfg[f"{prefix}_rate"]))
        return default

    ramp = None
    if "ramp_start" in cfg or "ramp_end" in cfg:
        ramp = (float(cfg.get("ramp_start", 1.0)), float(cfg.get("ramp_end", 1.0)))
    return StochasticSpec(
        int(cfg.get("n", 1000)),
        dist("arrival", exponential(0.45)),
        dist("workload", exponential(1 / 40)),
        dist("weight", deterministic(1.0)),
        int(cfg.get("seed", 42)),
        ramp,
    )
