"""Single-server FCFS waits, load statistics and stream reductions.

FCFS on one machine is the Lindley recursion W_{k+1} = (W_k + p_k - dr_{k+1})^+,
which also has the closed form W_k = T_{k-1} - min_j T_j. The engine,
the recursion and the closed form agree. Multi-machine systems are
analysed by splitting arrivals into single-server streams.
"""

import numpy as np

from wcsched import (
    Fleet,
    Mode,
    cyclic_partition,
    fcfs_cross_check,
    gen_stochastic,
    lindley_closed_form,
    lindley_waits,
    reference_workload,
    simulate,
    speed_routing_split,
    stability_stats,
)
from wcsched.analytics import cyclic_window_sums, scaled_max_diagnostic
from wcsched.generators import StochasticSpec, exponential

inst = gen_stochastic(StochasticSpec(8, exponential(0.9), exponential(1.0), seed=3))
waits = lindley_waits(inst.workloads, inst.interarrivals)
trace = simulate(inst, Fleet.identical(1, Mode.NONPREEMPTIVE), "fcfs")
engine = [trace.first_dispatch()[j.id] - j.arrival for j in inst.jobs]
print("recursion:", np.round(waits, 4))
print("closed   :", np.round(lindley_closed_form(inst.workloads, inst.interarrivals), 4))
print("engine   :", np.round(engine, 4))
print("cross-check ok:", fcfs_cross_check(inst).ok)

# The load statistic for the reference regimes: 20 machines, mean workload 40.
for lam in (0.45, 0.49):
    mu_p, mu_r = reference_workload(1000, lam).declared_means()
    print(f"lambda={lam}: rho_n = {stability_stats(mu_p, mu_r, m=20).rho_n:.4f}")

# Cyclic allocation: job j goes to stream ((j-1) mod m) + 1; each stream's
# gaps are sums of m consecutive original gaps.
big = gen_stochastic(reference_workload(12, seed=2))
streams = cyclic_partition(big, 3)
print("\nstreams:", [s.ids.tolist() for s in streams])
print("stream 1 gaps  :", np.round(np.diff(streams[0].arrivals), 3))
print("window sums    :", np.round(cyclic_window_sums(big.interarrivals, 3)[0][1:], 3))

# Random routing by speed share.
parts = speed_routing_split(gen_stochastic(reference_workload(4000, seed=4)), [3, 1], seed=4)
print("speed split [3,1]:", [p.n for p in parts])

# max_i X_i / sqrt(n) vanishes for light tails, not for infinite variance.
rng = np.random.default_rng(0)
for name, x in (("exponential", rng.exponential(1, 100_000)), ("pareto 1.5", 1 + rng.pareto(1.5, 100_000))):
    _, v = scaled_max_diagnostic(x, 2)
    print(f"{name:<12} scaled max at n=1e2, 1e3, 1e4, 1e5: {np.round(v[[99, 999, 9999, 99999]], 4)}")
