"""Exact optima on small instances, and the 2B guarantee for every discipline.

The oracle searches all non-preemptive schedules, including ones that idle on
purpose. Any work-conserving discipline's total flow stays within 2B of it,
where B is the largest-to-smallest workload ratio.
"""

from wcsched import Fleet, Instance, Mode, opt_nonpreemptive, verify_2B
from wcsched.oracles import integer_corpus

one = Fleet.identical(1, Mode.NONPREEMPTIVE)

# Waiting can pay off: a long job at t=0 and a short one at t=1.
inst = Instance.from_arrays([0, 1], [10, 1])
res = opt_nonpreemptive(inst, one)
print(f"optimal flow {res.optimal_flow} via {res.method}; start times {res.witness.first_dispatch()}")
print("FCFS would start the long job at once: flow 10 + 10 = 20.\n")

# One instance, all five disciplines against the optimum.
rep = verify_2B(Instance.from_arrays([0, 0, 1, 2, 2], [4, 1, 1, 3, 1]), Fleet.identical(2, Mode.NONPREEMPTIVE))
print(f"B={rep.B}, optimum={rep.optimal_flow} ({rep.method}), bound 2B={rep.bound}")
for row in rep.rows:
    print(f"  {row.discipline:<7} ({row.mode:<13}) flow {row.flow:>5g} ratio {row.ratio:.3f}")

# A seeded sweep: 500 small integer instances, no violations expected.
worst = 0.0
for inst, m in integer_corpus(500, seed=1):
    rep = verify_2B(inst, Fleet.identical(m, Mode.NONPREEMPTIVE))
    assert rep.ok
    worst = max(worst, rep.max_ratio / rep.bound)
print(f"\n500 random instances: largest ratio is {worst:.1%} of the 2B bound")
