"""The twenty-machine replication study.

Twenty machines, exponential workloads with mean 40, Poisson arrivals at
rate 0.45 (load 0.9) or 0.49 (load 0.98). Each discipline's total completion
time is divided by the total arrival time, a lower bound on the optimum.
Ratios shrink towards 1 as n grows.

Pass --full for the 30-replication grid up to n=4000 (a few minutes); the
default is a quick version. Outputs go to ./convergence_out/.
"""

import sys

from wcsched.harness import convergence_table, ecdf_dominance, format_table, run_experiment, reference_experiment, write_outputs

full = "--full" in sys.argv
grid = (500, 1000, 2000, 4000) if full else (250, 500, 1000)
reps = 30 if full else 5

for lam in (0.45, 0.49):
    spec = reference_experiment(lam, n_grid=grid, replications=reps)
    result = run_experiment(spec)
    print(f"arrival rate {lam}: {reps} replications, grid {grid}")
    print(format_table(convergence_table(result)))
    for d in spec.disciplines:
        share = ecdf_dominance(result, d, grid[0], grid[-1])
        print(f"  {d:<7} ECDF at n={grid[-1]} lies left of n={grid[0]} at {share:.0%} of points")
    paths = write_outputs(result, f"convergence_out/lambda_{lam}")
    print(f"  wrote {', '.join(str(p) for p in paths.values())}\n")
