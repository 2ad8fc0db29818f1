#!/usr/bin/env python3
"""Compare FISTA and the optimized proximal method on seeded instances.

Reports (does not assert) the median final objective gap of each method over
50 random l1-regularized least-squares instances, for a few step budgets.

Usage: python scripts/fista_vs_pogm.py
"""

import numpy as np

from peplift.methods import run_fista, run_pogm
from peplift.problems import ProblemSpec, initial_point, make_problem


def main() -> None:
    seeds = range(50)
    for n in (4, 8, 16, 32):
        gaps_fista, gaps_pogm = [], []
        for seed in seeds:
            spec = ProblemSpec(kind="lasso", dim=10, rows=20, seed=7000 + seed, tau=0.1)
            problem = make_problem(spec)
            x0 = initial_point(spec)
            gaps_fista.append(run_fista(n, problem, x0).obj_values[-1] - problem.opt_value)
            gaps_pogm.append(run_pogm(n, problem, x0).obj_values[-1] - problem.opt_value)
        med_f = float(np.median(gaps_fista))
        med_p = float(np.median(gaps_pogm))
        wins = int(np.sum(np.asarray(gaps_pogm) <= np.asarray(gaps_fista)))
        print(f"n={n:>3}: median gap FISTA {med_f:.3e} | optimized prox {med_p:.3e} "
              f"| optimized ahead on {wins}/50 seeds")


if __name__ == "__main__":
    main()
