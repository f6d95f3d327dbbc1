#!/usr/bin/env python3
"""Empirical variance-ratio convergence along a grid of group counts.

Prints a CSV of the mean empirical unit/group randomization-variance ratio
next to its closed-form limit, for y-fixed or eps-fixed simulations.
"""

from __future__ import annotations

import argparse

from ssdiag import StylizedParams, ratio_convergence_experiment


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--beta", type=float, default=0.5)
    parser.add_argument("--sigma2", type=float, default=1.0)
    parser.add_argument("--rho", type=float, default=0.0)
    parser.add_argument("--group-size", type=int, default=2)
    parser.add_argument("--mode", choices=["y-fixed", "eps-fixed"], default="y-fixed")
    parser.add_argument("--grid", default="10,50,200,1000,2000")
    parser.add_argument("--reps", type=int, default=200)
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    params = StylizedParams(
        beta=args.beta, sigma2=args.sigma2, rho=args.rho, group_size=args.group_size
    )
    grid = [int(v) for v in args.grid.split(",")]
    rows = ratio_convergence_experiment(
        params, grid, args.reps, args.seed, mode=args.mode, workers=args.workers
    )
    print("n_groups,mean_ratio,se_ratio,limit")
    for row in rows:
        print(f"{row.n_groups},{row.mean_ratio!r},{row.se_ratio!r},{row.limit!r}")


if __name__ == "__main__":
    main()
