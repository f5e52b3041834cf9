#!/usr/bin/env python3
"""Quick look at how the discrepancy tail moves with alpha and with k.

Prints tail estimates for a dyadic alpha ladder at fixed K and for the
k = 3 vs k = 4 comparison at fixed (alpha, K); common random numbers
make the alpha ladder comparable trial by trial.
"""

import argparse

import zetalab as z
from zetalab.experiments import sweep


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--j", type=int, default=0)
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=20260810)
    parser.add_argument("--threads", type=int, default=2)
    args = parser.parse_args()

    print("alpha ladder at k = 4, K = 1:")
    result = sweep(j=args.j, k=4, model=z.PhaseModel.CIRCLE,
                   alpha_list=[0.0625, 0.125, 0.25, 0.5, 1.0], K_list=[1.0],
                   n_trials=args.trials, base_seed=args.seed, threads=args.threads)
    for row in result.rows:
        print(f"  alpha={row.alpha:<8} p_hat={row.p_hat:.4f} "
              f"ci95=[{row.ci_low:.4f}, {row.ci_high:.4f}]")
    for flag in result.alpha_flags:
        print(f"  FLAG (non-monotone beyond CI overlap): {flag}")

    print("scale comparison at alpha = 0.5, K = 1:")
    for k in (3, 4):
        result = sweep(j=args.j, k=k, model=z.PhaseModel.CIRCLE, alpha_list=[0.5],
                       K_list=[1.0], n_trials=args.trials, base_seed=args.seed,
                       threads=args.threads)
        row = result.rows[0]
        print(f"  k={k}: p_hat={row.p_hat:.4f} ci95=[{row.ci_low:.4f}, {row.ci_high:.4f}]")


if __name__ == "__main__":
    main()
