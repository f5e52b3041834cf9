#!/usr/bin/env python3
"""Run the default desk-scale experiment grid and write all artifacts.

Produces, under --outdir (default results/):
  records_j{j}_k{k}_{model}.csv    trial records per configuration
  tails_j{j}_k{k}_{model}.jsonl    tail estimates over the K grid
  pnt_deviations.csv               moment deviation table for j = 1..4
plus a console summary of the variance-bound reports.
"""

import argparse
import math
from pathlib import Path

import zetalab as z
from zetalab.experiments import (
    DEFAULT_SUITE,
    ExperimentConfig,
    check_variance_bound,
    run_trials,
    sweep,
    write_deviation_rows,
    write_records,
    write_summary,
)

K_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results")
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=20260810)
    parser.add_argument("--alpha", type=float, default=0.5)
    parser.add_argument("--threads", type=int, default=2)
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for j, k, model in DEFAULT_SUITE:
        config = ExperimentConfig(band=z.DyadicBand(-1, k), j=j, model=model,
                                  alpha=args.alpha, K_list=K_GRID,
                                  n_trials=args.trials, base_seed=args.seed)
        records = run_trials(config, threads=args.threads)
        tag = f"j{j}_k{k}_{model.value}"
        with open(outdir / f"records_{tag}.csv", "w", newline="") as handle:
            write_records(records, config, handle, fmt="csv",
                          header_comment=f"zetalab {z.__version__} | desk suite | {tag}")
        result = sweep(j=j, k=k, model=model, alpha_list=[args.alpha],
                       K_list=list(K_GRID), n_trials=args.trials,
                       base_seed=args.seed, threads=args.threads)
        with open(outdir / f"tails_{tag}.jsonl", "w") as handle:
            write_summary(result.rows, handle, fmt="jsonl",
                          header_comment=f"zetalab {z.__version__} | desk suite | {tag}")
        if args.trials >= 100:
            report = check_variance_bound(records, config)
            status = "PASS" if report.passed else "FAIL"
            print(f"{tag}: bound lhs={report.lhs:.5g} rhs={report.rhs:.5g} "
                  f"(x{report.lhs / report.rhs:.2f}) interior={report.n} {status}")

    scans = [z.pnt_deviation_scan(j, z.default_checkpoints(4)) for j in (1, 2, 3, 4)]
    with open(outdir / "pnt_deviations.csv", "w", newline="") as handle:
        write_deviation_rows(scans, handle, fmt="csv",
                             header_comment=f"zetalab {z.__version__} | desk suite | pnt")
    for scan in scans:
        print(f"pnt j={scan.j}: max deviation {scan.max_deviation:.6f}")


if __name__ == "__main__":
    main()
