"""Measured (rounds, total samples / p) points for the three partitioners.

    python scripts/tradeoff.py --p 64,256,1024,4096 --trials 20 --out tradeoff.csv

Prints a per-(algorithm, p) summary table; with --out also writes every row.
"""
import argparse
import sys

import numpy as np

from histopart.experiments import ExperimentSpec, rows_to_csv, sweep


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--p", default="64,256,1024,4096")
    parser.add_argument("--keys-per-proc", type=int, default=256)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workload", default="uniform")
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    p_list = tuple(int(x) for x in args.p.split(","))

    all_rows = []
    print(f"{'algorithm':<12} {'p':>6} {'rounds(med)':>12} {'samples/p(med)':>15} {'success':>8}")
    for algo in ("histopart", "hss_fixed", "sample_sort"):
        spec = ExperimentSpec(algorithm=algo, p_list=p_list, keys_per_proc=args.keys_per_proc,
                              trials=args.trials, base_seed=args.seed, workload=args.workload)
        rows = sweep(spec)
        all_rows.extend(rows)
        for p in p_list:
            sel = [r for r in rows if r["p"] == p]
            rounds = np.median([r["rounds"] for r in sel])
            volume = np.median([r["total_sample_volume"] / p for r in sel])
            success = np.mean([r["success"] for r in sel])
            print(f"{algo:<12} {p:>6} {rounds:>12g} {volume:>15.2f} {success:>8.0%}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rows_to_csv(all_rows))


if __name__ == "__main__":
    sys.exit(main())
