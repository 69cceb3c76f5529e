"""Single-round sample sort success rate as a function of sample size.

The total sample is S = K * p; success needs a sample inside every one of
the p - 1 splitter windows, which takes K on the order of ln p.
"""
import argparse
import math

from histopart.keyspace import gen_uniform
from histopart.partitioner import run_sample_sort


def success_rate(p, keys_per_proc, size, seeds):
    wins = 0
    for seed in seeds:
        data = gen_uniform(p * keys_per_proc, p, seed)
        wins += run_sample_sort(data, size, 1.0, seed).success
    return wins / len(seeds)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--p", type=int, default=1024)
    parser.add_argument("--keys-per-proc", type=int, default=256)
    parser.add_argument("--trials", type=int, default=50)
    args = parser.parse_args()
    p = args.p
    seeds = range(args.trials)
    print(f"p={p}, ln p={math.log(p):.2f}")
    print(f"{'K = S/p':>8} {'success':>8}")
    for K in (1, 2, 4, 6, 8, 10, 3 * math.log(p)):
        size = math.ceil(K * p)
        print(f"{K:>8.2f} {success_rate(p, args.keys_per_proc, size, seeds):>8.0%}")


if __name__ == "__main__":
    main()
