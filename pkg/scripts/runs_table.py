"""Closed-form vs Monte Carlo moments of long-run counts for a grid of k."""
import argparse
import math

from histopart.core_math import RunsModel, runs_expectation, runs_monte_carlo, runs_variance


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--m1", type=int, default=900)
    parser.add_argument("--m2", type=int, default=100)
    parser.add_argument("--trials", type=int, default=20000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    print(f"{'k':>4} {'E':>10} {'MC mean':>10} {'z':>6} {'Var':>10} {'MC var':>10}")
    for k in (1, 2, 5, 10, 20, 40):
        model = RunsModel(args.m1, args.m2, k)
        mean, var = runs_expectation(model), runs_variance(model)
        mc_mean, mc_var = runs_monte_carlo(model, args.trials, args.seed + k)
        z = (mc_mean - mean) / math.sqrt(var / args.trials) if var > 0 else 0.0
        print(f"{k:>4} {mean:>10.4f} {mc_mean:>10.4f} {z:>6.2f} {var:>10.4f} {mc_var:>10.4f}")


if __name__ == "__main__":
    main()
