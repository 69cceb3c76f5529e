"""Command line entry point: ``histopart <command> [flags]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core_math import (RunsModel, runs_enumeration_oracle, runs_expectation,
                        runs_monte_carlo, runs_variance, ENUMERATION_LIMIT)
from .experiments import ExperimentSpec, rows_to_csv, run_trial, summarize, sweep
from .keyspace import audit_adversarial, default_parts, gen_adversarial
from .partitioner import PartitionError


def _bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected true/false, got {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _experiment_flags(sub: argparse.ArgumentParser, fmt_default: str):
    sub.add_argument("--algo", default="histopart",
                     choices=["histopart", "hss_fixed", "sample_sort"])
    sub.add_argument("--p", type=_int_list, default=(64,), help="comma-separated p values")
    sub.add_argument("--keys-per-proc", type=int, default=256)
    sub.add_argument("--epsilon", type=float, default=1.0)
    sub.add_argument("--c", type=float, default=3.0)
    sub.add_argument("--sample-size", type=int, default=None)
    sub.add_argument("--budget", type=int, default=None, help="hss_fixed per-round budget")
    sub.add_argument("--trials", type=int, default=1)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--workload", default="uniform",
                     help="uniform | adversarial | skewed:sorted_blocks | skewed:zipf_gaps")
    sub.add_argument("--C", type=int, default=None, help="part count for adversarial inputs")
    sub.add_argument("--count-broadcast", type=_bool, default=True)
    sub.add_argument("--out", default=None)
    sub.add_argument("--format", choices=["csv", "json"], default=fmt_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="histopart",
                                     description="Histogram partitioning simulator")
    subs = parser.add_subparsers(dest="command", required=True)
    _experiment_flags(subs.add_parser("partition", help="run partitioners"), "json")
    _experiment_flags(subs.add_parser("sort", help="partition then exchange and sort"), "csv")
    _experiment_flags(subs.add_parser("sweep", help="p_list x trials matrix"), "csv")

    runs = subs.add_parser("runsstats", help="closed form vs enumeration vs Monte Carlo")
    runs.add_argument("--m1", type=int, required=True)
    runs.add_argument("--m2", type=int, required=True)
    runs.add_argument("--k", type=int, required=True)
    runs.add_argument("--trials", type=int, default=10000)
    runs.add_argument("--seed", type=int, default=0)
    runs.add_argument("--out", default=None)

    audit = subs.add_parser("adversarial-audit", help="structural audit of the adversarial layout")
    audit.add_argument("--N", type=int, default=None)
    audit.add_argument("--p", type=int, required=True)
    audit.add_argument("--keys-per-proc", type=int, default=256)
    audit.add_argument("--C", type=int, default=None)
    audit.add_argument("--seed", type=int, default=0)
    audit.add_argument("--out", default=None)
    return parser


def spec_from_args(args) -> ExperimentSpec:
    return ExperimentSpec(algorithm=args.algo, p_list=tuple(args.p),
                          keys_per_proc=args.keys_per_proc, epsilon=args.epsilon, c=args.c,
                          sample_size=args.sample_size, budget=args.budget, trials=args.trials,
                          base_seed=args.seed, workload=args.workload, C=args.C,
                          count_broadcast=args.count_broadcast)


def cmd_partition(spec: ExperimentSpec, fmt: str = "json") -> str:
    rows, reports = [], []
    for p in spec.p_list:
        for seed in spec.seeds():
            row, result, _ = run_trial(spec, p, seed)
            rows.append(row)
            reports.append(result.report())
    if fmt == "csv":
        return rows_to_csv(rows)
    return json.dumps({"rows": rows, "reports": reports}, indent=2, sort_keys=True)


def cmd_sort(spec: ExperimentSpec, fmt: str = "csv") -> str:
    rows = sweep(spec, sort=True)
    if fmt == "csv":
        return rows_to_csv(rows)
    return json.dumps({"rows": rows}, indent=2, sort_keys=True)


def cmd_sweep(spec: ExperimentSpec, fmt: str = "csv") -> str:
    rows = sweep(spec)
    if fmt == "csv":
        return rows_to_csv(rows)
    summary = {str(p): v for p, v in summarize(rows).items()}
    return json.dumps({"rows": rows, "summary": summary}, indent=2, sort_keys=True)


def cmd_runsstats(m1: int, m2: int, k: int, trials: int, seed: int) -> dict:
    model = RunsModel(m1, m2, k)
    mean = runs_expectation(model, exact=True)
    var = runs_variance(model, exact=True)
    report = {"m1": m1, "m2": m2, "k": k,
              "closed_form": {"expectation": str(mean), "variance": str(var),
                              "expectation_float": float(mean), "variance_float": float(var)}}
    if model.m <= ENUMERATION_LIMIT:
        o_mean, o_var = runs_enumeration_oracle(model)
        report["oracle"] = {"expectation": str(o_mean), "variance": str(o_var),
                            "matches_closed_form": o_mean == mean and o_var == var}
    mc_mean, mc_var = runs_monte_carlo(model, trials, seed)
    stderr = (float(var) / trials) ** 0.5
    within = abs(mc_mean - float(mean)) <= 3 * stderr if stderr > 0 else mc_mean == float(mean)
    report["monte_carlo"] = {"trials": trials, "seed": seed, "mean": mc_mean,
                             "variance": mc_var, "standard_error": stderr,
                             "within_3_standard_errors": bool(within)}
    return report


def cmd_adversarial_audit(N: int, p: int, C: int | None, seed: int) -> dict:
    if C is None:
        C = default_parts(N, p)
    data = gen_adversarial(N, p, C, seed)
    report = audit_adversarial(data, C)
    report["seed"] = seed
    verdict = "PASS" if report["one_subinterval_per_processor_part"] else "FAIL"
    report["summary"] = f"one subinterval per (processor, part): {verdict}"
    return report


def _emit(text: str, out):
    if out:
        path = Path(out)
        path.write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("partition", "sort", "sweep"):
            spec = spec_from_args(args)
            command = {"partition": cmd_partition, "sort": cmd_sort, "sweep": cmd_sweep}
            _emit(command[args.command](spec, args.format), args.out)
        elif args.command == "runsstats":
            report = cmd_runsstats(args.m1, args.m2, args.k, args.trials, args.seed)
            _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
        else:
            N = args.N if args.N is not None else args.p * args.keys_per_proc
            report = cmd_adversarial_audit(N, args.p, args.C, args.seed)
            _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
            sys.stderr.write(report["summary"] + "\n")
            if not report["pass"]:
                return 1
    except (ValueError, PartitionError, OSError, KeyError, IndexError) as exc:
        error = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(error) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
