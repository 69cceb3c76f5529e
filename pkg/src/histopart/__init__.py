"""Histogram partitioning for parallel sorting, simulated on a BSP cost ledger."""
from .bsp import BSPHarness, CostLedger, SuperstepRecord
from .core_math import (RunsModel, falling_factorial, log_star, runs_enumeration_oracle,
                        runs_expectation, runs_monte_carlo, runs_variance)
from .keyspace import (GlobalInput, RankOracle, audit_adversarial, gen_adversarial,
                       gen_skewed, gen_uniform, key_of_rank, local_rank, rank)
from .partitioner import (GammaSet, PartitionError, PartitionerConfig, PartitionResult,
                          SplitterState, compute_gamma, per_key_probability,
                          run_histogram_partitioning, run_hss_fixed, run_sample_sort,
                          sample_round, update_bounds, verify_balance)
from .sorter import SortOutcome, exchange_and_sort, verify_sorted

__version__ = "0.1.0"
