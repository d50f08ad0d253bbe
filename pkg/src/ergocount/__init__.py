"""Exact-arithmetic construction and verification of counting-operator
counterexample systems on dyadic rotations."""

from .base_system import (BaseParams, SamplingPolicy, build_base,
                          run_negative_controls, verify_base)
from .counting import (CountQuery, OrbitSpec, brute_force_N, count_N, ratio,
                       run_oracle_suite)
from .intervals import (CapacityError, Family, FamilyInvariantError,
                        GridCompatibilityError, GridInterval,
                        PeriodicIntervalSet, interval)
from .level_systems import (LifeFunction, LifeTower, build_level_k,
                            run_level_negative_controls, verify_level_k)
from .lineage import lineage_chain
from .maximal import (indicator_maximal, maximal_value, one_sided_average_sup,
                      seq_counting_sup, verify_maximal)
from .pblock import (build_pblock, estimate_pblock, exact_stats,
                     least_honest_p, m_p, smallness_holds, verify_pblock,
                     witness_records)
from .report import ANCHORS, VerificationReport
from .serialize import (SCHEMA_VERSION, SchemaError, dump_report,
                        dump_step_function, load_report, load_step_function)
from .stepfn import StepFunction

__version__ = "0.1.0"

__all__ = [
    "ANCHORS", "BaseParams", "CapacityError", "CountQuery", "Family",
    "FamilyInvariantError", "GridCompatibilityError", "GridInterval",
    "LifeFunction", "LifeTower", "OrbitSpec", "PeriodicIntervalSet",
    "SCHEMA_VERSION", "SamplingPolicy", "SchemaError", "StepFunction",
    "VerificationReport", "brute_force_N", "build_base", "build_level_k",
    "build_pblock", "count_N", "dump_report", "dump_step_function",
    "estimate_pblock", "exact_stats", "indicator_maximal", "interval",
    "least_honest_p", "lineage_chain", "load_report", "load_step_function",
    "m_p", "maximal_value", "one_sided_average_sup", "ratio",
    "run_level_negative_controls", "run_negative_controls",
    "run_oracle_suite", "seq_counting_sup", "smallness_holds", "verify_base",
    "verify_level_k", "verify_maximal", "verify_pblock", "witness_records",
]
