"""Solvers for the multi-antenna largest-weight data retrieval problem."""

from .instance import (Instance, InstanceError, Item, Occurrence, SegmentMap,
                       conflict_free, occurrence_assumption_holds,
                       parse_instance, segment_map, serialize)
from .generate import (GenParams, generate_from_3dm, generate_random,
                       insert_vacant_slots)
from .dag import (CapExceeded, Dag, build_basic_dag, build_improved_dag,
                  build_refined_dag, path_to_schedule)
from .lp import LpProblem, LpSolution, is_integral, solve_basic_optimal
from .formulate import (SegmentPaths, build_dual_lp, build_edge_lp,
                        build_path_lp, compute_ratio_bound,
                        enumerate_segment_paths, retrieved_weight)
from .rounding import (FlowDecomposition, RandomSource, decompose_flow,
                       derandomize, round_flows_collective,
                       round_paths_randomized)
from .oracle import (OracleResult, brute_force_optimal, fpt_exact,
                     validate_schedule)
from .pipeline import RunRecord, approximate_alwdr, bench, gap_search
from .schedule import Schedule, make_schedule

__version__ = "0.1.0"
