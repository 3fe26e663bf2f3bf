"""Command-line driver for instance generation, solving and benchmarking.

Exit codes: 0 success, 1 validation failure, 2 resource cap exceeded.
All commands are configured by flags only; results depend on nothing else.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import dag as dagmod
from . import report
from .dag import CapExceeded, build_basic_dag, build_improved_dag, build_refined_dag
from .formulate import build_dual_lp, build_edge_lp, build_path_lp, enumerate_segment_paths
from .generate import (FIG5_TRIPLES, GenParams, generate_from_3dm, generate_random)
from .instance import (Instance, InstanceError, from_json, parse_instance,
                       segment_map, serialize, to_json)
from .lp import write_lp_format
from .oracle import IntegralityError, brute_force_optimal, fpt_exact, validate_schedule
from .pipeline import (ALGORITHMS, PipelineError, approximate_alwdr, bench,
                       gap_search, solve_gamma_separated)
from .schedule import schedule_to_json, serialize_schedule


def load_instance(path: str) -> Instance:
    text = Path(path).read_text()
    if path.endswith(".json"):
        return from_json(text)
    return parse_instance(text)


def _write_instance(inst: Instance, out: str, also_json: bool) -> None:
    Path(out).write_text(serialize(inst))
    if also_json:
        Path(out).with_suffix(".json").write_text(to_json(inst))


def cmd_gen(args) -> int:
    params = GenParams(
        n=args.n, channels=args.channels, slots=args.slots, antennae=args.delta,
        weight_lo=args.weight_lo, weight_hi=args.weight_hi, density=args.density,
        max_occurrences=args.max_occurrences,
        single_occurrence=args.single_occurrence,
        gamma_separation=args.gamma_sep,
        occurrence_assumption=args.occurrence_assumption,
    )
    inst = generate_random(params, args.seed)
    _write_instance(inst, args.out, args.json)
    print(f"wrote {args.out}: n={inst.n} m={inst.channels} T={inst.slots} "
          f"delta={inst.antennae} occ={len(inst.grid)} digest={inst.digest()}")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    delta = args.delta if args.delta else inst.antennae
    sched, record = approximate_alwdr(inst, delta, Fraction(args.epsilon),
                                      args.algorithm, args.seed, args.backend)
    bad = validate_schedule(inst, sched)
    if bad:
        print(f"invalid schedule: {bad}", file=sys.stderr)
        return 1
    print(serialize_schedule(sched), end="")
    phases = " ".join(str(w) for w in record.phase_weights)
    print(f"lp={record.lp_value} phases=[{phases}] wall_ms={record.wall_ms:.1f}")
    if args.out:
        Path(args.out).write_text(serialize_schedule(sched))
        Path(args.out).with_suffix(".json").write_text(schedule_to_json(sched))
    return 0


def cmd_round(args) -> int:
    inst = load_instance(args.instance)
    delta = args.delta if args.delta else inst.antennae
    sched, lp_value = solve_gamma_separated(inst, delta, args.algorithm,
                                            args.seed, args.backend)
    if sched is None:
        print(f"lp={lp_value}")
        return 0
    bad = validate_schedule(inst, sched)
    if bad:
        print(f"invalid schedule: {bad}", file=sys.stderr)
        return 1
    print(serialize_schedule(sched), end="")
    print(f"lp={lp_value} seed={args.seed}")
    if args.out:
        Path(args.out).write_text(serialize_schedule(sched))
    return 0


def cmd_oracle(args) -> int:
    inst = load_instance(args.instance)
    delta = args.delta if args.delta else inst.antennae
    if args.method == "fpt":
        result = fpt_exact(inst, delta, edge_cap=args.cap)
    else:
        result = brute_force_optimal(inst, delta, max_states=args.cap)
    bad = validate_schedule(inst, result.witness)
    if bad:
        print(f"oracle produced an invalid witness: {bad}", file=sys.stderr)
        return 1
    print(serialize_schedule(result.witness), end="")
    print(f"optimum={result.optimum} method={result.method} "
          f"states={result.states_explored}")
    return 0


def cmd_bench(args) -> int:
    paths: list[str] = []
    for entry in args.instances:
        p = Path(entry)
        if p.is_dir():
            paths.extend(sorted(str(f) for f in p.glob("*.alwdr")))
        else:
            paths.append(entry)
    instances = []
    for path in paths:
        try:
            instances.append((path, load_instance(path)))
        except (OSError, InstanceError) as exc:
            print(f"unreadable corpus entry {path}: {exc}", file=sys.stderr)
            return 1
    algorithms = args.algorithms.split(",") if args.algorithms else ["derandomized"]
    for algo in algorithms:
        if algo not in ALGORITHMS:
            print(f"unknown algorithm {algo!r}", file=sys.stderr)
            return 1
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else [0]
    records, failures = bench(instances, algorithms, seeds, args.backend,
                              with_oracle=not args.no_oracle, oracle_cap=args.cap)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report.write_records_csv(records, outdir / "report.csv")
    summary = report.summarize(records)
    (outdir / "summary.txt").write_text(summary)
    if failures:
        report.write_failures(failures, outdir / "failures.json")
    figures = []
    if not args.no_figures:
        figures = report.render_figures(records, outdir)
    print(summary, end="")
    print(f"wrote {outdir / 'report.csv'}"
          + (f" and {len(figures)} figure(s)" if figures else ""))
    if failures:
        print(f"{len(failures)} cell(s) failed; see failures.json", file=sys.stderr)
        return 1
    return 0


def cmd_gap_search(args) -> int:
    result = gap_search(max_slots=args.max_slots, occurrences=args.occurrences,
                        cap=args.cap)
    print(f"examined={result.examined} best LP/OPT ratio={result.best_ratio} "
          f"(~{float(result.best_ratio):.4f})")
    if args.out and result.best_instance is not None:
        _write_instance(result.best_instance, args.out, also_json=False)
        print(f"witness written to {args.out}")
    if result.partial:
        print("cap exceeded: result is best-so-far", file=sys.stderr)
        return 2
    return 0


def cmd_reduce_3dm(args) -> int:
    if args.fig5:
        triples, size = FIG5_TRIPLES, 3
    else:
        doc = json.loads(Path(args.triples).read_text())
        triples = [tuple(t) for t in doc["triples"]]
        size = doc["size"]
    inst = generate_from_3dm(triples, size)
    _write_instance(inst, args.out, args.json)
    print(f"wrote {args.out}: decision threshold is weight {2 * size}")
    return 0


def cmd_dump_dag(args) -> int:
    inst = load_instance(args.instance)
    if args.variant == "basic":
        g = build_basic_dag(inst)
    elif args.variant == "refined":
        g = build_refined_dag(inst)
    else:
        refined = build_refined_dag(inst)
        seg = (dagmod.whole_horizon_segments(inst) if args.whole_horizon
               else segment_map(inst))
        g = build_improved_dag(refined, seg, edge_cap=args.cap)
    text = dagmod.to_dot(g)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}: |V|={len(g.vertices)} |E|={len(g.edges)}")
    else:
        print(text, end="")
    return 0


def cmd_export_lp(args) -> int:
    inst = load_instance(args.instance)
    delta = args.delta if args.delta else inst.antennae
    if args.formulation == "edge":
        problem = build_edge_lp(build_basic_dag(inst), delta)
    elif args.formulation == "path":
        paths = enumerate_segment_paths(inst, segment_map(inst), cap=args.cap)
        problem = build_path_lp(paths, delta)
    else:
        problem = build_dual_lp(build_refined_dag(inst), delta)
    text = write_lp_format(problem)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alwdr",
        description="Solvers and benchmarks for multi-antenna largest-weight "
                    "data retrieval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded random instance")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--channels", "-m", type=int, default=2)
    p.add_argument("--slots", "-T", type=int, default=8)
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("--weight-lo", type=int, default=1)
    p.add_argument("--weight-hi", type=int, default=9)
    p.add_argument("--max-occurrences", type=int, default=3)
    p.add_argument("--single-occurrence", action="store_true")
    p.add_argument("--gamma-sep", type=int, default=None)
    p.add_argument("--occurrence-assumption", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="also write a JSON mirror")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="best-of-phases pipeline for any instance")
    p.add_argument("instance")
    p.add_argument("--epsilon", default="1/4")
    p.add_argument("--algorithm", choices=[a for a in ALGORITHMS if a != "lp-only"],
                   default="derandomized")
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["rational", "float"], default="rational")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("round", help="single run on a gamma-separated instance")
    p.add_argument("instance")
    p.add_argument("--algorithm", choices=list(ALGORITHMS), default="derandomized")
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=["rational", "float"], default="rational")
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("oracle", help="exact optimum (brute force or fpt)")
    p.add_argument("instance")
    p.add_argument("--method", choices=["brute", "fpt"], default="brute")
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--cap", type=int, default=2000000)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="run algorithms over a corpus, emit reports")
    p.add_argument("instances", nargs="+",
                   help="instance files or directories of *.alwdr files")
    p.add_argument("--algorithms", default="path-rounding,collective,derandomized")
    p.add_argument("--seeds", default="0")
    p.add_argument("--backend", choices=["rational", "float"], default="rational")
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--cap", type=int, default=2000000)
    p.add_argument("-o", "--out", default="bench_out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gap-search", help="search small instances for LP/OPT gaps")
    p.add_argument("--max-slots", type=int, default=4)
    p.add_argument("--occurrences", type=int, choices=[1, 2], default=2)
    p.add_argument("--cap", type=int, default=20000)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_gap_search)

    p = sub.add_parser("reduce-3dm", help="build the matching-reduction instance")
    p.add_argument("--triples", default=None,
                   help='JSON file: {"size": k, "triples": [[x,y,z], ...]}')
    p.add_argument("--fig5", action="store_true",
                   help="use the built-in 7-triple example")
    p.add_argument("--json", action="store_true")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_reduce_3dm)

    p = sub.add_parser("dump-dag", help="write a graph in DOT format")
    p.add_argument("instance")
    p.add_argument("--variant", choices=["basic", "refined", "improved"],
                   default="basic")
    p.add_argument("--whole-horizon", action="store_true",
                   help="improved variant: deduplicate across the whole horizon")
    p.add_argument("--cap", type=int, default=200000)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_dump_dag)

    p = sub.add_parser("export-lp", help="write a formulation in LP text format")
    p.add_argument("instance")
    p.add_argument("--formulation", choices=["edge", "path", "dual"], default="edge")
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--cap", type=int, default=200000)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=cmd_export_lp)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return 2
    except (InstanceError, PipelineError, IntegralityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
