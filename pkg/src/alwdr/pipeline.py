"""End-to-end drivers: the vacant-slot phase pipeline, benchmarking, and the
exhaustive search for LP/optimum gap witnesses."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .dag import CapExceeded, build_basic_dag
from .formulate import (build_edge_lp, build_path_lp, enumerate_segment_paths,
                        values_by_edge)
from .generate import insert_vacant_slots
from .instance import Instance, Item, segment_map
from .lp import solve_basic_optimal
from .oracle import brute_force_optimal, validate_schedule
from .rounding import (RandomSource, decompose_flow, derandomize,
                       derandomize_multi, round_flows_collective,
                       round_paths_randomized)
from .schedule import Schedule

ALGORITHMS = ("path-rounding", "collective", "derandomized", "lp-only")


class PipelineError(RuntimeError):
    pass


@dataclass
class RunRecord:
    """One benchmark cell; ratios are recomputable from the stored values."""

    digest: str
    algorithm: str
    delta: int
    gamma: int | None
    eps: Fraction | None
    seed: int | None
    lp_value: Fraction | None
    weight: Fraction
    oracle: Fraction | None
    wall_ms: float
    phase_weights: tuple[Fraction, ...] = ()

    @property
    def ratio_vs_lp(self) -> float | None:
        if self.lp_value in (None, 0):
            return None
        return float(self.weight / self.lp_value)

    @property
    def ratio_vs_oracle(self) -> float | None:
        if self.oracle in (None, 0):
            return None
        return float(self.weight / self.oracle)


def solve_gamma_separated(inst: Instance, delta: int, algorithm: str, seed: int,
                          backend: str = "rational",
                          path_cap: int = 200000) -> tuple[Schedule | None, Fraction]:
    """Run one rounding algorithm on an instance, returning (schedule, LP value).

    ``lp-only`` skips rounding and reports the relaxation value as the
    weight of record (no schedule).
    """
    seg = segment_map(inst)
    if algorithm == "path-rounding":
        paths = enumerate_segment_paths(inst, seg, cap=path_cap)
        lp = build_path_lp(paths, delta)
        sol = solve_basic_optimal(lp, backend)
        if sol.status != "optimal":
            raise PipelineError(f"path LP is {sol.status}")
        sched = round_paths_randomized(paths, sol, delta, RandomSource(seed), inst)
        return sched, Fraction(sol.objective)
    g = build_basic_dag(inst)
    lp = build_edge_lp(g, delta)
    sol = solve_basic_optimal(lp, backend)
    if sol.status != "optimal":
        raise PipelineError(f"edge LP is {sol.status}")
    value = Fraction(sol.objective)
    if algorithm == "lp-only":
        return None, value
    if backend != "rational":
        # peeling needs exact arithmetic; re-solve the same problem exactly
        sol = solve_basic_optimal(lp, "rational")
    decomp = decompose_flow(g, seg, values_by_edge(g, sol))
    if algorithm == "collective":
        sched = round_flows_collective(decomp, delta, RandomSource(seed), inst)
    elif algorithm == "derandomized":
        if delta == 1:
            sched = derandomize(inst, decomp)
        else:
            sched = derandomize_multi(inst, decomp, delta)
    else:
        raise PipelineError(f"unknown algorithm {algorithm!r}")
    return sched, value


def approximate_alwdr(inst: Instance, delta: int | None, eps: Fraction,
                      algorithm: str, seed: int,
                      backend: str = "rational") -> tuple[Schedule, RunRecord]:
    """Best-of-phases driver for unrestricted instances.

    Phase ``i`` vacates every ``ceil(1/eps)``-th slot starting past ``i``,
    producing a gamma-separated instance the chosen algorithm can handle;
    the heaviest phase schedule wins.
    """
    if not (0 < eps <= 1):
        raise PipelineError(f"eps {eps} outside (0, 1]")
    if algorithm not in ("path-rounding", "collective", "derandomized"):
        raise PipelineError(f"pipeline cannot use algorithm {algorithm!r}")
    if delta is None:
        delta = inst.antennae
    period = math.ceil(Fraction(1) / eps)
    started = time.perf_counter()
    best: Schedule | None = None
    best_lp = Fraction(0)
    phase_weights = []
    for phase in range(1, period + 1):
        phased = insert_vacant_slots(inst, eps, phase)
        sched, lp_value = solve_gamma_separated(
            phased, delta, algorithm, seed * period + phase, backend)
        bad = validate_schedule(inst, sched)
        if bad:
            raise PipelineError(f"phase {phase} produced an invalid schedule: {bad}")
        phase_weights.append(sched.weight)
        if best is None or sched.weight > best.weight:
            best = sched
            best_lp = lp_value
    wall = (time.perf_counter() - started) * 1000
    record = RunRecord(inst.digest(), algorithm, delta,
                       segment_map(inst).gamma, eps, seed, best_lp, best.weight,
                       None, wall, tuple(phase_weights))
    return best, record


def bench(instances: list[tuple[str, Instance]], algorithms: list[str],
          seeds: list[int], backend: str = "rational", with_oracle: bool = True,
          oracle_cap: int = 2000000) -> tuple[list[RunRecord], list[dict]]:
    """One record per (instance, algorithm, seed); failures collected, not fatal."""
    records: list[RunRecord] = []
    failures: list[dict] = []
    for name, inst in instances:
        oracle_weight = None
        if with_oracle:
            try:
                oracle_weight = brute_force_optimal(inst, max_states=oracle_cap).optimum
            except CapExceeded as exc:
                failures.append({"instance": name, "stage": "oracle", "error": str(exc)})
        seg = segment_map(inst)
        for algorithm in algorithms:
            for seed in seeds:
                started = time.perf_counter()
                try:
                    sched, lp_value = solve_gamma_separated(
                        inst, inst.antennae, algorithm, seed, backend)
                except (CapExceeded, PipelineError) as exc:
                    failures.append({
                        "instance": name, "stage": algorithm, "seed": seed,
                        "error": str(exc),
                    })
                    continue
                wall = (time.perf_counter() - started) * 1000
                if sched is not None:
                    bad = validate_schedule(inst, sched)
                    if bad:
                        failures.append({
                            "instance": name, "stage": algorithm, "seed": seed,
                            "error": f"invalid schedule: {bad}",
                        })
                        continue
                    weight = sched.weight
                else:
                    weight = lp_value
                records.append(RunRecord(
                    inst.digest(), algorithm, inst.antennae, seg.gamma, None,
                    seed, lp_value, weight, oracle_weight, wall))
    records.sort(key=lambda r: (r.digest, r.algorithm, r.seed or 0))
    return records, failures


@dataclass
class GapResult:
    best_ratio: Fraction
    best_instance: Instance | None
    examined: int
    partial: bool
    history: list[tuple[str, Fraction]] = field(default_factory=list)


def gap_search(max_slots: int = 4, channels: int = 2, occurrences: int = 2,
               cap: int = 20000) -> GapResult:
    """Exhaustively scan small equal-weight instances for LP/optimum gaps.

    Enumerates full grids on the given channel count where every item is
    broadcast exactly ``occurrences`` times (or once), computes the exact
    edge-LP value and the brute-force optimum, and reports the maximizer of
    their ratio.  Deterministic order; hitting the cap returns the best so
    far flagged partial.
    """
    if occurrences not in (1, 2):
        raise PipelineError("the gap space covers 1 or 2 occurrences per item")
    best_ratio = Fraction(0)
    best_inst = None
    examined = 0
    partial = False
    history = []
    for slots in range(2, max_slots + 1):
        cells = [(ch, sl) for sl in range(1, slots + 1)
                 for ch in range(1, channels + 1)]
        if occurrences == 1:
            assignments = [_single_assignment(cells)]
        else:
            assignments = _pairings(cells)
        for grid in assignments:
            if examined >= cap:
                partial = True
                break
            examined += 1
            n = max(grid.values())
            items = tuple(Item(i, Fraction(1)) for i in range(1, n + 1))
            inst = Instance(items, channels, slots, 1, grid)
            lp = build_edge_lp(build_basic_dag(inst), 1)
            sol = solve_basic_optimal(lp, "rational")
            opt = brute_force_optimal(inst, 1).optimum
            ratio = Fraction(sol.objective) / opt
            if ratio > best_ratio:
                best_ratio = ratio
                best_inst = inst
                history.append((f"T={slots} #{examined}", ratio))
        if partial:
            break
    return GapResult(best_ratio, best_inst, examined, partial, history)


def _single_assignment(cells) -> dict[tuple[int, int], int]:
    return {cell: k + 1 for k, cell in enumerate(cells)}


def _pairings(cells):
    """All perfect pairings of the cell list, each pair one two-occurrence item."""
    if not cells:
        yield {}
        return
    first, rest = cells[0], cells[1:]
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for sub in _pairings(remaining):
            merged = dict(sub)
            item = len(sub) // 2 + 1
            merged[first] = item
            merged[partner] = item
            yield merged
