"""Deterministic corpus builders shared by the unit and acceptance tests.

Every corpus is produced by scanning seeds in a fixed order and filtering,
so repeated runs see byte-identical instances.
"""

from __future__ import annotations

import random
from collections import Counter
from fractions import Fraction

from alwdr.dag import build_basic_dag
from alwdr.formulate import build_edge_lp
from alwdr.generate import (GenParams, GenerationError, generate_from_3dm,
                            generate_random, has_perfect_matching,
                            insert_vacant_slots)
from alwdr.instance import Instance, occurrence_assumption_holds, segment_map
from alwdr.lp import is_integral, solve_basic_optimal


def single_occurrence_corpus(count: int, seed0: int = 10000,
                             deltas=(1, 2)) -> list[Instance]:
    """Random programs where every item is broadcast exactly once."""
    out = []
    seed = seed0
    while len(out) < count:
        seed += 1
        k = len(out)
        delta = deltas[k % len(deltas)]
        params = GenParams(channels=max(2, 2 + k % 3), slots=6 + k % 7,
                           density=0.4, single_occurrence=True, antennae=delta)
        try:
            inst = generate_random(params, seed)
        except GenerationError:
            continue
        if not inst.grid:
            continue
        out.append(inst)
    return out


def oa_corpus(count: int, seed0: int = 20000, max_slots: int = 21,
              channels=(2, 3), gammas=(2, 3, 4)) -> list[Instance]:
    """Gamma-separated programs obeying the once-per-segment rule."""
    out = []
    seed = seed0
    while len(out) < count:
        seed += 1
        k = len(out)
        params = GenParams(channels=channels[k % len(channels)],
                           slots=8 + k % (max_slots - 7),
                           density=0.5, gamma_separation=gammas[k % len(gammas)],
                           occurrence_assumption=True, max_occurrences=3,
                           antennae=1)
        try:
            inst = generate_random(params, seed)
        except GenerationError:
            continue
        if not inst.grid:
            continue
        out.append(inst)
    return out


def fractional_optima_corpus(count: int, seed0: int = 30000) -> list[tuple]:
    """(instance, basic optimum) pairs whose edge-LP vertex is fractional."""
    out = []
    seed = seed0
    while len(out) < count:
        seed += 1
        params = GenParams(channels=2 + seed % 2, slots=8 + seed % 10,
                           density=0.6, gamma_separation=2 + seed % 3,
                           occurrence_assumption=True, max_occurrences=3,
                           antennae=1)
        try:
            inst = generate_random(params, seed)
        except GenerationError:
            continue
        g = build_basic_dag(inst)
        sol = solve_basic_optimal(build_edge_lp(g, 1))
        if sol.status != "optimal" or is_integral(sol, Fraction(0)):
            continue
        out.append((inst, g, sol))
    return out


def repeats_confined(inst: Instance) -> bool:
    seg = segment_map(inst)
    slots_of: dict[int, list[int]] = {}
    for (ch, sl), item in inst.grid.items():
        slots_of.setdefault(item, []).append(sl)
    return all(
        len({seg.segment_of(s) for s in slots}) <= 1
        for slots in slots_of.values() if len(slots) >= 2
    )


def small_improved_corpus(count: int, seed0: int = 100) -> list[Instance]:
    """At most 12 occurrence edges; repeated items stay inside one segment and
    each segment holds at most gamma multиply-occurring items."""
    out = []
    seed = seed0
    while len(out) < count and seed < seed0 + 5000:
        seed += 1
        m = 2 + seed % 2
        params = GenParams(channels=m, slots=6 + seed % 4, density=0.55,
                           gamma_separation=2 + seed % 2, max_occurrences=2,
                           antennae=1)
        try:
            inst = generate_random(params, seed)
        except GenerationError:
            continue
        if not (0 < len(inst.grid) <= 12) or not repeats_confined(inst):
            continue
        seg = segment_map(inst)
        ok = True
        for lo, hi in seg.segments:
            c = Counter(inst.grid[(ch, sl)] for sl in range(lo, hi + 1)
                        for ch in range(1, m + 1) if (ch, sl) in inst.grid)
            if sum(1 for v in c.values() if v >= 2) > seg.gamma:
                ok = False
        if ok:
            out.append(inst)
    return out


def fpt_corpus(count: int, seed0: int = 1000, max_b: int = 6) -> list[Instance]:
    """Small programs with repeats whose recurrence parameter stays low."""
    from alwdr.oracle import fpt_parameter

    out = []
    seed = seed0
    while len(out) < count:
        seed += 1
        params = GenParams(channels=2 + seed % 2, slots=5 + seed % 5,
                           density=0.5, max_occurrences=2 + seed % 2, antennae=1)
        try:
            inst = generate_random(params, seed)
        except GenerationError:
            continue
        if not inst.grid or fpt_parameter(inst) > max_b:
            continue
        out.append(inst)
    return out


def dm3_corpora(count_each: int, size: int = 3, seed: int = 0):
    """Triple sets with a planted perfect matching, and sets verified
    matching-free by exhaustive search."""
    rng = random.Random(seed)
    planted, matchfree = [], []
    while len(planted) < count_each or len(matchfree) < count_each:
        ys = list(range(1, size + 1))
        zs = list(range(1, size + 1))
        rng.shuffle(ys)
        rng.shuffle(zs)
        if rng.random() < 0.5:
            triples = [(i + 1, ys[i], zs[i]) for i in range(size)]
            extra = rng.randint(1, 4)
        else:
            triples = []
            extra = rng.randint(3, 7)
        for _ in range(extra):
            t = (rng.randint(1, size), rng.randint(1, size), rng.randint(1, size))
            if t not in triples:
                triples.append(t)
        if not triples:
            continue
        if has_perfect_matching(triples, size):
            if len(planted) < count_each:
                planted.append(triples)
        elif len(matchfree) < count_each:
            matchfree.append(triples)
    return planted, matchfree


def phase_oa_corpus(count: int, eps: Fraction, seed0: int = 40000) -> list[Instance]:
    """Programs that satisfy the once-per-segment rule in every vacating phase.

    Spacing repeats at least 2*ceil(1/eps) - 1 slots apart guarantees this,
    since no phase segment is longer than that.
    """
    import math

    period = math.ceil(Fraction(1) / eps)
    gap = 2 * period - 1
    out = []
    seed = seed0
    while len(out) < count:
        seed += 1
        m = 2 + seed % 2
        slots = 9 + seed % 5
        params = GenParams(n=round(0.75 * m * slots * 0.45), channels=m,
                           slots=slots, density=0.45, max_occurrences=2,
                           antennae=1, min_repeat_gap=gap)
        try:
            inst = generate_random(params, seed)
        except GenerationError:
            continue
        if not inst.grid:
            continue
        if all(occurrence_assumption_holds(insert_vacant_slots(inst, eps, ph))
               for ph in range(1, period + 1)):
            out.append(inst)
    return out
