"""Rounding procedures turning fractional LP optima into schedules.

* per-segment path rounding: sample one sequence (or a disjoint tuple) per
  segment at the path-LP probabilities;
* flow decomposition: peel each segment's fractional flow into single-path
  subflows whose values re-sum exactly to the edge values;
* collective rounding: sample whole subflows per segment at their values;
* derandomization: walk segments in order, committing the subflow that
  maximizes committed weight plus the exact conditional expectation of the
  remaining segments, never consulting randomness.

All tie-breaking is by lowest id, so every output is reproducible from
(seed, input) alone.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .dag import CapExceeded, Dag
from .formulate import SegmentPaths, path_var
from .instance import Instance, Occurrence, SegmentMap
from .lp import LpSolution
from .schedule import Schedule, make_schedule


class RoundingError(ValueError):
    """Inconsistent rounding inputs (non-conserving flow, wrong pairing)."""


class RandomSource:
    """Seeded decision stream; identical seeds replay identical choices."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = random.Random(seed)

    def draw(self) -> float:
        return self._rng.random()

    def child(self, tag: int) -> "RandomSource":
        return RandomSource(hash((self.seed, tag)) & 0x7FFFFFFF)


@dataclass(frozen=True)
class Subflow:
    segment: int
    index: int
    value: Fraction
    edges: tuple[int, ...]
    picks: tuple[Occurrence, ...]

    @property
    def items(self) -> frozenset[int]:
        return frozenset(o.item for o in self.picks)


@dataclass(frozen=True)
class FlowDecomposition:
    per_segment: tuple[tuple[Subflow, ...], ...]
    segment_edge_counts: tuple[int, ...]

    def subflow_count(self) -> int:
        return sum(len(fs) for fs in self.per_segment)


def decompose_flow(g: Dag, seg: SegmentMap,
                   values: dict[int, Fraction]) -> FlowDecomposition:
    """Peel every segment's flow into path subflows.

    Repeatedly takes the minimum-residual edge of the segment, extends to a
    maximal path inside the segment (largest-residual predecessor and
    successor, ties by id) and subtracts its value along the path.  The
    minimum choice guarantees no residual ever goes negative, so with
    rational arithmetic the subflow values re-sum to the edge values
    exactly and at most one subflow is created per segment edge.
    """
    _check_conservation(g, values)
    per_segment = []
    edge_counts = []
    for h in range(len(seg.segments)):
        seg_edges = [e for e in g.edges
                     if e.segment == h and e.kind in ("occurrence", "link")]
        edge_counts.append(len(seg_edges))
        seg_ids = {e.id for e in seg_edges}
        residual = {e.id: values[e.id] for e in seg_edges if values[e.id] > 0}
        subflows = []
        while residual:
            star = min(residual, key=lambda i: (residual[i], i))
            y = residual[star]
            path = [star]
            # extend backwards to the segment boundary
            cur = g.edge(star).tail
            while True:
                preds = [e for e in g.in_edges[cur]
                         if e.id in residual and e.id in seg_ids]
                if not preds:
                    break
                best = max(preds, key=lambda e: (residual[e.id], -e.id))
                path.insert(0, best.id)
                cur = best.tail
            cur = g.edge(star).head
            while True:
                succs = [e for e in g.out_edges[cur]
                         if e.id in residual and e.id in seg_ids]
                if not succs:
                    break
                best = max(succs, key=lambda e: (residual[e.id], -e.id))
                path.append(best.id)
                cur = best.head
            for eid in path:
                residual[eid] -= y
                if residual[eid] < 0:
                    raise RoundingError("negative residual during peeling")
                if residual[eid] == 0:
                    del residual[eid]
            picks = tuple(
                Occurrence(e.item, e.channel, e.slot)
                for e in (g.edge(i) for i in path)
                if e.kind == "occurrence"
            )
            subflows.append(Subflow(h, len(subflows), y, tuple(path), picks))
        per_segment.append(tuple(subflows))
    return FlowDecomposition(tuple(per_segment), tuple(edge_counts))


def _check_conservation(g: Dag, values: dict[int, Fraction]) -> None:
    for v in g.vertices:
        if v.role not in ("tail", "head"):
            continue
        inflow = sum((values[e.id] for e in g.in_edges[v.index]), Fraction(0))
        outflow = sum((values[e.id] for e in g.out_edges[v.index]), Fraction(0))
        if inflow != outflow:
            raise RoundingError(
                f"flow not conserved at vertex {v.index}: {inflow} in, {outflow} out"
            )


def _pick_categorical(options: list[tuple[int, Fraction]], rng: RandomSource) -> int:
    """Pick index i with probability of its mass; -1 with the leftover mass."""
    r = rng.draw()
    acc = 0.0
    for idx, mass in options:
        acc += float(mass)
        if r < acc:
            return idx
    return -1


def _disjoint_sets(subflows, delta: int, disjoint_key, cap: int = 100000):
    """All pairwise-disjoint index sets of the largest achievable size <= delta."""
    best_k = 0
    sets_by_k: dict[int, list[tuple[int, ...]]] = {}
    n = len(subflows)
    for k in range(min(delta, n), 0, -1):
        combos = []
        for combo in itertools.combinations(range(n), k):
            keys = [disjoint_key(subflows[i]) for i in combo]
            union: set = set()
            total = sum(len(s) for s in keys)
            for s in keys:
                union |= s
            if len(union) == total:
                combos.append(combo)
            if len(combos) > cap:
                raise CapExceeded("too many disjoint tuples to enumerate")
        if combos:
            best_k = k
            sets_by_k[k] = combos
            break
    return sets_by_k.get(best_k, []), best_k


def round_flows_collective(decomp: FlowDecomposition, delta: int,
                           rng: RandomSource, inst: Instance) -> Schedule:
    """Sample whole subflows per segment; their concatenation is a schedule.

    With one antenna each segment holds a categorical draw at the subflow
    values (leftover mass selects nothing).  With several antennae a
    pairwise edge-disjoint set of subflows is drawn with probability
    proportional to its total value.
    """
    chosen: list[list[Subflow]] = []
    for subflows in decomp.per_segment:
        if delta == 1:
            mass = sum((f.value for f in subflows), Fraction(0))
            if mass > 1:
                raise RoundingError(f"segment mass {mass} exceeds the antenna count")
            idx = _pick_categorical([(i, f.value) for i, f in enumerate(subflows)], rng)
            chosen.append([subflows[idx]] if idx >= 0 else [])
        else:
            sets_, _ = _disjoint_sets(subflows, delta, lambda f: set(f.edges))
            if not sets_:
                chosen.append([])
                continue
            masses = [sum((subflows[i].value for i in combo), Fraction(0))
                      for combo in sets_]
            total = sum(masses, Fraction(0))
            if total == 0:
                chosen.append([])
                continue
            probs = [(k, m / total) for k, m in enumerate(masses)]
            idx = _pick_categorical(probs, rng)
            if idx < 0:
                idx = len(sets_) - 1
            chosen.append([subflows[i] for i in sets_[idx]])
    return _assemble(chosen, delta, inst)


def _assemble(chosen: list[list[Subflow | object]], delta: int,
              inst: Instance) -> Schedule:
    per_antenna: list[list[Occurrence]] = [[] for _ in range(delta)]
    for selected in chosen:
        ordered = sorted(selected, key=lambda f: (f.picks[0].slot, f.picks[0].channel)
                         if f.picks else (0, 0))
        for a, f in enumerate(ordered):
            per_antenna[a].extend(f.picks)
    return make_schedule(inst, per_antenna)


def round_paths_randomized(paths: SegmentPaths, sol: LpSolution, delta: int,
                           rng: RandomSource, inst: Instance) -> Schedule:
    """Sample one sequence per segment at the path-LP probabilities.

    For several antennae, draws a multiset of pairwise disjoint sequences
    (the empty sequence may repeat) with probability proportional to its
    mass, normalized so the tuple masses form a distribution.
    """
    chosen: list[list] = []
    for ps in paths.per_segment:
        masses = []
        for sp in ps:
            var = path_var(sp.segment, sp.index)
            if var not in sol.values:
                raise RoundingError(f"solution lacks {var}; wrong paths/solution pair")
            masses.append(Fraction(sol.values[var]))
        if delta == 1:
            idx = _pick_categorical(list(enumerate(masses)), rng)
            if idx < 0:
                idx = 0  # guard against float drift; the empty path is index 0
            chosen.append([ps[idx]] if ps[idx].picks else [])
        else:
            nonempty = [sp for sp in ps if sp.picks]
            combos: list[tuple[tuple, Fraction]] = []
            for k in range(0, min(delta, len(nonempty)) + 1):
                for combo in itertools.combinations(nonempty, k):
                    cells = [set((o.channel, o.slot) for o in sp.picks)
                             for sp in combo]
                    union: set = set()
                    total_cells = sum(len(c) for c in cells)
                    for c in cells:
                        union |= c
                    if len(union) != total_cells:
                        continue
                    mass = sum((Fraction(masses[sp.index]) for sp in combo),
                               Fraction(0))
                    mass += (delta - k) * Fraction(masses[0])  # idle via empty path
                    combos.append((combo, mass))
                    if len(combos) > 200000:
                        raise CapExceeded("too many disjoint path tuples")
            total = sum((m for _, m in combos), Fraction(0))
            if total == 0:
                chosen.append([])
                continue
            idx = _pick_categorical(
                [(i, m / total) for i, (_, m) in enumerate(combos)], rng)
            if idx < 0:
                idx = 0
            chosen.append(list(combos[idx][0]))
    return _assemble(chosen, delta, inst)


def segment_item_masses(decomp: FlowDecomposition) -> list[dict[int, Fraction]]:
    """Per segment, the probability that its draw covers each item."""
    out = []
    for subflows in decomp.per_segment:
        masses: dict[int, Fraction] = {}
        for f in subflows:
            for item in f.items:
                masses[item] = masses.get(item, Fraction(0)) + f.value
        out.append(masses)
    return out


def _derandomize_choices(inst: Instance,
                         decomp: FlowDecomposition) -> list[Subflow | None]:
    masses = segment_item_masses(decomp)
    n_seg = len(decomp.per_segment)
    items: set[int] = set()
    for m in masses:
        items.update(m)
    # miss_after[h][i]: probability no segment beyond h covers item i
    miss_after: list[dict[int, Fraction]] = [dict() for _ in range(n_seg + 1)]
    miss_after[n_seg] = {i: Fraction(1) for i in items}
    for h in range(n_seg - 1, -1, -1):
        miss_after[h] = {
            i: miss_after[h + 1][i] * (1 - masses[h].get(i, Fraction(0)))
            for i in items
        }

    covered: set[int] = set()
    choices: list[Subflow | None] = []
    for h, subflows in enumerate(decomp.per_segment):
        def residual_gain(covered_now: set[int]) -> Fraction:
            total = Fraction(0)
            for i in items:
                if i not in covered_now:
                    total += inst.weight_of(i) * (1 - miss_after[h + 1][i])
            return total

        best: Subflow | None = None
        best_score = residual_gain(covered)  # selecting nothing in this segment
        for f in subflows:
            gain = sum((inst.weight_of(i) for i in f.items if i not in covered),
                       Fraction(0))
            score = gain + residual_gain(covered | f.items)
            if score > best_score:
                best, best_score = f, score
        if best is not None:
            covered |= best.items
        choices.append(best)
    return choices


def derandomize(inst: Instance, decomp: FlowDecomposition) -> Schedule:
    """Greedy conditional-expectation rounding for one antenna.

    Processing segments in order, every candidate subflow is scored by the
    weight of its not-yet-covered items plus the exact expected weight the
    remaining segments would add under independent categorical draws, with
    covered items contributing zero.  The argmax is committed (selecting
    nothing is always a candidate, covering segments whose flow mass is
    below one).  No random source is consulted; the output is a function of
    the decomposition alone.
    """
    choices = _derandomize_choices(inst, decomp)
    return _assemble([[c] if c is not None else [] for c in choices], 1, inst)


def derandomize_multi(inst: Instance, decomp: FlowDecomposition,
                      delta: int) -> Schedule:
    """Sequential single-antenna derandomization on residuals.

    Experimental extension for several antennae: each pass removes the
    committed subflows' edges and zeroes covered items, then re-runs the
    single-antenna walk.  The per-pass guarantee does not compose into a
    proven joint ratio.
    """
    used_edges: set[int] = set()
    covered: set[int] = set()
    per_antenna: list[list[Occurrence]] = []
    for _ in range(delta):
        residual = FlowDecomposition(
            tuple(
                tuple(f for f in fs if not (set(f.edges) & used_edges))
                for fs in decomp.per_segment
            ),
            decomp.segment_edge_counts,
        )
        choices = _derandomize_choices(inst, _mask_items(residual, covered))
        picks: list[Occurrence] = []
        for c in choices:
            if c is not None:
                picks.extend(c.picks)
                used_edges |= set(c.edges)
        covered |= {o.item for o in picks}
        per_antenna.append(picks)
    return make_schedule(inst, per_antenna)


def _mask_items(decomp: FlowDecomposition, covered: set[int]) -> FlowDecomposition:
    if not covered:
        return decomp
    return FlowDecomposition(
        tuple(
            tuple(
                Subflow(f.segment, f.index, f.value, f.edges,
                        tuple(o for o in f.picks if o.item not in covered))
                for f in fs
            )
            for fs in decomp.per_segment
        ),
        decomp.segment_edge_counts,
    )


def measured_k(unit_items: list[list[frozenset[int]]]) -> int:
    """Largest number of rounding units whose draw can cover one item."""
    seen: dict[int, int] = {}
    for units in unit_items:
        items_here = set()
        for s in units:
            items_here |= s
        for i in items_here:
            seen[i] = seen.get(i, 0) + 1
    return max(seen.values(), default=1)


def measured_k_collective(decomp: FlowDecomposition) -> int:
    return measured_k([[f.items for f in fs] for fs in decomp.per_segment])


def measured_k_paths(paths: SegmentPaths, sol: LpSolution) -> int:
    units = []
    for ps in paths.per_segment:
        units.append([
            sp.items for sp in ps
            if sp.picks and Fraction(sol.values[path_var(sp.segment, sp.index)]) > 0
        ])
    return measured_k(units)
