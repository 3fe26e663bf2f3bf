"""Ground-truth solvers and schedule validation.

The brute-force search sweeps slots with a dominance-pruned frontier over
(per-antenna retune state, covered item set); it is exact and deterministic
at desk scale.  The parameterized exact route builds the whole-horizon
improved graph, solves the penalty LP with exact rationals and insists on an
integral vertex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .dag import (CapExceeded, build_improved_dag, build_refined_dag,
                  whole_horizon_segments)
from .formulate import build_dual_lp, retrieved_weight, values_by_edge
from .instance import Instance, Occurrence, conflict_free
from .lp import is_integral, solve_basic_optimal
from .schedule import Schedule, make_schedule


class IntegralityError(RuntimeError):
    """The penalty LP returned a fractional basic optimum: a construction bug."""


@dataclass(frozen=True)
class OracleResult:
    optimum: Fraction
    witness: Schedule
    method: str
    states_explored: int = 0
    optimal_count: int | None = None


def validate_schedule(inst: Instance, s: Schedule) -> str | None:
    """First violation as text with coordinates, or None when valid."""
    used_cells: set[tuple[int, int]] = set()
    for a, picks in enumerate(s.antennae, start=1):
        prev: Occurrence | None = None
        for o in picks:
            if not (1 <= o.channel <= inst.channels and 1 <= o.slot <= inst.slots):
                return f"antenna {a}: cell ({o.channel},{o.slot}) outside the grid"
            if inst.grid.get((o.channel, o.slot)) != o.item:
                return (f"antenna {a}: item {o.item} is not broadcast at "
                        f"({o.channel},{o.slot})")
            if prev is not None:
                if o.slot <= prev.slot:
                    return (f"antenna {a}: slots not increasing at "
                            f"({o.channel},{o.slot})")
                if not conflict_free(prev, o):
                    return (f"antenna {a}: conflict between ({prev.channel},"
                            f"{prev.slot}) and ({o.channel},{o.slot})")
            cell = (o.channel, o.slot)
            if cell in used_cells:
                return f"two antennae share cell {cell}"
            used_cells.add(cell)
            prev = o
    items = {o.item for picks in s.antennae for o in picks}
    expect = sum((inst.weight_of(i) for i in items), Fraction(0))
    if expect != s.weight:
        return f"schedule weight {s.weight} != distinct-item weight {expect}"
    return None


def enumerate_sequences(inst: Instance, cap: int = 2000000):
    """All non-empty valid single-antenna pick sequences (items may repeat)."""
    occs = inst.occurrences()
    count = 0

    def extend(prefix: tuple[Occurrence, ...]):
        nonlocal count
        last = prefix[-1]
        for o in occs:
            if o.slot <= last.slot or not conflict_free(last, o):
                continue
            count += 1
            if count > cap:
                raise CapExceeded(f"more than {cap} sequences")
            yield prefix + (o,)
            yield from extend(prefix + (o,))

    for o in occs:
        count += 1
        if count > cap:
            raise CapExceeded(f"more than {cap} sequences")
        yield (o,)
        yield from extend((o,))


def brute_force_optimal(inst: Instance, delta: int | None = None,
                        max_states: int = 2000000) -> OracleResult:
    """Exact maximum distinct-item weight over all valid schedules.

    Frontier search over slots.  Entries with a covered set contained in
    another entry under the same antenna states are dominated and dropped;
    coverage monotonicity makes that safe.  The witness is the first-found
    pick assignment among the optimal entries under a fixed exploration
    order, so reruns reproduce it bit for bit.
    """
    if delta is None:
        delta = inst.antennae
    idle_state = (0, False)  # channel 0 = no pick yet
    start_states = tuple([idle_state] * delta)
    start_picks = tuple([()] * delta)
    # frontier: states -> {covered mask -> per-antenna picks}
    frontier: dict[tuple, dict[int, tuple]] = {start_states: {0: start_picks}}
    explored = 0

    for slot in range(1, inst.slots + 1):
        occs = inst.occurrences_at(slot)
        nxt: dict[tuple, dict[int, tuple]] = {}
        for states, entries in frontier.items():
            options: list[list[Occurrence | None]] = []
            for ch, recent in states:
                opts: list[Occurrence | None] = [None]
                for o in occs:
                    if ch == 0 or o.channel == ch or not recent:
                        opts.append(o)
                options.append(opts)
            for combo in itertools.product(*options):
                picked = [o for o in combo if o is not None]
                if len({(o.channel, o.slot) for o in picked}) != len(picked):
                    continue
                new_states = tuple(
                    (o.channel, True) if o is not None else (ch, False)
                    for o, (ch, recent) in zip(combo, states)
                )
                for mask, picks in entries.items():
                    new_mask = mask
                    for o in picked:
                        new_mask |= 1 << (o.item - 1)
                    new_picks = tuple(
                        row + (o,) if o is not None else row
                        for row, o in zip(picks, combo)
                    )
                    # canonical antenna order keeps exchangeable antennae merged
                    paired = sorted(zip(new_states, new_picks))
                    key = tuple(st for st, _ in paired)
                    val = tuple(pk for _, pk in paired)
                    bucket = nxt.setdefault(key, {})
                    if new_mask not in bucket:
                        bucket[new_mask] = val
                    explored += 1
                    if explored > max_states:
                        raise CapExceeded(f"oracle frontier exceeded {max_states}")
        # dominance: drop masks strictly contained in another mask
        for key, bucket in nxt.items():
            masks = sorted(bucket, key=lambda m: (-bin(m).count("1"), m))
            keep: dict[int, tuple] = {}
            for m in masks:
                if any(m != k and (m & k) == m for k in keep):
                    continue
                keep[m] = bucket[m]
            nxt[key] = keep
        frontier = nxt

    weights = [it.weight for it in inst.items]

    def mask_weight(mask: int) -> Fraction:
        total = Fraction(0)
        i = 0
        while mask:
            if mask & 1:
                total += weights[i]
            mask >>= 1
            i += 1
        return total

    best = Fraction(0)
    best_picks = start_picks
    for bucket in frontier.values():
        for mask, picks in bucket.items():
            w = mask_weight(mask)
            if w > best or (w == best and picks < best_picks):
                best = w
                best_picks = picks
    witness = make_schedule(inst, [list(row) for row in best_picks])
    return OracleResult(best, witness, "frontier", explored)


def fpt_parameter(inst: Instance) -> int:
    """Number of slots holding an item that occurs again in a later slot."""
    slots_of: dict[int, list[int]] = {}
    for (ch, sl), item in inst.grid.items():
        slots_of.setdefault(item, []).append(sl)
    flagged: set[int] = set()
    for item, slots in slots_of.items():
        last = max(slots)
        for s in slots:
            if s < last:
                flagged.add(s)
    return len(flagged)


def fpt_exact(inst: Instance, delta: int | None = None,
              edge_cap: int = 200000) -> OracleResult:
    """Exact optimum via the whole-horizon improved graph and penalty LP.

    The basic optimum of the penalty LP on the deduplicated graph must be
    integral; a fractional vertex raises :class:`IntegralityError` instead
    of silently rounding.
    """
    if delta is None:
        delta = inst.antennae
    refined = build_refined_dag(inst)
    improved = build_improved_dag(refined, whole_horizon_segments(inst), edge_cap)
    lp = build_dual_lp(improved, delta)
    sol = solve_basic_optimal(lp, backend="rational")
    if sol.status != "optimal":
        raise IntegralityError(f"penalty LP is {sol.status}")
    if not is_integral(sol, Fraction(0)):
        raise IntegralityError("penalty LP basic optimum is fractional")
    optimum = retrieved_weight(inst, sol.objective)

    values = values_by_edge(improved, sol)
    witness = _paths_from_integral_flow(improved, values, delta, inst)
    if witness.weight != optimum:
        raise IntegralityError(
            f"witness weight {witness.weight} disagrees with optimum {optimum}"
        )
    return OracleResult(optimum, witness, "fpt", len(improved.edges))


def _paths_from_integral_flow(g, values: dict[int, Fraction], delta: int,
                              inst: Instance) -> Schedule:
    residual = {eid: int(v) for eid, v in values.items() if v > 0}
    per_antenna: list[list[Occurrence]] = []
    for _ in range(delta):
        if not any(residual.get(e.id) for e in g.out_edges[g.source]):
            per_antenna.append([])  # this antenna idles
            continue
        picks: list[Occurrence] = []
        v = g.source
        while v != g.sink:
            step = next(e for e in sorted(g.out_edges[v], key=lambda e: e.id)
                        if residual.get(e.id))
            residual[step.id] -= 1
            if step.kind == "occurrence":
                picks.append(Occurrence(step.item, step.channel, step.slot))
            v = step.head
        per_antenna.append(picks)
    return make_schedule(inst, per_antenna)
