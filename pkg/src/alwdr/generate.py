"""Instance generators: seeded random programs, the 3-dimensional-matching
adversarial family, and the vacant-slot phase transformation."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .instance import Instance, Item, InstanceError, replace_grid


class GenerationError(InstanceError):
    """Raised for infeasible generator parameter combinations."""


@dataclass(frozen=True)
class GenParams:
    """Knobs for :func:`generate_random`.

    ``n=None`` sizes the item set to the number of occupied cells.  With
    ``single_occurrence`` every item is used at most once (exactly once when
    ``n=None``).  ``gamma_separation`` forces every ``gamma+1``-th slot
    vacant.  ``occurrence_assumption`` resamples items so that no item
    repeats within a segment.
    """

    n: int | None = None
    channels: int = 2
    slots: int = 6
    antennae: int = 1
    weight_lo: int = 1
    weight_hi: int = 9
    density: float = 0.5
    max_occurrences: int = 3
    single_occurrence: bool = False
    gamma_separation: int | None = None
    occurrence_assumption: bool = False
    min_repeat_gap: int | None = None  # slots between two occurrences of an item


def generate_random(params: GenParams, seed: int) -> Instance:
    """Deterministic seeded random instance honoring all flags exactly."""
    p = params
    if not (0 < p.density <= 1):
        raise GenerationError(f"density {p.density} outside (0, 1]")
    if p.channels < 1 or p.slots < 1 or p.antennae < 1:
        raise GenerationError("channels, slots and antennae must be positive")
    if p.max_occurrences < 1:
        raise GenerationError("max_occurrences must be positive")
    rng = random.Random(seed)

    forced_vacant = set()
    if p.gamma_separation is not None:
        if p.gamma_separation < 1:
            raise GenerationError("gamma_separation must be >= 1")
        forced_vacant = {
            s for s in range(1, p.slots + 1) if s % (p.gamma_separation + 1) == 0
        }

    cells = [
        (ch, sl)
        for sl in range(1, p.slots + 1)
        if sl not in forced_vacant
        for ch in range(1, p.channels + 1)
    ]
    occupied = [c for c in cells if rng.random() < p.density]

    if p.single_occurrence:
        n = len(occupied) if p.n is None else p.n
        if len(occupied) > n:
            raise GenerationError(
                f"single-occurrence needs >= {len(occupied)} items, have {n}"
            )
        ids = list(range(1, n + 1))
        rng.shuffle(ids)
        grid = {cell: ids[k] for k, cell in enumerate(occupied)}
    else:
        seg_bounds_pre = _segment_bounds(p.slots, forced_vacant)
        per_segment_load = {}
        for ch, sl in occupied:
            k = _segment_index(seg_bounds_pre, sl)
            per_segment_load[k] = per_segment_load.get(k, 0) + 1
        n = p.n if p.n is not None else max(
            1,
            len(occupied) if p.min_repeat_gap is not None else round(len(occupied) / 2),
            math.ceil(len(occupied) / p.max_occurrences),
            max(per_segment_load.values(), default=1) if p.occurrence_assumption else 1,
        )
        if len(occupied) > n * p.max_occurrences:
            raise GenerationError(
                f"{len(occupied)} cells cannot be filled by {n} items "
                f"with <= {p.max_occurrences} occurrences each"
            )
        seg_bounds = _segment_bounds(p.slots, forced_vacant)
        grid = {}
        # rejection-resampling of whole assignments keeps determinism
        for _ in range(200):
            counts = {i: 0 for i in range(1, n + 1)}
            seg_items: dict[int, set[int]] = {i: set() for i in range(len(seg_bounds))}
            item_slots: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
            grid = {}
            for cell in occupied:
                seg_idx = _segment_index(seg_bounds, cell[1])
                candidates = [
                    i for i in range(1, n + 1)
                    if counts[i] < p.max_occurrences
                    and not (p.occurrence_assumption and i in seg_items[seg_idx])
                    and not (p.min_repeat_gap is not None and any(
                        abs(cell[1] - s) < p.min_repeat_gap for s in item_slots[i]))
                ]
                if not candidates:
                    grid = None
                    break
                cand = rng.choice(candidates)
                counts[cand] += 1
                seg_items[seg_idx].add(cand)
                item_slots[cand].append(cell[1])
                grid[cell] = cand
            if grid is not None:
                break
        else:
            raise GenerationError("could not honor occurrence flags; relax density")

    if p.antennae > p.channels:
        raise GenerationError("antennae exceed channels")
    n = max(n, 1)
    items = tuple(
        Item(i, Fraction(rng.randint(p.weight_lo, p.weight_hi)))
        for i in range(1, n + 1)
    )
    return Instance(items, p.channels, p.slots, p.antennae, grid)


def _segment_bounds(slots: int, vacant: set[int]) -> list[tuple[int, int]]:
    bounds = []
    start = None
    for s in range(1, slots + 1):
        if s in vacant:
            if start is not None:
                bounds.append((start, s - 1))
                start = None
        elif start is None:
            start = s
    if start is not None:
        bounds.append((start, slots))
    return bounds


def _segment_index(bounds: list[tuple[int, int]], slot: int) -> int:
    for k, (lo, hi) in enumerate(bounds):
        if lo <= slot <= hi:
            return k
    return -1


def generate_from_3dm(triples: list[tuple[int, int, int]], size: int) -> Instance:
    """Instance whose single-antenna optimum is 2*size iff the triple set
    admits a perfect matching.

    Each ground element ``x_i`` owns a 3-slot block; the third slot stays
    vacant, so segments have length 2.  The l-th triple <x_i, y_j, z_k>
    places item ``y_j`` at the block's first slot and item ``z_k`` at its
    second slot, both on channel l.  All items have weight 1 and there is
    one antenna.
    """
    if size < 1:
        raise GenerationError("need a positive ground-set size")
    for t in triples:
        if len(t) != 3 or any(not (1 <= c <= size) for c in t):
            raise GenerationError(f"triple {t} has coordinates outside 1..{size}")
    multiplicity = {i: 0 for i in range(1, size + 1)}
    grid: dict[tuple[int, int], int] = {}
    for x, y, z in triples:
        multiplicity[x] += 1
        channel = multiplicity[x]
        base = 3 * (x - 1)
        grid[(channel, base + 1)] = y  # y items take ids 1..size
        grid[(channel, base + 2)] = size + z  # z items take ids size+1..2*size
    channels = max(multiplicity.values(), default=1) or 1
    items = tuple(Item(i, Fraction(1)) for i in range(1, 2 * size + 1))
    return Instance(items, channels, 3 * size, 1, grid)


FIG5_TRIPLES = [
    (1, 1, 1),
    (1, 2, 1),
    (1, 3, 2),
    (1, 3, 1),
    (2, 1, 2),
    (3, 2, 3),
    (3, 3, 3),
]


def has_perfect_matching(triples: list[tuple[int, int, int]], size: int) -> bool:
    """Exhaustive 3DM check, independent of the retrieval machinery."""
    by_x: dict[int, list[tuple[int, int, int]]] = {i: [] for i in range(1, size + 1)}
    for t in triples:
        by_x[t[0]].append(t)

    def extend(i: int, used_y: set[int], used_z: set[int]) -> bool:
        if i > size:
            return True
        for _, y, z in by_x[i]:
            if y not in used_y and z not in used_z:
                if extend(i + 1, used_y | {y}, used_z | {z}):
                    return True
        return False

    return extend(1, set(), set())


def insert_vacant_slots(inst: Instance, eps: Fraction, phase: int) -> Instance:
    """Vacate every slot ``phase + j*ceil(1/eps)`` for j >= 1.

    The result is gamma-separated with gamma <= ceil(1/eps).  Phases
    1..ceil(1/eps) partition the removable slots, so any schedule loses its
    items in exactly one phase.
    """
    if not (0 < eps <= 1):
        raise InstanceError(f"eps {eps} outside (0, 1]")
    period = math.ceil(Fraction(1) / Fraction(eps))
    if not (1 <= phase <= period):
        raise InstanceError(f"phase {phase} outside 1..{period}")
    vacated = set()
    s = phase + period
    while s <= inst.slots:
        vacated.add(s)
        s += period
    grid = {(ch, sl): i for (ch, sl), i in inst.grid.items() if sl not in vacated}
    return replace_grid(inst, grid)


def vacated_slots(inst: Instance, eps: Fraction, phase: int) -> set[int]:
    period = math.ceil(Fraction(1) / Fraction(eps))
    return {
        s
        for s in range(1, inst.slots + 1)
        if s >= phase + period and (s - phase) % period == 0
    }
