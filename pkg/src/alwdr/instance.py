"""Broadcast-program instances for multi-antenna data retrieval.

An instance is a grid of broadcast occurrences: ``m`` channels by ``T`` time
slots, each cell holding at most one data item.  A client device with
``delta`` antennae retrieves items under two conflict rules: an antenna
downloads at most one cell per slot, and switching channels costs one slot.
A slot in which no channel broadcasts anything is *vacant*; maximal runs of
non-vacant slots form *segments*.

Weights are exact rationals (:class:`fractions.Fraction`) end to end so that
optimality and integrality checks never depend on floating-point tolerances.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple


class InstanceError(ValueError):
    """Raised when an instance violates a structural invariant."""


class InstanceFormatError(InstanceError):
    """Parse error in the instance file format, with a 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Item:
    """A data item with a non-negative rational weight."""

    id: int
    weight: Fraction


class Occurrence(NamedTuple):
    """One broadcast of an item in a (channel, slot) cell."""

    item: int
    channel: int
    slot: int


@dataclass(frozen=True)
class Instance:
    """A validated broadcast program.

    ``grid`` maps occupied (channel, slot) cells to item ids; absent cells
    are empty.  Item ids are dense 1..n.  ``antennae`` never exceeds
    ``channels`` (a schedule cannot use more antennae than channels in any
    slot).  Treat instances as immutable after construction.
    """

    items: tuple[Item, ...]
    channels: int
    slots: int
    antennae: int
    grid: dict[tuple[int, int], int]

    def __post_init__(self):
        if self.channels < 1 or self.slots < 1:
            raise InstanceError("need at least one channel and one slot")
        if self.antennae < 1:
            raise InstanceError("need at least one antenna")
        if self.antennae > self.channels:
            raise InstanceError(
                f"antennae ({self.antennae}) exceed channels ({self.channels})"
            )
        ids = [it.id for it in self.items]
        if ids != list(range(1, len(ids) + 1)):
            raise InstanceError("item ids must be dense 1..n in order")
        for it in self.items:
            if it.weight < 0:
                raise InstanceError(f"item {it.id} has negative weight")
        for (ch, sl), item_id in self.grid.items():
            if not (1 <= ch <= self.channels and 1 <= sl <= self.slots):
                raise InstanceError(f"cell ({ch},{sl}) outside the grid")
            if not (1 <= item_id <= len(self.items)):
                raise InstanceError(f"cell ({ch},{sl}) references unknown item {item_id}")

    # -- basic accessors ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.items)

    def weight_of(self, item_id: int) -> Fraction:
        return self.items[item_id - 1].weight

    def total_weight(self) -> Fraction:
        return sum((it.weight for it in self.items), Fraction(0))

    def occurrences(self) -> list[Occurrence]:
        """All occurrences sorted by (slot, channel)."""
        occ = [Occurrence(i, ch, sl) for (ch, sl), i in self.grid.items()]
        occ.sort(key=lambda o: (o.slot, o.channel))
        return occ

    def occurrences_at(self, slot: int) -> list[Occurrence]:
        return [
            Occurrence(self.grid[(ch, slot)], ch, slot)
            for ch in range(1, self.channels + 1)
            if (ch, slot) in self.grid
        ]

    def is_vacant(self, slot: int) -> bool:
        return all((ch, slot) not in self.grid for ch in range(1, self.channels + 1))

    def occurrence_count(self, item_id: int) -> int:
        return sum(1 for v in self.grid.values() if v == item_id)

    def digest(self) -> str:
        """Stable short hash of the canonical serialization."""
        return hashlib.sha256(serialize(self).encode()).hexdigest()[:12]


def conflict_free(a: Occurrence, b: Occurrence) -> bool:
    """Whether one antenna may retrieve ``a`` and then ``b``.

    ``a`` must not come after ``b``.  Same slot is always a conflict; adjacent
    slots conflict unless both occurrences share a channel (retuning to a
    different channel costs one slot).
    """
    if a.slot > b.slot:
        raise ValueError("occurrences must be given in slot order")
    if a.slot == b.slot:
        return False
    if a.channel == b.channel:
        return True
    return b.slot - a.slot >= 2


@dataclass(frozen=True)
class SegmentMap:
    """Maximal vacant-separated slot intervals and their maximum length."""

    segments: tuple[tuple[int, int], ...]  # inclusive (start, end) slot ranges
    gamma: int

    def segment_of(self, slot: int) -> int | None:
        """Index of the segment containing ``slot``, or None if vacant."""
        for idx, (lo, hi) in enumerate(self.segments):
            if lo <= slot <= hi:
                return idx
        return None


def segment_map(inst: Instance) -> SegmentMap:
    """Partition non-vacant slots into maximal vacant-separated intervals."""
    segments = []
    start = None
    for slot in range(1, inst.slots + 1):
        if inst.is_vacant(slot):
            if start is not None:
                segments.append((start, slot - 1))
                start = None
        elif start is None:
            start = slot
    if start is not None:
        segments.append((start, inst.slots))
    gamma = max((hi - lo + 1 for lo, hi in segments), default=0)
    return SegmentMap(tuple(segments), gamma)


def occurrence_assumption_holds(inst: Instance) -> bool:
    """True iff no item occurs twice within any single segment."""
    seg = segment_map(inst)
    for lo, hi in seg.segments:
        seen: set[int] = set()
        for slot in range(lo, hi + 1):
            for occ in inst.occurrences_at(slot):
                if occ.item in seen:
                    return False
                seen.add(occ.item)
    return True


# -- text and JSON serialization ------------------------------------------

_HEADER_RE = re.compile(r"^alwdr\s+(\d+)\s+(\d+)\s+(\d+)\s+(\d+)\s*$")


def _parse_weight(text: str, line: int) -> Fraction:
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            w = Fraction(int(num), int(den))
        else:
            w = Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceFormatError(f"bad weight {text!r}: {exc}", line) from None
    if w < 0:
        raise InstanceFormatError(f"negative weight {text!r}", line)
    return w


def parse_instance(text: str) -> Instance:
    """Parse the line-oriented instance format.

    Format: header ``alwdr n m T delta``, then ``item <id> <num>/<den>`` and
    ``occ <item> <channel> <slot>`` lines in any order; ``#`` starts a
    comment.  Cells not mentioned are vacant.
    """
    header = None
    item_weights: dict[int, Fraction] = {}
    occ_lines: list[tuple[int, int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            m = _HEADER_RE.match(line)
            if not m:
                raise InstanceFormatError(f"malformed header {line!r}", lineno)
            header = tuple(int(g) for g in m.groups())
            continue
        fields = line.split()
        if fields[0] == "item" and len(fields) == 3:
            try:
                item_id = int(fields[1])
            except ValueError:
                raise InstanceFormatError(f"bad item id {fields[1]!r}", lineno) from None
            if item_id in item_weights:
                raise InstanceFormatError(f"duplicate item {item_id}", lineno)
            item_weights[item_id] = _parse_weight(fields[2], lineno)
        elif fields[0] == "occ" and len(fields) == 4:
            try:
                ids = tuple(int(f) for f in fields[1:])
            except ValueError:
                raise InstanceFormatError(f"bad occurrence {line!r}", lineno) from None
            occ_lines.append((lineno, *ids))
        else:
            raise InstanceFormatError(f"unrecognized line {line!r}", lineno)
    if header is None:
        raise InstanceFormatError("missing header")
    n, channels, slots, antennae = header
    items = []
    for item_id in range(1, n + 1):
        if item_id not in item_weights:
            raise InstanceFormatError(f"item {item_id} declared in header but missing")
        items.append(Item(item_id, item_weights[item_id]))
    if len(item_weights) != n:
        extra = sorted(set(item_weights) - set(range(1, n + 1)))
        raise InstanceFormatError(f"item ids outside 1..{n}: {extra}")
    grid: dict[tuple[int, int], int] = {}
    for lineno, item_id, ch, sl in occ_lines:
        if not (1 <= item_id <= n):
            raise InstanceFormatError(f"unknown item id {item_id}", lineno)
        if not (1 <= ch <= channels):
            raise InstanceFormatError(f"channel {ch} out of range", lineno)
        if not (1 <= sl <= slots):
            raise InstanceFormatError(f"slot {sl} out of range", lineno)
        if (ch, sl) in grid:
            raise InstanceFormatError(f"duplicate cell ({ch},{sl})", lineno)
        grid[(ch, sl)] = item_id
    try:
        return Instance(tuple(items), channels, slots, antennae, grid)
    except InstanceError as exc:
        raise InstanceFormatError(str(exc)) from None


def serialize(inst: Instance) -> str:
    """Canonical text form; ``parse_instance(serialize(x)) == x``."""
    lines = [f"alwdr {inst.n} {inst.channels} {inst.slots} {inst.antennae}"]
    for it in inst.items:
        lines.append(f"item {it.id} {it.weight.numerator}/{it.weight.denominator}")
    for occ in inst.occurrences():
        lines.append(f"occ {occ.item} {occ.channel} {occ.slot}")
    return "\n".join(lines) + "\n"


def to_json(inst: Instance) -> str:
    """JSON mirror of the text format, same field names."""
    doc = {
        "n": inst.n,
        "m": inst.channels,
        "T": inst.slots,
        "delta": inst.antennae,
        "items": [
            {"id": it.id, "weight": f"{it.weight.numerator}/{it.weight.denominator}"}
            for it in inst.items
        ],
        "occ": [
            {"item": o.item, "channel": o.channel, "slot": o.slot}
            for o in inst.occurrences()
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"invalid JSON: {exc}") from None
    try:
        items = tuple(
            Item(entry["id"], _parse_weight(str(entry["weight"]), 0))
            for entry in doc["items"]
        )
        grid = {(o["channel"], o["slot"]): o["item"] for o in doc["occ"]}
        if len(grid) != len(doc["occ"]):
            raise InstanceFormatError("duplicate cell in JSON occurrences")
        return Instance(items, doc["m"], doc["T"], doc["delta"], grid)
    except (KeyError, TypeError) as exc:
        raise InstanceFormatError(f"missing or malformed field: {exc}") from None


def replace_grid(inst: Instance, grid: dict[tuple[int, int], int]) -> Instance:
    """New instance sharing items/shape but with a different occurrence grid."""
    return Instance(inst.items, inst.channels, inst.slots, inst.antennae, dict(grid))
