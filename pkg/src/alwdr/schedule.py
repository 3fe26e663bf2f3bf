"""Retrieval schedules: per-antenna pick sequences and their serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .instance import Instance, Occurrence


@dataclass(frozen=True)
class Schedule:
    """Ordered occurrence picks for each antenna.

    ``weight`` counts every distinct item once, regardless of how many
    antennae or segments retrieved it.
    """

    antennae: tuple[tuple[Occurrence, ...], ...]
    weight: Fraction

    @property
    def items(self) -> frozenset[int]:
        return frozenset(o.item for picks in self.antennae for o in picks)

    def pick_count(self) -> int:
        return sum(len(picks) for picks in self.antennae)


def make_schedule(inst: Instance, per_antenna: list[list[Occurrence]]) -> Schedule:
    """Build a schedule, sorting picks by slot and computing distinct weight."""
    rows = tuple(
        tuple(sorted(picks, key=lambda o: (o.slot, o.channel))) for picks in per_antenna
    )
    items = {o.item for picks in rows for o in picks}
    weight = sum((inst.weight_of(i) for i in items), Fraction(0))
    return Schedule(rows, weight)


def empty_schedule(delta: int) -> Schedule:
    return Schedule(tuple(() for _ in range(delta)), Fraction(0))


def serialize_schedule(s: Schedule) -> str:
    """Line format: ``antenna <a>: (item,channel,slot) ...``."""
    lines = []
    for idx, picks in enumerate(s.antennae, start=1):
        cells = " ".join(f"({o.item},{o.channel},{o.slot})" for o in picks)
        lines.append(f"antenna {idx}: {cells}".rstrip())
    lines.append(f"weight {s.weight.numerator}/{s.weight.denominator}")
    return "\n".join(lines) + "\n"


def schedule_to_json(s: Schedule) -> str:
    doc = {
        "antennae": [
            [{"item": o.item, "channel": o.channel, "slot": o.slot} for o in picks]
            for picks in s.antennae
        ],
        "weight": f"{s.weight.numerator}/{s.weight.denominator}",
    }
    return json.dumps(doc, indent=2) + "\n"
