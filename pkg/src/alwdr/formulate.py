"""LP formulations over the auxiliary graphs.

Three relaxations of the same retrieval problem:

* edge form (basic graph): flow variables per edge, per-item caps;
* path form (gamma-separated instances): one variable per within-segment
  retrieval sequence, per-segment cardinality rows, per-item caps;
* penalty form (refined/improved graphs): minimize the priced weight of
  items the flow fails to cover; retrieved weight is the total item weight
  minus the optimum.

Every antenna the flow cannot use is absorbed by explicit unit idle
variables, so the formulations stay feasible on sparse instances (an
antenna is always allowed to retrieve nothing).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .dag import CapExceeded, Dag
from .instance import Instance, Occurrence, SegmentMap, conflict_free
from .lp import LpProblem, LpSolution


def edge_var(edge_id: int) -> str:
    return f"x{edge_id}"


def values_by_edge(g: Dag, sol: LpSolution) -> dict[int, Fraction]:
    return {e.id: sol.values[edge_var(e.id)] for e in g.edges}


def build_edge_lp(g: Dag, delta: int) -> LpProblem:
    """Maximum-weight flow of value ``delta`` with per-item caps."""
    if g.variant != "basic":
        raise ValueError("edge formulation expects the basic graph")
    p = LpProblem(f"edge_lp_d{delta}", "max")
    for e in g.edges:
        p.add_var(edge_var(e.id), 0, 1, obj=e.weight)
    idles = [p.add_var(f"idle_{a}", 0, 1) for a in range(1, delta + 1)]

    for v in g.vertices:
        if v.index in (g.source, g.sink):
            continue
        coeffs: dict[str, Fraction] = {}
        for e in g.out_edges[v.index]:
            coeffs[edge_var(e.id)] = coeffs.get(edge_var(e.id), 0) + 1
        for e in g.in_edges[v.index]:
            coeffs[edge_var(e.id)] = coeffs.get(edge_var(e.id), 0) - 1
        if coeffs:
            p.add_constraint(coeffs, "=", 0, name=f"flow_v{v.index}")
    source_coeffs = {edge_var(e.id): Fraction(1) for e in g.out_edges[g.source]}
    for idle in idles:
        source_coeffs[idle] = Fraction(1)
    p.add_constraint(source_coeffs, "=", delta, name="flow_source")

    groups: dict[int, list[int]] = {}
    for e in g.occurrence_edges():
        groups.setdefault(e.item, []).append(e.id)
    for item, eids in sorted(groups.items()):
        if len(eids) >= 2:
            p.add_constraint({edge_var(i): Fraction(1) for i in eids}, "<=", 1,
                             name=f"item_{item}")
    return p


def build_dual_lp(g: Dag, delta: int) -> LpProblem:
    """Minimize the priced weight of uncovered items over a unit-``delta``
    flow through the refined or improved graph and its virtual chain."""
    if g.variant not in ("refined", "improved"):
        raise ValueError("penalty formulation expects a refined or improved graph")
    p = LpProblem(f"dual_lp_d{delta}", "min")
    for e in g.edges:
        ub = delta if e.kind == "virtual_free" else 1
        obj = e.cost * e.weight if e.cost else 0
        p.add_var(edge_var(e.id), 0, ub, obj=obj)
    idles = [p.add_var(f"idle_{a}", 0, 1) for a in range(1, delta + 1)]

    for v in g.vertices:
        if v.index in (g.source, g.sink):
            continue
        coeffs: dict[str, Fraction] = {}
        for e in g.out_edges[v.index]:
            coeffs[edge_var(e.id)] = coeffs.get(edge_var(e.id), 0) + 1
        for e in g.in_edges[v.index]:
            coeffs[edge_var(e.id)] = coeffs.get(edge_var(e.id), 0) - 1
        if v.index == g.junction:
            for idle in idles:
                coeffs[idle] = coeffs.get(idle, 0) - 1  # idle flow joins at p
        if coeffs:
            p.add_constraint(coeffs, "=", 0, name=f"flow_v{v.index}")
    source_coeffs = {edge_var(e.id): Fraction(1) for e in g.out_edges[g.source]}
    for idle in idles:
        source_coeffs[idle] = Fraction(1)
    p.add_constraint(source_coeffs, "=", delta, name="flow_source")

    real: dict[int, list[int]] = {}
    penalty: dict[int, list[int]] = {}
    for e in g.edges:
        if e.kind == "occurrence":
            real.setdefault(e.item, []).append(e.id)
        elif e.kind == "virtual_penalty":
            penalty.setdefault(e.item, []).append(e.id)
    for item in sorted(penalty):
        coeffs = {edge_var(i): Fraction(1) for i in real.get(item, [])}
        for i in penalty[item]:
            coeffs[edge_var(i)] = Fraction(1)
        p.add_constraint(coeffs, ">=", 1, name=f"cover_{item}")
    return p


def retrieved_weight(inst: Instance, dual_objective: Fraction) -> Fraction:
    """Total item weight minus the penalty optimum."""
    return inst.total_weight() - dual_objective


@dataclass(frozen=True)
class SegmentPath:
    segment: int
    index: int
    picks: tuple[Occurrence, ...]
    weight: Fraction

    @property
    def items(self) -> frozenset[int]:
        return frozenset(o.item for o in self.picks)


@dataclass(frozen=True)
class SegmentPaths:
    per_segment: tuple[tuple[SegmentPath, ...], ...]
    gamma: int

    def path_count(self) -> int:
        return sum(len(ps) for ps in self.per_segment)


def enumerate_segment_paths(inst: Instance, seg: SegmentMap,
                            cap: int = 200000) -> SegmentPaths:
    """Exhaustive within-segment retrieval sequences, one item use apiece.

    Every segment also lists the empty sequence, so a cardinality row of
    ``delta`` can always be met by idle antennae.
    """
    if seg.segments and inst.channels ** max(1, seg.gamma) > cap:
        raise CapExceeded(
            f"{inst.channels}^{seg.gamma} possible picks exceed the cap {cap}"
        )
    total = 0
    per_segment: list[tuple[SegmentPath, ...]] = []
    for h, (lo, hi) in enumerate(seg.segments):
        occs = [o for slot in range(lo, hi + 1) for o in inst.occurrences_at(slot)]
        occs.sort(key=lambda o: (o.slot, o.channel))
        found: list[tuple[Occurrence, ...]] = [()]

        def extend(prefix: tuple[Occurrence, ...], used: frozenset[int]):
            nonlocal total
            last = prefix[-1] if prefix else None
            for o in occs:
                if last is not None and o.slot <= last.slot:
                    continue
                if last is not None and not conflict_free(last, o):
                    continue
                if o.item in used:
                    continue
                seq = prefix + (o,)
                found.append(seq)
                if len(found) + total > cap:
                    raise CapExceeded(f"more than {cap} segment paths")
                extend(seq, used | {o.item})

        extend((), frozenset())
        total += len(found)
        paths = tuple(
            SegmentPath(h, idx, picks,
                        sum((inst.weight_of(o.item) for o in picks), Fraction(0)))
            for idx, picks in enumerate(found)
        )
        per_segment.append(paths)
    return SegmentPaths(tuple(per_segment), seg.gamma)


def path_var(segment: int, index: int) -> str:
    return f"p{segment}_{index}"


def build_path_lp(paths: SegmentPaths, delta: int) -> LpProblem:
    """One variable per (segment, sequence); per-segment sum equals delta."""
    p = LpProblem(f"path_lp_d{delta}", "max")
    for ps in paths.per_segment:
        for sp in ps:
            ub = delta if not sp.picks else 1  # idle antennae share the empty path
            p.add_var(path_var(sp.segment, sp.index), 0, ub, obj=sp.weight)
    for h, ps in enumerate(paths.per_segment):
        p.add_constraint(
            {path_var(h, sp.index): Fraction(1) for sp in ps}, "=", delta,
            name=f"seg_{h}",
        )
    by_item: dict[int, list[str]] = {}
    for ps in paths.per_segment:
        for sp in ps:
            for item in sp.items:
                by_item.setdefault(item, []).append(path_var(sp.segment, sp.index))
    for item in sorted(by_item):
        vars_ = by_item[item]
        if len(vars_) >= 2:
            p.add_constraint({v: Fraction(1) for v in vars_}, "<=", 1,
                             name=f"item_{item}")
    return p


def compute_ratio_bound(K: int) -> Fraction:
    """Exact value of 1 - ((K-1)/K)**K, the per-item coverage guarantee when
    an item's fractional mass is spread over K rounding units.

    Decreases strictly in K and converges to 1 - 1/e from above, so the
    limiting value is the worst case over all K.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    return 1 - Fraction(K - 1, K) ** K


# 1 - 1/e truncated to 16 decimal digits: a certified lower bound on the
# limiting coverage ratio, accurate to well beyond 10 digits.
ONE_MINUS_1_OVER_E = Fraction(6321205588285576, 10 ** 16)
