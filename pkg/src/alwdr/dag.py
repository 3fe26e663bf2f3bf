"""Layered auxiliary DAGs for retrieval scheduling.

Three constructions over the same broadcast grid:

* ``basic`` — one tail/head vertex pair per occurrence, a link edge for every
  conflict-free ordered pair, source to every tail, every head to sink.
  Single-antenna retrieval sequences correspond exactly to source-sink paths.
* ``refined`` — each head links only to the *nearest* conflict-free tail per
  channel, the source only to the earliest tail per channel, and channel-last
  heads feed a junction vertex ahead of a virtual chain whose costed edges
  price items a flow fails to cover.  Much smaller, but paths may be forced
  through extra occurrences (supersets of the intended sequence).
* ``improved`` — the refined graph with segment-local vertex duplication
  indexed by the subset of multiply-occurring items already traversed, so no
  path can collect the same item twice inside a segment; second arrivals are
  rerouted around the occurrence edge instead.

All builders are pure and finish with a layering check, so returned graphs
are guaranteed acyclic and slot-ordered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .instance import Instance, Occurrence, SegmentMap, conflict_free, segment_map
from .schedule import Schedule, make_schedule


class DagError(ValueError):
    """Raised when a construction or path violates a graph invariant."""


class CapExceeded(RuntimeError):
    """A guarded construction or search outgrew its configured cap."""


ZERO = Fraction(0)

_KIND_RANK = {
    "occurrence": 0,
    "link": 1,
    "source": 2,
    "sink": 3,
    "virtual_penalty": 4,
    "virtual_free": 5,
}


@dataclass(frozen=True)
class Vertex:
    index: int
    role: str  # source | sink | junction | tail | head | chain_left | chain_right
    channel: int | None = None
    slot: int | None = None
    item: int | None = None
    copy: tuple[int, ...] | None = None  # subset tag in the improved variant
    stage: int | None = None  # chain position


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int
    kind: str
    weight: Fraction = ZERO
    cost: Fraction = ZERO
    item: int | None = None
    channel: int | None = None
    slot: int | None = None
    segment: int | None = None


@dataclass
class Dag:
    variant: str  # basic | refined | improved
    vertices: list[Vertex]
    edges: list[Edge]
    source: int
    sink: int
    junction: int | None = None
    out_edges: dict[int, list[Edge]] = field(default_factory=dict)
    in_edges: dict[int, list[Edge]] = field(default_factory=dict)

    def occurrence_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.kind == "occurrence"]

    def edge(self, edge_id: int) -> Edge:
        return self.edges[edge_id]


def _layer_key(v: Vertex, slots: int) -> tuple[int, int]:
    if v.role == "source":
        return (0, 0)
    if v.role == "tail":
        return (v.slot, 1)
    if v.role == "head":
        return (v.slot, 2)
    if v.role == "junction":
        return (slots + 1, 0)
    if v.role in ("chain_left", "chain_right"):
        return (slots + 1 + v.stage, 0)
    return (1 << 60, 0)  # sink follows every slot and chain stage


def _finish(dag: Dag, slots: int) -> Dag:
    """Sort edges into deterministic ids, index adjacency, check layering."""
    def edge_key(e: Edge):
        return (
            e.slot if e.slot is not None else -1,
            e.channel if e.channel is not None else -1,
            _KIND_RANK[e.kind],
            dag.vertices[e.tail].copy or (),
            dag.vertices[e.head].copy or (),
            _layer_key(dag.vertices[e.head], slots),
            e.tail,
            e.head,
        )

    ordered = sorted(dag.edges, key=edge_key)
    dag.edges = [
        Edge(i, e.tail, e.head, e.kind, e.weight, e.cost, e.item, e.channel,
             e.slot, e.segment)
        for i, e in enumerate(ordered)
    ]
    dag.out_edges = {v.index: [] for v in dag.vertices}
    dag.in_edges = {v.index: [] for v in dag.vertices}
    for e in dag.edges:
        dag.out_edges[e.tail].append(e)
        dag.in_edges[e.head].append(e)
    for e in dag.edges:
        lo = _layer_key(dag.vertices[e.tail], slots)
        hi = _layer_key(dag.vertices[e.head], slots)
        if lo >= hi:
            raise DagError(f"edge {e.id} does not advance the layering: {lo} -> {hi}")
    return dag


def build_basic_dag(inst: Instance) -> Dag:
    """Full pairwise construction: 2*(#occurrences)+2 vertices."""
    seg = _occurrence_segments(inst)
    vertices = [Vertex(0, "source")]
    tails: dict[Occurrence, int] = {}
    heads: dict[Occurrence, int] = {}
    occs = inst.occurrences()
    for o in occs:
        tails[o] = len(vertices)
        vertices.append(Vertex(len(vertices), "tail", o.channel, o.slot, o.item))
        heads[o] = len(vertices)
        vertices.append(Vertex(len(vertices), "head", o.channel, o.slot, o.item))
    sink = len(vertices)
    vertices.append(Vertex(sink, "sink"))

    edges = []
    for o in occs:
        edges.append(Edge(-1, tails[o], heads[o], "occurrence",
                          inst.weight_of(o.item), ZERO, o.item, o.channel, o.slot,
                          seg[o.slot]))
        edges.append(Edge(-1, 0, tails[o], "source", channel=o.channel, slot=0))
        edges.append(Edge(-1, heads[o], sink, "sink", channel=o.channel, slot=o.slot))
    for a in occs:
        for b in occs:
            if b.slot > a.slot and conflict_free(a, b):
                seg_tag = seg[a.slot] if seg[a.slot] == seg[b.slot] else None
                edges.append(Edge(-1, heads[a], tails[b], "link",
                                  channel=a.channel, slot=a.slot, segment=seg_tag))
    dag = Dag("basic", vertices, edges, 0, sink)
    return _finish(dag, inst.slots)


def _occurrence_segments(inst: Instance) -> dict[int, int | None]:
    smap = segment_map(inst)
    return {slot: smap.segment_of(slot) for slot in range(1, inst.slots + 1)}


def build_refined_dag(inst: Instance) -> Dag:
    """Nearest-successor construction plus the costed virtual chain."""
    seg = _occurrence_segments(inst)
    vertices = [Vertex(0, "source")]
    tails: dict[Occurrence, int] = {}
    heads: dict[Occurrence, int] = {}
    occs = inst.occurrences()
    by_channel: dict[int, list[Occurrence]] = {}
    for o in occs:
        tails[o] = len(vertices)
        vertices.append(Vertex(len(vertices), "tail", o.channel, o.slot, o.item))
        heads[o] = len(vertices)
        vertices.append(Vertex(len(vertices), "head", o.channel, o.slot, o.item))
        by_channel.setdefault(o.channel, []).append(o)

    junction = len(vertices)
    vertices.append(Vertex(junction, "junction"))
    n = inst.n
    chain_left = {}
    chain_right = {}
    for i in range(1, n + 1):
        chain_left[i] = len(vertices)
        vertices.append(Vertex(len(vertices), "chain_left", item=i, stage=i))
        chain_right[i] = len(vertices)
        vertices.append(Vertex(len(vertices), "chain_right", item=i, stage=i))
    sink = len(vertices)
    vertices.append(Vertex(sink, "sink"))

    edges = []
    for o in occs:
        edges.append(Edge(-1, tails[o], heads[o], "occurrence",
                          inst.weight_of(o.item), ZERO, o.item, o.channel, o.slot,
                          seg[o.slot]))
    for ch, col in by_channel.items():
        first, last = col[0], col[-1]
        edges.append(Edge(-1, 0, tails[first], "source", channel=ch, slot=0))
        edges.append(Edge(-1, heads[last], junction, "sink", channel=ch, slot=last.slot))
    for o in occs:
        successors = _nearest_successors(o, by_channel)
        for target in successors:
            seg_tag = seg[o.slot] if seg[o.slot] == seg[target.slot] else None
            edges.append(Edge(-1, heads[o], tails[target], "link",
                              channel=o.channel, slot=o.slot, segment=seg_tag))

    def stage_next(i: int) -> tuple[int, int]:
        if i == n:
            return sink, sink
        return chain_left[i + 1], chain_right[i + 1]

    if n == 0:
        edges.append(Edge(-1, junction, sink, "virtual_free", slot=inst.slots + 1))
    else:
        edges.append(Edge(-1, junction, chain_left[1], "virtual_free",
                          slot=inst.slots + 1))
        edges.append(Edge(-1, junction, chain_right[1], "virtual_free",
                          slot=inst.slots + 1))
        for i in range(1, n + 1):
            nxt_left, nxt_right = stage_next(i)
            w = inst.weight_of(i)
            slot_tag = inst.slots + 1 + i
            edges.append(Edge(-1, chain_left[i], nxt_left, "virtual_penalty",
                              w, Fraction(1), i, slot=slot_tag))
            edges.append(Edge(-1, chain_left[i], nxt_right, "virtual_penalty",
                              w, Fraction(1), i, slot=slot_tag))
            edges.append(Edge(-1, chain_right[i], nxt_right, "virtual_free",
                              slot=slot_tag))
            edges.append(Edge(-1, chain_right[i], nxt_left, "virtual_free",
                              slot=slot_tag))
    dag = Dag("refined", vertices, edges, 0, sink, junction)
    return _finish(dag, inst.slots)


def _nearest_successors(o: Occurrence, by_channel: dict[int, list[Occurrence]]):
    """Nearest conflict-free tail in each channel: the next same-channel
    occurrence, and in every other channel the first occurrence past the
    switching gap."""
    out = []
    for ch, col in sorted(by_channel.items()):
        if ch == o.channel:
            nxt = next((c for c in col if c.slot > o.slot), None)
        else:
            nxt = next((c for c in col if c.slot > o.slot + 1), None)
        if nxt is not None:
            out.append(nxt)
    return out


def build_improved_dag(g: Dag, seg: SegmentMap, edge_cap: int | None = 200000) -> Dag:
    """Duplicate each segment by traversed-multi-item subsets.

    Within a segment, items occurring more than once become state: a path
    that already collected item ``i`` has its later edges into ``i``-tails
    rerouted straight to the matching head, so no path picks an item twice
    inside the segment.  Subset state resets at segment boundaries.  Pass a
    single whole-horizon segment to get global per-path item uniqueness.
    """
    if g.variant != "refined":
        raise DagError("improved construction expects a refined graph")

    multi: dict[int, set[int]] = {}
    for e in g.edges:
        if e.kind != "occurrence":
            continue
        h = seg.segment_of(e.slot)
        if h is None:
            raise DagError(f"occurrence at slot {e.slot} outside every segment")
        multi.setdefault(h, set())
    counts: dict[tuple[int, int], int] = {}
    for e in g.edges:
        if e.kind == "occurrence":
            h = seg.segment_of(e.slot)
            counts[(h, e.item)] = counts.get((h, e.item), 0) + 1
    for (h, item), c in counts.items():
        if c >= 2:
            multi[h].add(item)

    def seg_of_vertex(v: Vertex) -> int | None:
        if v.role in ("tail", "head"):
            return seg.segment_of(v.slot)
        return None

    order = sorted(g.vertices, key=lambda v: (_layer_key(v, _max_slot(g)), v.index))
    live: dict[int, set[frozenset[int]]] = {g.source: {frozenset()}}
    new_vertices: list[Vertex] = []
    vmap: dict[tuple[int, frozenset[int]], int] = {}

    def copy_vertex(orig: Vertex, subset: frozenset[int]) -> int:
        key = (orig.index, subset)
        if key not in vmap:
            idx = len(new_vertices)
            vmap[key] = idx
            new_vertices.append(Vertex(idx, orig.role, orig.channel, orig.slot,
                                       orig.item, tuple(sorted(subset)), orig.stage))
        return vmap[key]

    new_edges: list[Edge] = []

    def add_edge(e: Edge, tail_idx: int, head_idx: int):
        new_edges.append(Edge(-1, tail_idx, head_idx, e.kind, e.weight, e.cost,
                              e.item, e.channel, e.slot, e.segment))
        if edge_cap is not None and len(new_edges) > edge_cap:
            raise CapExceeded(f"improved graph exceeds {edge_cap} edges")

    heads_for_tail = {}
    for e in g.edges:
        if e.kind == "occurrence":
            heads_for_tail[e.tail] = e

    for orig in order:
        subsets = live.get(orig.index)
        if not subsets:
            continue
        h_a = seg_of_vertex(orig)
        for subset in sorted(subsets, key=sorted):
            a_idx = copy_vertex(orig, subset)
            for e in g.out_edges[orig.index]:
                target = g.vertices[e.head]
                h_b = seg_of_vertex(target)
                if e.kind == "occurrence":
                    item_set = multi.get(h_b, set())
                    new_subset = subset | {e.item} if e.item in item_set else subset
                    b_idx = copy_vertex(target, new_subset)
                    add_edge(e, a_idx, b_idx)
                    live.setdefault(target.index, set()).add(new_subset)
                    continue
                new_subset = subset if (h_b is not None and h_b == h_a) else frozenset()
                if target.role == "tail" and target.item in new_subset:
                    # already collected: reroute around the occurrence edge
                    occ_edge = heads_for_tail[target.index]
                    head_v = g.vertices[occ_edge.head]
                    b_idx = copy_vertex(head_v, new_subset)
                    add_edge(e, a_idx, b_idx)
                    live.setdefault(head_v.index, set()).add(new_subset)
                else:
                    b_idx = copy_vertex(target, new_subset)
                    add_edge(e, a_idx, b_idx)
                    live.setdefault(target.index, set()).add(new_subset)

    src = vmap[(g.source, frozenset())]
    snk = vmap.get((g.sink, frozenset()))
    if snk is None:
        snk = copy_vertex(g.vertices[g.sink], frozenset())
    junc = vmap.get((g.junction, frozenset())) if g.junction is not None else None
    dag = Dag("improved", new_vertices, new_edges, src, snk, junc)
    return _finish(dag, _max_slot(g))


def _max_slot(g: Dag) -> int:
    return max((v.slot for v in g.vertices if v.slot is not None), default=1)


def whole_horizon_segments(inst: Instance) -> SegmentMap:
    """One segment spanning all slots: duplication state never resets."""
    return SegmentMap(((1, inst.slots),), inst.slots)


def path_to_schedule(g: Dag, paths: list[list[int]], inst: Instance) -> Schedule:
    """Translate edge-disjoint source-sink paths into a retrieval schedule.

    Defensive: re-checks path chaining, edge-disjointness, cell-disjointness
    and pairwise conflict-freeness, so builder bugs surface here rather than
    in downstream weights.
    """
    seen_edges: set[int] = set()
    seen_cells: set[tuple[int, int]] = set()
    per_antenna: list[list[Occurrence]] = []
    for path in paths:
        picks: list[Occurrence] = []
        prev_head = None
        for eid in path:
            e = g.edge(eid)
            if eid in seen_edges:
                raise DagError(f"edge {eid} used by two paths")
            seen_edges.add(eid)
            if prev_head is not None and e.tail != prev_head:
                raise DagError(f"edge {eid} does not continue the path")
            prev_head = e.head
            if e.kind == "occurrence":
                picks.append(Occurrence(e.item, e.channel, e.slot))
        for a, b in zip(picks, picks[1:]):
            if not conflict_free(a, b):
                raise DagError(f"path violates conflict rules between {a} and {b}")
        for o in picks:
            cell = (o.channel, o.slot)
            if cell in seen_cells:
                raise DagError(f"two antennae share cell {cell}")
            seen_cells.add(cell)
        per_antenna.append(picks)
    return make_schedule(inst, per_antenna)


def enumerate_st_paths(g: Dag, target: int | None = None,
                       limit: int = 500000) -> Iterator[tuple[int, ...]]:
    """All source-to-target paths as edge-id tuples, in edge-id DFS order."""
    if target is None:
        target = g.sink
    count = 0
    stack: list[int] = []

    def walk(v: int) -> Iterator[tuple[int, ...]]:
        nonlocal count
        if v == target:
            count += 1
            if count > limit:
                raise CapExceeded(f"more than {limit} paths")
            yield tuple(stack)
            return
        for e in sorted(g.out_edges[v], key=lambda e: e.id):
            stack.append(e.id)
            yield from walk(e.head)
            stack.pop()

    yield from walk(g.source)


def path_items(g: Dag, path: tuple[int, ...]) -> list[int]:
    """Items of the occurrence edges along a path, in traversal order."""
    return [g.edge(eid).item for eid in path if g.edge(eid).kind == "occurrence"]


def path_weight(g: Dag, path: tuple[int, ...]) -> Fraction:
    """Distinct-item weight of the occurrence edges along a path."""
    seen: set[int] = set()
    total = ZERO
    for eid in path:
        e = g.edge(eid)
        if e.kind == "occurrence" and e.item not in seen:
            seen.add(e.item)
            total += e.weight
    return total


def to_dot(g: Dag) -> str:
    """Graphviz text dump for debugging and visual inspection."""
    def vname(v: Vertex) -> str:
        if v.role == "source":
            return "s"
        if v.role == "sink":
            return "t"
        if v.role == "junction":
            return "p"
        tag = f"_{'_'.join(map(str, v.copy))}" if v.copy else ""
        if v.role in ("chain_left", "chain_right"):
            side = "u" if v.role == "chain_left" else "u'"
            return f"\"{side}{v.stage}{tag}\""
        prefix = "v" if v.role == "tail" else "w"
        return f"\"{prefix}_{v.item}_{v.channel}_{v.slot}{tag}\""

    lines = [f"digraph {g.variant} {{", "  rankdir=LR;"]
    for e in g.edges:
        label = e.kind
        if e.kind == "occurrence":
            label = f"d{e.item} w={e.weight}"
        elif e.kind == "virtual_penalty":
            label = f"pen d{e.item} w={e.weight}"
        lines.append(
            f"  {vname(g.vertices[e.tail])} -> {vname(g.vertices[e.head])}"
            f" [label=\"{e.id}:{label}\"];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
