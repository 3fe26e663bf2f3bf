import pytest
from fractions import Fraction as F

from alwdr.dag import (DagError, build_basic_dag, build_improved_dag,
                       build_refined_dag, enumerate_st_paths, path_items,
                       path_to_schedule, path_weight, to_dot,
                       whole_horizon_segments)
from alwdr.generate import GenParams, GenerationError, generate_random
from alwdr.instance import (Occurrence, conflict_free, parse_instance,
                            segment_map, serialize)
from alwdr.oracle import brute_force_optimal, enumerate_sequences, validate_schedule

from corpora import oa_corpus, small_improved_corpus


def inst_single():
    return parse_instance("alwdr 1 1 1 1\nitem 1 5/1\nocc 1 1 1\n")


def test_basic_single_occurrence():
    g = build_basic_dag(inst_single())
    assert len(g.vertices) == 4
    assert [e.kind for e in g.edges] == ["source", "occurrence", "sink"]


def test_basic_link_rules():
    same = parse_instance("alwdr 2 2 2 1\nitem 1 1\nitem 2 1\nocc 1 1 1\nocc 2 1 2\n")
    g = build_basic_dag(same)
    assert sum(1 for e in g.edges if e.kind == "link") == 1
    cross = parse_instance("alwdr 2 2 2 1\nitem 1 1\nitem 2 1\nocc 1 1 1\nocc 2 2 2\n")
    g = build_basic_dag(cross)
    assert sum(1 for e in g.edges if e.kind == "link") == 0


def test_basic_vertex_and_edge_counts():
    for seed in range(20):
        params = GenParams(channels=2 + seed % 3, slots=5 + seed % 5,
                           density=0.5, max_occurrences=3)
        inst = generate_random(params, 500 + seed)
        g = build_basic_dag(inst)
        occ = len(inst.grid)
        assert len(g.vertices) == 2 * occ + 2
        assert len(g.edges) <= occ * occ + 4 * occ


def test_every_link_edge_is_conflict_free():
    for seed in range(10):
        params = GenParams(channels=3, slots=7, density=0.5, max_occurrences=2)
        inst = generate_random(params, 600 + seed)
        for g in (build_basic_dag(inst), build_refined_dag(inst)):
            for e in g.edges:
                if e.kind != "link":
                    continue
                tail = g.vertices[e.tail]
                head = g.vertices[e.head]
                a = Occurrence(tail.item, tail.channel, tail.slot)
                b = Occurrence(head.item, head.channel, head.slot)
                assert conflict_free(a, b)


def test_basic_paths_match_retrieval_sequences():
    params = GenParams(channels=3, slots=8, density=0.35, max_occurrences=2)
    inst = generate_random(params, 4001)
    g = build_basic_dag(inst)
    paths = set()
    for path in enumerate_st_paths(g):
        occs = tuple(Occurrence(e.item, e.channel, e.slot)
                     for e in (g.edge(i) for i in path) if e.kind == "occurrence")
        paths.add(occs)
    assert paths == set(enumerate_sequences(inst))


def test_refined_single_occurrence_shape():
    g = build_refined_dag(inst_single())
    kinds = sorted(e.kind for e in g.edges)
    # real part s->v->w->p plus the junction fan-out and one virtual stage
    assert kinds.count("source") == 1
    assert kinds.count("occurrence") == 1
    assert kinds.count("sink") == 1
    assert kinds.count("virtual_penalty") == 2
    assert g.junction is not None


def test_refined_same_channel_links_are_unique():
    inst = parse_instance(
        "alwdr 3 2 3 1\nitem 1 1\nitem 2 1\nitem 3 1\n"
        "occ 1 1 1\nocc 2 1 2\nocc 3 1 3\n")
    g = build_refined_dag(inst)
    for v in g.vertices:
        if v.role == "head":
            same = [e for e in g.out_edges[v.index] if e.kind == "link"
                    and g.vertices[e.head].channel == v.channel]
            assert len(same) <= 1


def test_refined_size_bound():
    checked = 0
    for seed in range(200):
        params = GenParams(channels=2 + seed % 3, slots=5 + seed % 8,
                           density=0.55, max_occurrences=3)
        try:
            inst = generate_random(params, 700 + seed)
        except GenerationError:
            continue
        g = build_refined_dag(inst)
        m, n = inst.channels, inst.n
        assert len(g.edges) <= (m + 1) * len(g.vertices) + 4 * n
        checked += 1
        if checked >= 100:
            break
    assert checked >= 100


def test_improved_no_duplication_when_single_occurrence():
    params = GenParams(channels=2, slots=6, density=0.5, single_occurrence=True)
    inst = generate_random(params, 5)
    gr = build_refined_dag(inst)
    gi = build_improved_dag(gr, segment_map(inst))
    assert len(gi.vertices) == len(gr.vertices)
    assert len(gi.edges) == len(gr.edges)


def test_improved_blocks_second_pickup_in_segment():
    inst = parse_instance(
        "alwdr 3 2 4 1\nitem 1 4\nitem 2 1\nitem 3 2\n"
        "occ 1 1 1\nocc 2 1 2\nocc 3 2 3\nocc 1 2 4\n")
    gr = build_refined_dag(inst)
    gi = build_improved_dag(gr, segment_map(inst))
    for path in enumerate_st_paths(gi, target=gi.junction):
        items = path_items(gi, path)
        assert len(items) == len(set(items))


def test_improved_max_path_weight_matches_oracle():
    for inst in small_improved_corpus(8):
        gr = build_refined_dag(inst)
        gi = build_improved_dag(gr, segment_map(inst))
        best = max(path_weight(gi, p)
                   for p in enumerate_st_paths(gi, target=gi.junction))
        assert best == brute_force_optimal(inst, 1).optimum


def test_improved_whole_horizon_dedupes_across_segments():
    inst = parse_instance(
        "alwdr 2 1 5 1\nitem 1 3\nitem 2 1\n"
        "occ 1 1 1\nocc 2 1 2\nocc 1 1 5\n")
    gr = build_refined_dag(inst)
    gi = build_improved_dag(gr, whole_horizon_segments(inst))
    for path in enumerate_st_paths(gi, target=gi.junction):
        items = path_items(gi, path)
        assert len(items) == len(set(items))
    # one recurring item doubles the graph at most
    assert len(gi.edges) <= 2 * len(gr.edges)


def test_path_to_schedule_single_and_shared_items():
    inst = inst_single()
    g = build_basic_dag(inst)
    path = [e.id for e in sorted(g.edges, key=lambda e: e.id)]
    sched = path_to_schedule(g, [path], inst)
    assert sched.weight == 5
    # two antennae retrieving the same item in different cells count it once
    twin = parse_instance(
        "alwdr 1 2 3 2\nitem 1 6\nocc 1 1 1\nocc 1 2 3\n")
    g2 = build_basic_dag(twin)
    paths = []
    for occ_edge in g2.occurrence_edges():
        src = next(e for e in g2.in_edges[occ_edge.tail] if e.kind == "source")
        snk = next(e for e in g2.out_edges[occ_edge.head] if e.kind == "sink")
        paths.append([src.id, occ_edge.id, snk.id])
    sched = path_to_schedule(g2, paths, twin)
    assert sched.weight == 6


def test_path_to_schedule_rejects_shared_edges():
    inst = inst_single()
    g = build_basic_dag(inst)
    path = [e.id for e in sorted(g.edges, key=lambda e: e.id)]
    with pytest.raises(DagError):
        path_to_schedule(g, [path, path], inst)


def test_schedules_from_decomposition_pass_validator():
    from alwdr.formulate import build_edge_lp, values_by_edge
    from alwdr.lp import solve_basic_optimal
    from alwdr.rounding import RandomSource, decompose_flow, round_flows_collective

    for k, inst in enumerate(oa_corpus(20, seed0=90000, max_slots=14)):
        g = build_basic_dag(inst)
        sol = solve_basic_optimal(build_edge_lp(g, 1))
        dec = decompose_flow(g, segment_map(inst), values_by_edge(g, sol))
        sched = round_flows_collective(dec, 1, RandomSource(k), inst)
        assert validate_schedule(inst, sched) is None


def test_dot_dump_mentions_every_edge():
    inst = inst_single()
    g = build_refined_dag(inst)
    dot = to_dot(g)
    assert dot.startswith("digraph refined")
    assert dot.count("->") == len(g.edges)
