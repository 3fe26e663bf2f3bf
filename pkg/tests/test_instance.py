import pytest
from fractions import Fraction as F

from alwdr.generate import FIG5_TRIPLES, generate_from_3dm, insert_vacant_slots
from alwdr.instance import (Instance, InstanceFormatError, Item, Occurrence,
                            conflict_free, from_json,
                            occurrence_assumption_holds, parse_instance,
                            segment_map, serialize, to_json)


def test_parse_smallest_instance():
    inst = parse_instance("alwdr 1 1 1 1\nitem 1 5/1\nocc 1 1 1\n")
    assert inst.n == 1 and inst.channels == 1 and inst.slots == 1
    assert inst.weight_of(1) == 5
    assert inst.occurrences() == [Occurrence(1, 1, 1)]


def test_parse_accepts_comments_and_plain_weights():
    inst = parse_instance("# hi\nalwdr 1 2 3 1\nitem 1 4  # four\nocc 1 2 3\n")
    assert inst.weight_of(1) == 4
    assert inst.grid == {(2, 3): 1}


def test_duplicate_cell_reports_line():
    text = "alwdr 2 1 3 1\nitem 1 1/1\nitem 2 1/1\nocc 1 1 3\nocc 2 1 3\n"
    with pytest.raises(InstanceFormatError) as exc:
        parse_instance(text)
    assert "duplicate cell" in str(exc.value) and exc.value.line == 5


@pytest.mark.parametrize("text,fragment", [
    ("alwdr x 1 1 1\nitem 1 1/1\n", "malformed header"),
    ("alwdr 1 1 1 1\nitem 1 -2/1\nocc 1 1 1\n", "negative weight"),
    ("alwdr 1 1 1 1\nitem 1 1/1\nocc 7 1 1\n", "unknown item"),
    ("alwdr 1 1 1 1\nitem 1 1/1\nocc 1 9 1\n", "channel 9 out of range"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(InstanceFormatError) as exc:
        parse_instance(text)
    assert fragment in str(exc.value)


def test_serialize_parse_roundtrip_fig5():
    inst = generate_from_3dm(FIG5_TRIPLES, 3)
    assert parse_instance(serialize(inst)) == inst
    assert from_json(to_json(inst)) == inst


def test_antennae_capped_by_channels():
    with pytest.raises(Exception, match="antennae"):
        Instance((Item(1, F(1)),), 1, 2, 2, {(1, 1): 1})


def test_conflict_free_rules():
    assert conflict_free(Occurrence(1, 1, 1), Occurrence(2, 1, 2)) is True
    assert conflict_free(Occurrence(1, 1, 1), Occurrence(2, 2, 2)) is False
    assert conflict_free(Occurrence(1, 1, 1), Occurrence(2, 2, 3)) is True
    assert conflict_free(Occurrence(1, 1, 2), Occurrence(2, 2, 2)) is False
    with pytest.raises(ValueError):
        conflict_free(Occurrence(1, 1, 3), Occurrence(2, 1, 1))


def test_adjacent_and_gapped_pairs():
    for ch_a in (1, 2):
        for ch_b in (1, 2):
            a = Occurrence(1, ch_a, 4)
            assert conflict_free(a, Occurrence(2, ch_b, 5)) is (ch_a == ch_b)
            assert conflict_free(a, Occurrence(2, ch_b, 6)) is True


def test_segment_map_with_vacant_slot():
    inst = parse_instance(
        "alwdr 4 1 5 1\nitem 1 1\nitem 2 1\nitem 3 1\nitem 4 1\n"
        "occ 1 1 1\nocc 2 1 2\nocc 3 1 4\nocc 4 1 5\n")
    seg = segment_map(inst)
    assert seg.segments == ((1, 2), (4, 5))
    assert seg.gamma == 2
    assert seg.segment_of(4) == 1 and seg.segment_of(3) is None


def test_segment_map_degenerate():
    empty = Instance((Item(1, F(1)),), 1, 4, 1, {})
    assert segment_map(empty).segments == ()
    assert segment_map(empty).gamma == 0
    full = Instance((Item(1, F(1)),), 1, 3, 1, {(1, 2): 1})
    assert segment_map(full).segments == ((2, 2),)


def test_occurrence_assumption():
    ok = parse_instance(
        "alwdr 1 2 4 1\nitem 1 1\nocc 1 1 1\nocc 1 2 4\n")
    # slot 2..3: slot 3 occupied? no - slots 2 and 3 vacant -> two segments
    assert occurrence_assumption_holds(ok) is True
    bad = parse_instance(
        "alwdr 1 2 2 1\nitem 1 1\nocc 1 1 1\nocc 1 2 2\n")
    assert occurrence_assumption_holds(bad) is False


def test_occurrence_assumption_fig5_golden():
    # block one broadcasts z1 (and y3) more than once: the rule fails
    inst = generate_from_3dm(FIG5_TRIPLES, 3)
    assert occurrence_assumption_holds(inst) is False


def test_insert_vacant_slots_spacing():
    inst = parse_instance(
        "alwdr 6 1 6 1\n" + "".join(f"item {i} 1\n" for i in range(1, 7))
        + "".join(f"occ {i} 1 {i}\n" for i in range(1, 7)))
    phased = insert_vacant_slots(inst, F(1, 2), 1)
    assert phased.is_vacant(3) and phased.is_vacant(5)
    assert not phased.is_vacant(1) and not phased.is_vacant(2)
    assert not phased.is_vacant(4) and not phased.is_vacant(6)
    assert segment_map(phased).gamma <= 2

    all_but_first = insert_vacant_slots(inst, F(1), 1)
    assert segment_map(all_but_first).gamma == 1


def test_insert_vacant_slots_phases_partition_late_slots():
    inst = parse_instance(
        "alwdr 8 1 10 1\n" + "".join(f"item {i} 1\n" for i in range(1, 9))
        + "".join(f"occ {i} 1 {i + 2}\n" for i in range(1, 9)))
    eps = F(1, 3)
    removed = []
    for phase in (1, 2, 3):
        phased = insert_vacant_slots(inst, eps, phase)
        removed.append({s for s in range(1, 11)
                        if phased.is_vacant(s) and not inst.is_vacant(s)})
    # every slot past the period is vacated in exactly one phase
    union = set().union(*removed)
    assert union == {s for s in range(4, 11) if not inst.is_vacant(s)}
    assert sum(len(r) for r in removed) == len(union)
