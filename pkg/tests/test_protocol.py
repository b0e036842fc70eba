import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_gathering.classify import SetLabel, classify_occ
from torus_gathering.protocol import (
    STAY,
    EnabledSet,
    Snapshot,
    SINGLE_ONLY,
    TOWER_ONLY,
    align_enabled,
    aligned,
    decide,
    enabled_moves,
)
from torus_gathering.protocol.align import GOALS, align_moves, is_aligned
from torus_gathering.protocol.base import Ctx
from torus_gathering.torus_core import Coord, TorusDims, apply_to_set, automorphisms, neighbors

from .conftest import D65, rigid_canonical
from .test_classify import D75, LABELLED, cells

RIGID_K3 = rigid_canonical(D65, 3)


def test_enabled_set_guards_split_by_multiplicity_bit():
    en = EnabledSet()
    en.add((0, 0), [(0, 1)], SINGLE_ONLY)
    en.add((0, 0), [(1, 0)], TOWER_ONLY)
    assert en.options((0, 0), False) == (Coord(0, 1),)
    assert en.options((0, 0), True) == (Coord(1, 0),)
    assert en.options((2, 2), False) == ()


def test_enabled_set_mapping_moves_sources_and_destinations():
    en = EnabledSet()
    en.add((0, 0), [(0, 1)])
    shifted = en.mapped(lambda c: Coord(c.ring + 1, c.pos))
    assert shifted.options((1, 0), False) == (Coord(1, 1),)


@pytest.mark.parametrize("occ", RIGID_K3, ids=lambda o: str(sorted(tuple(c) for c in o)))
def test_moves_are_from_occupied_nodes_to_neighbours(occ):
    en = enabled_moves(occ, D65)
    assert en, "a rigid configuration that is not gathered must enable someone"
    for src, entry in en.entries.items():
        assert src in occ
        assert set(entry.dests) <= set(neighbors(src, D65))


@pytest.mark.parametrize("label", list(LABELLED), ids=lambda x: x.value)
def test_every_label_has_a_rule(label):
    occ = cells(LABELLED[label])
    en = enabled_moves(occ, D75)
    if label is SetLabel.GATHERED:
        assert not en
    else:
        assert en


def test_gathered_robots_stay():
    snap = Snapshot(D65, frozenset({Coord(2, 2)}), Coord(2, 2), True)
    assert decide(snap) is STAY


def test_observer_must_stand_on_an_occupied_node():
    with pytest.raises(ValueError):
        decide(Snapshot(D65, frozenset({Coord(0, 0), Coord(0, 1), Coord(0, 3)}), Coord(4, 4)))


def test_last_pattern_only_the_lone_robot_moves():
    occ = frozenset({Coord(2, 3), Coord(2, 4)})
    en = enabled_moves(occ, D65)
    # standing on the tower, a robot stays; alone, it joins the other node
    assert en.options((2, 3), True) == ()
    assert en.options((2, 3), False) == (Coord(2, 4),)


def test_three_in_a_row_contract_onto_the_middle():
    occ = frozenset({Coord(2, 2), Coord(2, 3), Coord(2, 4)})
    en = enabled_moves(occ, D65)
    assert en.options((2, 2), False) == (Coord(2, 3),)
    assert en.options((2, 4), False) == (Coord(2, 3),)
    assert en.options((2, 3), False) == ()


def test_landmark_node_joins_the_maximal_ring():
    occ = cells(LABELLED[SetLabel.SP3])
    en = enabled_moves(occ, D75)
    assert en.sources() == [Coord(1, 2)]
    assert en.options((1, 2), False) == (Coord(0, 2),)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(RIGID_K3), st.sampled_from(automorphisms(D65)))
def test_decisions_commute_with_automorphisms(occ, sigma):
    image = apply_to_set(sigma, occ, D65)
    moved = enabled_moves(occ, D65).mapped(lambda c: sigma.apply(c, D65))
    assert enabled_moves(image, D65).canonical() == moved.canonical()


@pytest.mark.parametrize("nb", sorted(GOALS))
def test_align_goal_patterns_are_aligned_and_still(nb):
    rel = {o % 7 for o in GOALS[nb]}
    assert is_aligned(rel, 7)
    assert not align_moves(rel, 7).items


def test_align_moves_robots_toward_the_marker():
    # ring 0 holds three robots far from the marker column 3 of ring 1
    occ = frozenset({Coord(0, 0), Coord(0, 1), Coord(0, 6), Coord(1, 3)})
    ctx = Ctx(occ, TorusDims(7, 5))
    assert not aligned(ctx, 0, 1)
    en = align_enabled(ctx, 0, 1)
    assert en
    for src, entry in en.entries.items():
        assert src.ring == 0
        assert set(entry.dests) <= set(neighbors(src, TorusDims(7, 5)))


def test_random_walk_of_decisions_stays_on_the_torus():
    r = random.Random(5)
    for occ in r.sample(RIGID_K3, 10):
        for c in occ:
            d = decide(Snapshot(D65, occ, c))
            for x in d.options:
                assert x in neighbors(c, D65)
