import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_gathering.classify import (
    PreconditionError,
    SetLabel,
    analyse_gamma,
    canonical_key,
    class_tag,
    classify_occ,
    gamma,
    is_periodic,
    is_rigid,
    is_rigid_by_automorphism,
    predicates,
    symmetry_axes,
)
from torus_gathering.torus_core import Coord, TorusDims, apply_to_set, automorphisms

from .conftest import D65, occupancies

D75 = TorusDims(7, 5)


def cells(layout):
    return frozenset(Coord(r, p) for r, ps in layout.items() for p in ps)


# one hand-built instance per label on the (7,5) torus, ring 0 holding the most robots
LABELLED = {
    SetLabel.EMPTY: {0: [0, 1, 3], 2: [0]},
    SetLabel.SEMI_EMPTY: {0: [0, 1, 3], 1: [0, 3]},
    SetLabel.SEMI_ORIENTED: {0: [0, 1, 3], 1: [2], 4: [5]},
    SetLabel.ORIENTED_1: {0: [0, 1, 2, 4], 1: [1], 4: [0, 1, 2]},
    SetLabel.ORIENTED_2: {0: [0, 1, 2, 4], 1: [1], 4: [3, 5]},
    SetLabel.UNDEFINED: {0: [0, 1, 2, 4], 1: [0, 3], 4: [1, 5]},
    SetLabel.PR: {0: [0, 1, 3], 1: [2], 3: [5]},
    SetLabel.LS: {0: [0, 1, 3], 1: [2]},
    SetLabel.SP3: {0: [1, 2, 3], 1: [2]},
    SetLabel.SP2: {0: [0, 1, 3, 4], 1: [2]},
    SetLabel.SP1: {0: [0, 1, 2, 3, 4], 1: [1, 2, 3]},
    SetLabel.SP4: {2: [3, 4]},
    SetLabel.GATHERED: {1: [1]},
    SetLabel.NOT_UNIQUE: {0: [0, 1], 2: [0, 3]},
}


@pytest.mark.parametrize("label", list(LABELLED), ids=lambda x: x.value)
def test_hand_built_instances_get_their_label(label):
    assert classify_occ(cells(LABELLED[label]), D75).label is label


@pytest.mark.parametrize("label", list(LABELLED), ids=lambda x: x.value)
def test_labels_are_invariant_under_automorphisms(label):
    occ = cells(LABELLED[label])
    for sigma in automorphisms(D75):
        assert classify_occ(apply_to_set(sigma, occ, D75), D75).label is label


def test_target_fields_of_a_landmark_configuration():
    pred = predicates(cells(LABELLED[SetLabel.LS]), D75)
    assert pred.unique and pred.l_max == 0
    assert pred.target.l_target == 1 and pred.target.l_secondary == 4
    assert pred.target.v_target == Coord(1, 2)
    assert pred.empty and not pred.partial


def test_partial_target_when_another_ring_is_occupied():
    pred = predicates(cells(LABELLED[SetLabel.PR]), D75)
    assert pred.partial and not pred.empty


def brute_rigid(occ, dims):
    """Every occupied node has a view no other occupied node shares, read cell by cell."""
    def view(at):
        out = []
        for a in (1, -1):
            for b in (1, -1):
                out.append(
                    tuple(
                        tuple(Coord((at[0] + b * t) % dims.big_l, (at[1] + a * s) % dims.ell) in occ for s in range(dims.ell))
                        for t in range(dims.big_l)
                    )
                )
        return tuple(sorted(out))

    vs = [view(c) for c in occ]
    return len(set(vs)) == len(vs)


@settings(max_examples=300)
@given(occupancies(min_k=2, max_k=7))
def test_rigidity_matches_cellwise_views(occ):
    assert is_rigid(occ, D65) == brute_rigid(occ, D65)


@settings(max_examples=300)
@given(occupancies(min_k=2, max_k=7))
def test_view_rigidity_equals_no_moving_automorphism(occ):
    assert is_rigid(occ, D65) == is_rigid_by_automorphism(occ, D65)


def test_translation_invariant_pattern_is_periodic():
    occ = cells({0: [0, 3], 2: [0, 3]})
    assert is_periodic(occ, D65)
    assert not is_rigid(occ, D65)


def test_axes_report_orientation():
    occ = cells({0: [0, 1], 2: [0, 1], 1: [5]})
    axes = symmetry_axes(occ, D65)
    assert axes and all(a.orientation in ("perpendicular", "parallel") for a in axes)
    assert "axis through" in axes[0].describe(D65)


@settings(max_examples=100)
@given(occupancies(min_k=1, max_k=5), st.sampled_from(automorphisms(D65)))
def test_canonical_key_is_constant_on_orbits(occ, sigma):
    assert canonical_key(occ, D65) == canonical_key(apply_to_set(sigma, occ, D65), D65)


def test_canonical_key_orbit_count_k2():
    # orbits of pairs on the (6,5) torus, counted by brute force over the group
    pairs = list(itertools.combinations(list(D65.nodes()), 2))
    auts = automorphisms(D65)
    orbits = set()
    for p in pairs:
        orbits.add(min(tuple(sorted(s.apply(c, D65) for c in p)) for s in auts))
    assert len({canonical_key(p, D65) for p in pairs}) == len(orbits)


def test_class_tag_reports_rigid_landmark():
    tag = class_tag(cells(LABELLED[SetLabel.LS]), D75)
    assert tag.rigid and tag.label is SetLabel.LS
    assert tag.target.v_target == Coord(1, 2)


def test_gamma_ignores_one_ring_when_three_are_occupied():
    occ = cells(LABELLED[SetLabel.UNDEFINED])
    cl = classify_occ(occ, D75)
    assert gamma(occ, cl.li, cl.lk, D75).ignored_rings == {cl.li}


def test_gamma_ignores_both_adjacent_rings_of_undefined():
    occ = cells(LABELLED[SetLabel.UNDEFINED]) | {Coord(2, 3)}
    cl = classify_occ(occ, D75)
    assert cl.label is SetLabel.UNDEFINED
    g = gamma(occ, cl.li, cl.lk, D75)
    assert g.ignored_rings == {cl.li, cl.lk}
    assert all(c.ring not in g.ignored_rings for c in g.occupied)
    assert analyse_gamma(g).subcase in ("rigid", "node-edge", "node-node", "edge-edge", "reduce")


def test_gamma_needs_three_rings():
    with pytest.raises(PreconditionError):
        gamma(cells({0: [0, 1], 1: [0]}), 1, 4, D75)
