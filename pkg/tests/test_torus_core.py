from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from torus_gathering.torus_core import (
    Automorphism,
    Config,
    Coord,
    DimensionError,
    TorusDims,
    apply_to_set,
    automorphisms,
    blocks,
    dist,
    maximal_rings,
    neighbor_ring,
    neighbors,
    ring_blocks,
    ring_counts,
)

from .conftest import D65, occupancies


def bfs_dist(dims, a):
    seen = {a: 0}
    q = deque([a])
    while q:
        x = q.popleft()
        for y in neighbors(x, dims):
            if y not in seen:
                seen[y] = seen[x] + 1
                q.append(y)
    return seen


@pytest.mark.parametrize("ell,big_l", [(3, 2), (2, 2), (5, 5), (5, 6)])
def test_rejects_bad_dimensions(ell, big_l):
    with pytest.raises(DimensionError):
        TorusDims(ell, big_l)


def test_strict_dimensions_need_five_rings():
    TorusDims(6, 4)
    with pytest.raises(DimensionError):
        TorusDims(6, 4, strict=True)
    TorusDims(6, 5, strict=True)


def test_node_count_and_degree():
    nodes = list(D65.nodes())
    assert len(nodes) == 30 == D65.n
    for c in nodes:
        ns = neighbors(c, D65)
        assert len(set(ns)) == 4
        for m in ns:
            assert c in neighbors(m, D65)


@pytest.mark.parametrize("dims", [TorusDims(6, 5), TorusDims(7, 5), TorusDims(8, 3)])
def test_distance_matches_breadth_first_search(dims):
    for a in dims.nodes():
        ref = bfs_dist(dims, a)
        for b in dims.nodes():
            assert dist(a, b, dims) == ref[b]


def test_automorphism_group_size_and_closure():
    auts = automorphisms(D65)
    assert len(auts) == 4 * 6 * 5
    images = {tuple(a.apply(c, D65) for c in D65.nodes()) for a in auts}
    assert len(images) == len(auts)


@given(st.sampled_from(automorphisms(D65)), st.sampled_from(list(D65.nodes())), st.sampled_from(list(D65.nodes())))
def test_automorphisms_preserve_distance(sigma, a, b):
    assert dist(sigma.apply(a, D65), sigma.apply(b, D65), D65) == dist(a, b, D65)


def test_identity_detection():
    assert Automorphism(1, 0, 1, 0).is_identity(D65)
    assert Automorphism(1, 5, 1, 6).is_identity(D65)
    assert not Automorphism(-1, 0, 1, 0).is_identity(D65)


@given(occupancies())
def test_ring_counts_sum_to_occupied_nodes(occ):
    nb = ring_counts(occ, D65.big_l)
    assert sum(nb) == len(occ)
    top = max(nb)
    cfg = Config.from_positions(D65, occ)
    assert maximal_rings(cfg) == [i for i, x in enumerate(nb) if x == top]


def test_config_merges_duplicates_and_lists_towers():
    cfg = Config.from_positions(D65, [(0, 1), (0, 1), (2, 3)])
    assert cfg.k == 3
    assert cfg.towers() == [Coord(0, 1)]
    assert cfg.count((2, 3)) == 1
    with pytest.raises(ValueError):
        Config.from_positions(D65, [(5, 0)])


def test_ring_blocks_of_consecutive_and_spaced_runs():
    # 0,1,2 is one 1.block of three on a ring of 7; 0,2,4 is a 2.block
    assert [b for b in ring_blocks([0, 1, 2], 7, 1) if b[1] == 3]
    assert [b for b in ring_blocks([0, 2, 4], 7, 2) if b[1] == 3]
    cfg = Config.from_positions(TorusDims(7, 5), [(1, 5), (1, 6), (1, 0)])
    (blk,) = [b for b in blocks(cfg, 1, 1) if b.size == 3]
    assert sorted(c.pos for c in blk.members(7)) == [0, 5, 6]


def test_neighbor_ring_skips_empty_rings():
    occ = frozenset({Coord(0, 0), Coord(3, 1)})
    assert neighbor_ring(occ, D65, 0, 1) == 3
    assert neighbor_ring(occ, D65, 0, -1) == 3


@given(occupancies(), st.sampled_from(automorphisms(D65)))
def test_apply_to_set_is_a_bijection(occ, sigma):
    assert len(apply_to_set(sigma, occ, D65)) == len(occ)
