import pytest

from torus_gathering.explore import (
    ALL_GATHERED,
    COUNTEREXAMPLE,
    DEPTH_BOUND,
    FeasibilityError,
    System,
    align_instance,
    align_preconditions,
    explore,
    explore_align,
    state_key,
)
from torus_gathering.sim import Violation, initial_state, replay
from torus_gathering.torus_core import Coord, TorusDims, dist, neighbors

from .conftest import rigid_canonical

D65S = TorusDims(6, 5, strict=True)


class Walker(System):
    """Robot 0 wanders freely; the others never move. Nothing ever gathers."""

    def options(self, st, r):
        return tuple(neighbors(r.at, self.dims)) if r.id == 0 else ()

    def goal(self, st):
        return False

    def check(self, before, after):
        return []

    def advance(self, before, after):
        return after


class Collide(Walker):
    def check(self, before, after):
        a, b = after.robots[0].at, after.robots[1].at
        return [Violation("collision", "robot 0 reached robot 1")] if a == b else []


def test_counterexample_has_minimal_length():
    st0 = initial_state(D65S, [(0, 0), (1, 2), (3, 3)], allow_nonrigid=True)
    rep = explore(st0, depth=50, system=Collide(D65S))
    assert rep.outcome == COUNTEREXAMPLE
    # each hop costs one Look and one Move
    hops = dist(Coord(0, 0), Coord(1, 2), D65S)
    assert len(rep.trace) - 1 == 2 * hops


def test_fair_cycle_without_goal_is_a_livelock():
    st0 = initial_state(D65S, [(0, 0), (1, 2), (3, 3)], allow_nonrigid=True)
    rep = explore(st0, depth=50, system=Walker(D65S))
    assert rep.outcome == COUNTEREXAMPLE
    assert "livelock" in rep.reason
    assert rep.cycle_start is not None
    looped = rep.trace[1 + rep.cycle_start :]
    assert {a["robot_id"] for rec in looped for a in rec["activations"]} == {0, 1, 2}


def test_depth_bound_when_the_frontier_stays_open():
    st0 = initial_state(D65S, [(0, 0), (0, 1), (0, 3)])
    rep = explore(st0, depth=1)
    assert rep.outcome == DEPTH_BOUND


@pytest.mark.parametrize("occ", rigid_canonical(D65S, 3)[:8], ids=lambda o: str(sorted(tuple(c) for c in o)))
def test_small_instances_always_gather(occ):
    rep = explore(initial_state(D65S, occ))
    assert rep.outcome == ALL_GATHERED, rep.reason
    assert rep.closed


@pytest.mark.parametrize("occ", rigid_canonical(D65S, 3)[:4], ids=lambda o: str(sorted(tuple(c) for c in o)))
def test_canonical_and_raw_exploration_agree(occ):
    st0 = initial_state(D65S, occ)
    a = explore(st0, canonical=True)
    b = explore(st0, canonical=False)
    assert a.outcome == b.outcome == ALL_GATHERED
    assert a.states_visited <= b.states_visited


def test_state_key_identifies_symmetric_images():
    a = initial_state(D65S, [(0, 0), (0, 1), (0, 3)])
    # translated copy; sorting keeps the robot ids in the same order
    b = initial_state(D65S, [(2, 2), (2, 3), (2, 5)])
    assert state_key(a, D65S) == state_key(b, D65S)


def test_counterexample_trace_replays():
    st0 = initial_state(D65S, [(0, 0), (1, 2), (3, 3)], allow_nonrigid=True)
    rep = explore(st0, system=Collide(D65S))
    assert rep.trace[0]["type"] == "init"
    assert rep.trace[-1]["occupancy"]


def test_guard_refuses_large_instances():
    st0 = initial_state(TorusDims(7, 6), [(0, 0), (0, 1), (0, 3)])
    with pytest.raises(FeasibilityError):
        explore(st0)


def test_align_preconditions_cover_the_patterns():
    labels = {lab for _, _, lab in align_preconditions(6)}
    assert {l.split()[0] for l in labels} == {"nb=2", "nb=3", "nb=4", "nb=5"}
    assert {l.split()[1] for l in labels} == {"marker=single", "marker=2.block", "marker=1.block-3"}


def test_align_reaches_the_goal_from_a_spread_ring():
    rep = explore_align(7, [0, 2, 4], [3])
    assert rep.outcome == ALL_GATHERED, rep.reason
    st0, system = align_instance(7, [0, 2, 4], [3])
    assert not system.goal(st0)
