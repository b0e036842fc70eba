"""Exhaustive exploration of every scheduler choice on small instances.

States keep robot identities (fairness is about individual robots) and are
deduplicated up to torus automorphisms. Safety findings are reported on the
shortest path that reaches them; a livelock is a strongly connected set of
non-goal states whose internal transitions activate every robot.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

from .classify import PreconditionError
from .protocol import align_enabled, aligned
from .protocol.base import Ctx
from .sim import (
    LOOK,
    MOVE,
    Activation,
    ProtocolFailure,
    RobotState,
    SimState,
    Violation,
    advance_monitor,
    invariant_hooks,
    look_options,
    step,
    trace_header,
    SchedulerPolicy,
)
from .torus_core import Coord, TorusDims, automorphisms

ALL_GATHERED = "AllGathered"
COUNTEREXAMPLE = "CounterexampleTrace"
DEPTH_BOUND = "DepthBound"

MAX_ROBOTS = 4
MAX_NODES = 35


class FeasibilityError(ValueError):
    pass


@dataclass
class ExploreReport:
    outcome: str
    states_visited: int
    max_depth: int
    reason: str = ""
    trace: list = field(default_factory=list)
    # index in trace (counting step records) where the repeated cycle starts
    cycle_start: Optional[int] = None
    closed: bool = False


class System:
    """What the explorer needs to know about the rules being checked."""

    def __init__(self, dims: TorusDims):
        self.dims = dims

    def options(self, st: SimState, r: RobotState) -> tuple:
        return look_options(st, r)

    def goal(self, st: SimState) -> bool:
        return st.gathered()

    def check(self, before: SimState, after: SimState) -> list:
        return invariant_hooks(before, after)

    def advance(self, before: SimState, after: SimState) -> SimState:
        return advance_monitor(before, after)


class AlignSystem(System):
    """Two rings in isolation: only the Align rules drive the robots of ring li."""

    def __init__(self, dims: TorusDims, li: int, lk: int, forbid_towers: bool):
        super().__init__(dims)
        self.li, self.lk = li, lk
        self.forbid_towers = forbid_towers

    def options(self, st, r):
        counts = st.counts()
        try:
            en = align_enabled(Ctx(frozenset(counts), self.dims), self.li, self.lk)
        except PreconditionError as e:
            raise ProtocolFailure(f"PreconditionError: {e}") from e
        return en.options(r.at, counts[r.at] >= 2)

    def goal(self, st):
        return all(r.pending is None for r in st.robots) and aligned(Ctx(st.occupancy(), self.dims), self.li, self.lk)

    def check(self, before, after):
        if not self.forbid_towers:
            return []
        new = {c for c, n in after.counts().items() if n >= 2 and c.ring == self.li}
        old = {c for c, n in before.counts().items() if n >= 2}
        if new - old:
            return [Violation("align-tower", f"multiplicity created at {sorted(map(tuple, new - old))}")]
        return []

    def advance(self, before, after):
        return after


def state_key(st: SimState, dims: TorusDims, canonical: bool = True) -> tuple:
    def image(s) -> tuple:
        rows = []
        for r in st.robots:
            at = s.apply(r.at, dims) if s else r.at
            pend = (s.apply(r.pending, dims) if s else r.pending) if r.pending is not None else None
            rows.append((at, pend))
        return tuple(rows)

    flags = (st.unique_seen, st.phase2_seen)
    if not canonical:
        return image(None), flags
    return min(image(s) for s in _auts(dims)), flags


_AUT_CACHE: dict = {}


def _auts(dims: TorusDims) -> list:
    if dims not in _AUT_CACHE:
        _AUT_CACHE[dims] = automorphisms(dims)
    return _AUT_CACHE[dims]


def successors(st: SimState, system: System):
    """Yield (activations, next state) for every nonempty activation subset and adversary choice."""
    per_robot = []
    for r in st.robots:
        if r.pending is not None:
            per_robot.append([Activation(r.id, MOVE)])
        else:
            opts = system.options(st, r)
            per_robot.append([Activation(r.id, LOOK, i) for i in range(max(1, len(opts)))])
    ids = range(st.k)
    for size in range(1, st.k + 1):
        for subset in itertools.combinations(ids, size):
            for acts in itertools.product(*(per_robot[i] for i in subset)):
                nxt, _ = step(st, acts, system.options)
                yield list(acts), nxt


def _strip(st: SimState) -> SimState:
    # step counters and activation times do not influence decisions
    return replace(st, step=0, robots=tuple(replace(r, last_activated=0) for r in st.robots))


def check_feasible(st: SimState, force: bool) -> None:
    if force:
        return
    if st.k > MAX_ROBOTS or st.dims.n > MAX_NODES:
        raise FeasibilityError(
            f"k={st.k} robots on {st.dims.n} nodes exceeds the exploration guard (k<={MAX_ROBOTS}, n<={MAX_NODES})"
        )


def explore(
    initial: SimState,
    depth: int = 200,
    fairness_bound: int = 2,
    system: Optional[System] = None,
    canonical: bool = True,
    force: bool = False,
) -> ExploreReport:
    check_feasible(initial, force)
    system = system or System(initial.dims)
    dims = initial.dims
    key = lambda s: state_key(s, dims, canonical)  # noqa: E731
    start = _strip(initial)
    k0 = key(start)
    rep = {k0: start}
    parent: dict = {k0: None}
    level = {k0: 0}
    edges: dict = {}
    queue = deque([k0])
    open_frontier = False
    max_depth = 0

    def counterexample(path, reason):
        trace = _concrete_trace(initial, path, system, key)
        return ExploreReport(COUNTEREXAMPLE, len(rep), max_depth, reason, trace)

    while queue:
        sk = queue.popleft()
        st = rep[sk]
        d = level[sk]
        max_depth = max(max_depth, d)
        if system.goal(st):
            continue
        if d >= depth:
            open_frontier = True
            continue
        out = []
        try:
            succ = list(successors(st, system))
        except ProtocolFailure as e:
            return counterexample(_path_to(parent, sk), f"protocol failure at depth {d}: {e}")
        for acts, nxt in succ:
            found = system.check(st, nxt)
            nxt = _strip(system.advance(st, nxt))
            nk = key(nxt)
            if nk not in rep:
                rep[nk] = nxt
                parent[nk] = (sk, frozenset(a.robot_id for a in acts))
                level[nk] = d + 1
                queue.append(nk)
            ids = frozenset(a.robot_id for a in acts)
            if found:
                max_depth = max(max_depth, d + 1)
                detail = "; ".join(f"{v.invariant}: {v.detail}" for v in found)
                path = _path_to(parent, sk) + [(sk, ids, nk)]
                return counterexample(path, f"invariant violation at depth {d + 1}: {detail}")
            out.append((nk, ids))
        edges[sk] = out

    loop = _fair_livelock(edges, initial.k, {s for s in rep if system.goal(rep[s])})
    if loop is not None:
        entry, cycle = loop
        prefix = _path_to(parent, entry)
        trace = _concrete_trace(initial, prefix + cycle, system, key)
        return ExploreReport(
            COUNTEREXAMPLE,
            len(rep),
            max_depth,
            f"fair livelock: a cycle of {len(cycle)} steps avoids the goal while activating every robot",
            trace,
            cycle_start=len(prefix),
        )
    if open_frontier:
        return ExploreReport(DEPTH_BOUND, len(rep), max_depth, f"unexplored states remain beyond depth {depth}")
    return ExploreReport(ALL_GATHERED, len(rep), max_depth, "every fair path reaches the goal", closed=True)


def _path_to(parent: dict, k) -> list:
    path = []
    while parent[k] is not None:
        pk, ids = parent[k]
        path.append((pk, ids, k))
        k = pk
    return path[::-1]


def _fair_livelock(edges: dict, k: int, goals: set):
    """Entry state and cycle (as path steps) of a fair cycle avoiding goal states, if any."""
    nodes = [n for n in edges if n not in goals]
    for comp in _sccs(nodes, edges):
        inside = set(comp)
        internal = [(u, v, ids) for u in comp for v, ids in edges.get(u, ()) if v in inside]
        if not internal:
            continue
        covered = set().union(*(ids for _, _, ids in internal))
        if len(covered) < k:
            continue
        return comp[0], _covering_cycle(comp[0], internal, k)
    return None


def _sccs(nodes: list, edges: dict) -> list:
    """Tarjan's algorithm, iterative."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out = []
    counter = 0
    node_set = set(nodes)
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter([v for v, _ in edges.get(root, ()) if v in node_set]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            u, it = work[-1]
            advanced = False
            for v in it:
                if v not in index:
                    index[v] = low[v] = counter
                    counter += 1
                    stack.append(v)
                    on_stack.add(v)
                    work.append((v, iter([w for w, _ in edges.get(v, ()) if w in node_set])))
                    advanced = True
                    break
                if v in on_stack:
                    low[u] = min(low[u], index[v])
            if advanced:
                continue
            work.pop()
            if work:
                p = work[-1][0]
                low[p] = min(low[p], low[u])
            if low[u] == index[u]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == u:
                        break
                out.append(comp)
    return out


def _covering_cycle(entry, internal: list, k: int) -> list:
    """A closed walk from entry using internal edges that activates every robot."""
    adj: dict = {}
    for u, v, ids in internal:
        adj.setdefault(u, []).append((v, ids))

    def route(a, b) -> list:
        if a == b:
            return []
        prev = {a: None}
        q = deque([a])
        while q:
            x = q.popleft()
            for y, ids in adj.get(x, ()):
                if y not in prev:
                    prev[y] = (x, ids)
                    if y == b:
                        q.clear()
                        break
                    q.append(y)
        path = []
        y = b
        while prev[y] is not None:
            x, ids = prev[y]
            path.append((x, ids, y))
            y = x
        return path[::-1]

    walk: list = []
    here = entry
    need = set(range(k))
    while need:
        u, v, ids = next(e for e in internal if e[2] & need)
        walk += route(here, u) + [(u, ids, v)]
        need -= ids
        here = v
    walk += route(here, entry)
    return walk


def _concrete_trace(initial: SimState, path: list, system: System, key) -> list:
    """Re-run a path of canonical states on concrete states and record it in trace format."""
    policy = SchedulerPolicy("exhaustive", 0, 1)
    trace = [trace_header(initial, policy)]
    st = initial
    for _, acts, dst_key in path:
        ids = sorted(acts)
        match = None
        for cand_acts, nxt in successors(st, system):
            if sorted(a.robot_id for a in cand_acts) != ids:
                continue
            if key(_strip(system.advance(st, nxt))) == dst_key:
                match = (cand_acts, nxt)
                break
        if match is None:
            raise RuntimeError("could not replay an explored transition on concrete states")
        cand_acts, _ = match
        nxt, recs = step(st, cand_acts, system.options)
        nxt = system.advance(st, nxt)
        trace.append({"type": "step", "step": nxt.step, "activations": recs, "occupancy": nxt.sparse()})
        st = nxt
    return trace


# ---------------------------------------------------------------- Align checks


def align_instance(ell: int, li_positions, lk_positions, big_l: int = 5) -> tuple[SimState, AlignSystem]:
    dims = TorusDims(ell, big_l)
    cells = [Coord(0, p) for p in li_positions] + [Coord(1, p) for p in lk_positions]
    robots = tuple(RobotState(i, c) for i, c in enumerate(sorted(cells)))
    st = SimState(dims, robots, unique_seen=True)
    forbid = len(li_positions) in (3, 5)
    return st, AlignSystem(dims, 0, 1, forbid)


MARKER_PATTERNS = {"single": (0,), "2.block": (-1, 1), "1.block-3": (-1, 0, 1)}


def align_preconditions(ell: int):
    """Every Align starting pattern: (li positions, lk positions, label)."""
    for nb in (2, 3, 4, 5):
        for name, offs in MARKER_PATTERNS.items():
            if nb <= len(offs):
                continue
            for c in range(ell):
                lk = sorted({(c + o) % ell for o in offs})
                for li in itertools.combinations(range(ell), nb):
                    yield list(li), lk, f"nb={nb} marker={name}"


def explore_align(ell: int, li_positions, lk_positions, depth: int = 200) -> ExploreReport:
    st, system = align_instance(ell, li_positions, lk_positions)
    return explore(st, depth, system=system, canonical=False, force=True)
