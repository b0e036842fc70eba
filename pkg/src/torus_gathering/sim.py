"""Asynchronous Look-Compute-Move engine with outdated views and bounded fairness."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Optional

from .classify import Classification, ModelViolation, PreconditionError, SetLabel, classify_occ, is_rigid
from .torus_core import Coord, DimensionError, TorusDims, neighbors, ring_counts
from .protocol import Snapshot, decide
from .view import TieError

LOOK = "look"
MOVE = "move"


class InputRejected(ValueError):
    pass


@dataclass(frozen=True)
class RobotState:
    id: int
    at: Coord
    # destination chosen at the last Look and not yet executed
    pending: Optional[Coord] = None
    last_activated: int = 0


@dataclass(frozen=True)
class SimState:
    dims: TorusDims
    robots: tuple
    step: int = 0
    # monitor flags for the one-way progress checks
    unique_seen: bool = False
    phase2_seen: bool = False

    @property
    def k(self) -> int:
        return len(self.robots)

    def counts(self) -> dict:
        out: dict = {}
        for r in self.robots:
            out[r.at] = out.get(r.at, 0) + 1
        return out

    def occupancy(self) -> frozenset:
        return frozenset(r.at for r in self.robots)

    def sparse(self) -> list:
        return [[c.ring, c.pos, n] for c, n in sorted(self.counts().items())]

    def gathered(self) -> bool:
        return len(self.occupancy()) == 1 and all(r.pending is None for r in self.robots)


def initial_state(dims: TorusDims, positions: Iterable, allow_nonrigid: bool = False) -> SimState:
    cells = [Coord(*p) for p in positions]
    for c in cells:
        if not dims.contains(c):
            raise InputRejected(f"node {tuple(c)} is outside the torus")
    if len(cells) < 3:
        raise InputRejected("at least three robots are required")
    gathered = len(set(cells)) == 1
    # a configuration that is already gathered is accepted as a terminal start
    if not gathered and len(set(cells)) != len(cells):
        raise InputRejected("initial configuration has a multiplicity")
    if not gathered and not allow_nonrigid and not is_rigid(frozenset(cells), dims):
        raise InputRejected("initial configuration is not rigid")
    robots = tuple(RobotState(i, c) for i, c in enumerate(sorted(cells)))
    st = SimState(dims, robots)
    return replace(st, unique_seen=_label_of(st) is not SetLabel.NOT_UNIQUE)


def make_dims(ell: int, big_l: int, strict: bool = True) -> TorusDims:
    try:
        return TorusDims(ell, big_l, strict)
    except DimensionError as e:
        raise InputRejected(str(e)) from e


@lru_cache(maxsize=100_000)
def _classify(dims: TorusDims, occ: frozenset) -> Classification:
    return classify_occ(occ, dims)


def _label_of(st: SimState) -> SetLabel:
    return _classify(st.dims, st.occupancy()).label


def look_options(st: SimState, robot: RobotState) -> tuple:
    """Destinations the robot may adopt when it Looks now; empty means Stay."""
    counts = st.counts()
    snap = Snapshot(st.dims, frozenset(counts), robot.at, counts[robot.at] >= 2)
    return decide(snap).options


# ---------------------------------------------------------------- stepping


@dataclass(frozen=True)
class Activation:
    robot_id: int
    action: str  # LOOK or MOVE
    # for LOOK: index into the adopted options (adversary choice); ignored for MOVE
    choice: int = 0


class ProtocolFailure(RuntimeError):
    """The protocol raised while a robot computed its move."""


def step(st: SimState, acts: Iterable[Activation], options=look_options) -> tuple[SimState, list]:
    """Apply one scheduler decision; return the new state and trace records for it.

    options(state, robot) gives the destinations a Looking robot may adopt.
    """
    acts = sorted(acts, key=lambda a: a.robot_id)
    robots = list(st.robots)
    records = []
    label = None
    for a in acts:
        r = robots[a.robot_id]
        if a.action == LOOK:
            if r.pending is not None:
                raise ValueError(f"robot {r.id} must move before looking again")
            try:
                opts = options(st, r)
            except (ModelViolation, TieError, PreconditionError) as e:
                raise ProtocolFailure(f"{type(e).__name__}: {e}") from e
            if label is None:
                label = _label_of(st).value
            dest = opts[a.choice % len(opts)] if opts else None
            robots[a.robot_id] = replace(r, pending=dest, last_activated=st.step + 1)
            records.append(
                {"robot_id": r.id, "action": LOOK, "from": list(r.at), "to": list(dest) if dest else None, "set_label": label}
            )
        elif a.action == MOVE:
            if r.pending is None:
                raise ValueError(f"robot {r.id} has no pending move")
            if r.pending not in neighbors(r.at, st.dims):
                raise AssertionError(f"stale pending move {r.pending} from {r.at}")
            robots[a.robot_id] = replace(r, at=r.pending, pending=None, last_activated=st.step + 1)
            records.append({"robot_id": r.id, "action": MOVE, "from": list(r.at), "to": list(r.pending), "set_label": None})
        else:
            raise ValueError(f"unknown action {a.action}")
    return replace(st, robots=tuple(robots), step=st.step + 1), records


def legal_actions(r: RobotState) -> str:
    return MOVE if r.pending is not None else LOOK


# ---------------------------------------------------------------- invariants

PHASE1 = {
    SetLabel.NOT_UNIQUE,
    SetLabel.EMPTY,
    SetLabel.SEMI_EMPTY,
    SetLabel.ORIENTED_1,
    SetLabel.ORIENTED_2,
    SetLabel.SEMI_ORIENTED,
    SetLabel.UNDEFINED,
}
PHASE2 = {SetLabel.PR, SetLabel.LS, SetLabel.SP1, SetLabel.SP2, SetLabel.SP3, SetLabel.SP4, SetLabel.GATHERED}

# Label changes the progress rules allow (a label may always stay the same).
TRANSITIONS = {
    SetLabel.NOT_UNIQUE: PHASE1 | PHASE2,
    SetLabel.EMPTY: PHASE2,
    # with only two occupied rings the elected robot leaves the marker ring with
    # one node, which is already a landmark configuration
    SetLabel.SEMI_EMPTY: {SetLabel.ORIENTED_1, SetLabel.ORIENTED_2} | PHASE2,
    SetLabel.ORIENTED_2: {SetLabel.ORIENTED_1},
    SetLabel.ORIENTED_1: PHASE2,
    SetLabel.SEMI_ORIENTED: {SetLabel.ORIENTED_1, SetLabel.ORIENTED_2} | PHASE2,
    SetLabel.UNDEFINED: {SetLabel.ORIENTED_1, SetLabel.ORIENTED_2},
    # the sp patterns are the landmark configurations without stray rings, so the
    # last stray robot arriving can land in one of them directly
    SetLabel.PR: {SetLabel.LS, SetLabel.SP1, SetLabel.SP2, SetLabel.SP3},
    SetLabel.LS: {SetLabel.SP1, SetLabel.SP2, SetLabel.SP3},
    # over a 1.block of three the contracted ring already forms the last pattern
    SetLabel.SP1: {SetLabel.SP2, SetLabel.SP3},
    # a block of five closes into a spread block of three, which Align tidies
    SetLabel.SP2: {SetLabel.SP3, SetLabel.LS},
    SetLabel.SP3: {SetLabel.SP4},
    SetLabel.SP4: {SetLabel.GATHERED},
    SetLabel.GATHERED: set(),
}


@dataclass(frozen=True)
class Violation:
    invariant: str
    detail: str


def _max_ring_count(nb: list) -> int:
    top = max(nb)
    return sum(1 for x in nb if x == top)


def _is_border_of_long_block(occ: frozenset, node: Coord, ell: int) -> bool:
    """node ends a run of ell-1 consecutive occupied nodes on its ring."""
    return Coord(node.ring, (node.pos + 1) % ell) not in occ or Coord(node.ring, (node.pos - 1) % ell) not in occ


def invariant_hooks(before: SimState, after: SimState) -> list[Violation]:
    out: list[Violation] = []
    dims = before.dims
    occ_b, occ_a = before.occupancy(), after.occupancy()
    if occ_b == occ_a and before.counts() == after.counts():
        return out
    cb, ca = _classify(dims, occ_b), _classify(dims, occ_a)
    lb, la = cb.label, ca.label
    counts_b, counts_a = before.counts(), after.counts()
    towers_b = {c for c, n in counts_b.items() if n >= 2}
    towers_a = {c for c, n in counts_a.items() if n >= 2}

    if lb is SetLabel.NOT_UNIQUE and la in PHASE1 and not is_rigid(occ_a, dims):
        out.append(Violation("rigidity", f"{lb.value} -> {la.value} reached a configuration that is not rigid"))

    if not before.unique_seen and lb is SetLabel.NOT_UNIQUE and max(cb.pred.nb) < dims.ell and towers_a - towers_b:
        out.append(Violation("multiplicity-before-unique", f"new multiplicity at {sorted(map(tuple, towers_a - towers_b))}"))

    if not before.unique_seen and la is not SetLabel.NOT_UNIQUE:
        # first configuration with a unique maximal ring
        for c in sorted(towers_a):
            nb = ring_counts(occ_a, dims.big_l)[c.ring]
            others = [t for t in towers_a if t.ring == c.ring]
            ok = len(others) == 1 and nb == dims.ell - 1 and counts_a[c] == 2 and _is_border_of_long_block(occ_a, c, dims.ell)
            if not ok:
                out.append(Violation("multiplicity-placement", f"multiplicity at {tuple(c)} when Unique first holds"))

    if before.unique_seen and la is not SetLabel.GATHERED:
        if _max_ring_count(ring_counts(occ_a, dims.big_l)) > _max_ring_count(ring_counts(occ_b, dims.big_l)):
            out.append(Violation("max-ring-count", f"{lb.value} -> {la.value} increased the number of maximal rings"))

    if before.phase2_seen and la in PHASE1:
        out.append(Violation("phase-order", f"{lb.value} -> {la.value} re-entered the preparation phase"))

    if lb != la and la not in TRANSITIONS[lb]:
        out.append(Violation("transition", f"{lb.value} -> {la.value} is not a legal transition"))

    if lb in PHASE1 and la in PHASE2 and la is not SetLabel.GATHERED:
        t = ca.pred.target
        m = ca.pred.l_max if t is None else t.l_max
        on_max = [c for c in towers_a if m is not None and c.ring == m]
        allowed = {Coord(m, t.v_target.pos)} if t is not None else set()
        if len(on_max) > 1 or any(c not in allowed for c in on_max):
            out.append(Violation("phase1-exit-multiplicity", f"multiplicities on the maximal ring at {sorted(map(tuple, on_max))}"))

    if la in (SetLabel.SP2, SetLabel.SP3):
        t = ca.pred.target
        bad = [c for c in towers_a if c.ring == t.l_max and c.pos != t.v_target.pos]
        if bad:
            out.append(Violation("landmark-multiplicity", f"multiplicity away from the landmark column at {sorted(map(tuple, bad))}"))

    if la is SetLabel.SP4:
        nodes = sorted(occ_a)
        ps = {c.pos for c in nodes}
        ends = [c for c in nodes if len({(c.pos + 1) % dims.ell, (c.pos - 1) % dims.ell} & ps) < 2]
        if len(nodes) == 3 and any(c in towers_a for c in ends):
            out.append(Violation("final-borders", "a border of the final block of three hosts a multiplicity"))
        if len(nodes) == 2 and all(c in towers_a for c in nodes):
            out.append(Violation("final-borders", "both nodes of the final pair host a multiplicity"))
    return out


def advance_monitor(before: SimState, after: SimState) -> SimState:
    la = _label_of(after)
    return replace(
        after,
        unique_seen=before.unique_seen or la is not SetLabel.NOT_UNIQUE,
        phase2_seen=before.phase2_seen or la in PHASE2,
    )


# ---------------------------------------------------------------- schedulers


@dataclass
class SchedulerPolicy:
    """Chooses which robots act each step.

    kind is one of "random" (seeded adversary), "greedy" (everyone acts every
    step) or "scripted" (replays a list of activation lists).
    """

    kind: str = "random"
    seed: int = 0
    fairness_bound: int = 3
    p_activate: float = 0.5
    script: list = field(default_factory=list)

    def __post_init__(self):
        if self.fairness_bound < 1:
            raise ValueError("fairness bound must be positive")
        self._rng = random.Random(self.seed)

    def window(self, k: int) -> int:
        return self.fairness_bound * k

    def choose(self, st: SimState) -> list[Activation]:
        if self.kind == "scripted":
            if st.step >= len(self.script):
                raise IndexError("script exhausted")
            return list(self.script[st.step])
        if self.kind == "greedy":
            return [Activation(r.id, legal_actions(r)) for r in st.robots]
        if self.kind != "random":
            raise ValueError(f"unknown scheduler kind {self.kind}")
        w = self.window(st.k)
        acts = []
        for r in st.robots:
            due = st.step + 1 - r.last_activated >= w
            if due or self._rng.random() < self.p_activate:
                acts.append(Activation(r.id, legal_actions(r), self._rng.randrange(1 << 30)))
        if not acts:
            r = self._rng.choice(st.robots)
            acts.append(Activation(r.id, legal_actions(r), self._rng.randrange(1 << 30)))
        return acts


# ---------------------------------------------------------------- runs


@dataclass
class RunResult:
    outcome: str  # "gathered", "timeout" or "violation"
    steps: int
    final: SimState
    node: Optional[Coord] = None
    violations: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    labels: dict = field(default_factory=dict)


def trace_header(st: SimState, policy: SchedulerPolicy) -> dict:
    return {
        "type": "init",
        "dims": {"ell": st.dims.ell, "L": st.dims.big_l},
        "robots": [[r.at.ring, r.at.pos] for r in st.robots],
        "scheduler": {"kind": policy.kind, "seed": policy.seed, "fairness_bound": policy.fairness_bound},
    }


def run(st: SimState, policy: SchedulerPolicy, max_steps: int = 10_000, hooks: bool = True, record: bool = True) -> RunResult:
    trace = [trace_header(st, policy)] if record else []
    labels: dict = {}
    w = policy.window(st.k)
    while True:
        if st.gathered():
            return RunResult("gathered", st.step, st, next(iter(st.occupancy())), trace=trace, labels=labels)
        if st.step >= max_steps:
            return RunResult("timeout", st.step, st, trace=trace, labels=labels)
        lab = _label_of(st).value
        labels[lab] = labels.get(lab, 0) + 1
        acts = policy.choose(st)
        try:
            nxt, recs = step(st, acts)
        except ProtocolFailure as e:
            return RunResult("violation", st.step, st, violations=[Violation("protocol", str(e))], trace=trace, labels=labels)
        late = [r.id for r in nxt.robots if nxt.step - r.last_activated >= w + 1]
        found = invariant_hooks(st, nxt) if hooks else []
        if late:
            found.append(Violation("fairness", f"robots {late} idle for more than {w} steps"))
        nxt = advance_monitor(st, nxt)
        if record:
            trace.append({"type": "step", "step": nxt.step, "activations": recs, "occupancy": nxt.sparse()})
        st = nxt
        if found:
            return RunResult("violation", st.step, st, violations=found, trace=trace, labels=labels)


# ---------------------------------------------------------------- traces


def write_trace(trace: list, path) -> None:
    with open(path, "w") as fh:
        for rec in trace:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trace(path) -> list:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def script_from_trace(trace: list) -> tuple[SimState, SchedulerPolicy]:
    """Rebuild the initial state and a scripted scheduler that replays the trace."""
    head = trace[0]
    if head.get("type") != "init":
        raise ValueError("trace does not start with an init record")
    dims = TorusDims(head["dims"]["ell"], head["dims"]["L"])
    st = initial_state(dims, head["robots"], allow_nonrigid=True)
    script = []
    for rec in trace[1:]:
        script.append([_replay_activation(a) for a in rec["activations"]])
    sched = head.get("scheduler", {})
    return st, SchedulerPolicy("scripted", sched.get("seed", 0), sched.get("fairness_bound", 3), script=script)


def _replay_activation(a: dict) -> Activation:
    if a["action"] == MOVE:
        return Activation(a["robot_id"], MOVE)
    return ReplayLook(a["robot_id"], LOOK, 0, tuple(a["to"]) if a["to"] is not None else None)


@dataclass(frozen=True)
class ReplayLook(Activation):
    """A Look whose adversary choice is the recorded destination."""

    wanted: Optional[tuple] = None


def replay(trace: list, hooks: bool = True) -> RunResult:
    st, policy = script_from_trace(trace)
    steps = len(policy.script)
    out = [trace[0]]
    while st.step < steps:
        acts = []
        for a in policy.script[st.step]:
            if isinstance(a, ReplayLook):
                opts = look_options(st, st.robots[a.robot_id])
                if a.wanted is None:
                    if opts:
                        raise ValueError(f"step {st.step}: robot {a.robot_id} recorded Stay but may move")
                    idx = 0
                else:
                    if Coord(*a.wanted) not in opts:
                        raise ValueError(f"step {st.step}: recorded destination {a.wanted} is not enabled")
                    idx = opts.index(Coord(*a.wanted))
                acts.append(Activation(a.robot_id, LOOK, idx))
            else:
                acts.append(a)
        nxt, recs = step(st, acts)
        found = invariant_hooks(st, nxt) if hooks else []
        nxt = advance_monitor(st, nxt)
        out.append({"type": "step", "step": nxt.step, "activations": recs, "occupancy": nxt.sparse()})
        st = nxt
        if found:
            return RunResult("violation", st.step, st, violations=found, trace=out)
    if st.gathered():
        return RunResult("gathered", st.step, st, next(iter(st.occupancy())), trace=out)
    return RunResult("timeout", st.step, st, trace=out)
