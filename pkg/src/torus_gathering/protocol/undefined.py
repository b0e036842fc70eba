"""Preparation moves when both rings next to the maximal ring hold several robots.

The configuration obtained by ignoring one or both of those rings (Gamma) is
used to single out a gathering node; its symmetry axis, when there is exactly
one, splits the work into node-edge, node-node and edge-edge cases.
"""
from __future__ import annotations

from ..classify import (
    PreconditionError,
    SetLabel,
    analyse_gamma,
    classify_occ,
    crossing_for_anchor,
    gamma,
    is_rigid,
)
from ..torus_core import Coord
from ..view import Occupancy, elect_by_key
from .base import SINGLE_ONLY, Ctx, EnabledSet, ModelViolation


def undefined_enabled(ctx: Ctx) -> EnabledSet:
    cl = ctx.cls
    if cl.label != SetLabel.UNDEFINED:
        raise PreconditionError(f"{cl.label} is not handled here")
    li, lk = cl.li, cl.lk
    if ctx.nb[li] > ctx.nb[lk]:
        li, lk = lk, li
    if ctx.nb[li] < ctx.nb[lk]:
        return _unequal(ctx, li, lk)
    return _equal(ctx, li, lk)


# --- helpers ---------------------------------------------------------------------------

def _gamma_elect(g, nodes) -> Coord:
    return elect_by_key(Occupancy(g.dims, g.occupied), nodes)


def _approach(ctx: Ctx, ring: int, u: int, en: EnabledSet, elect: bool = False):
    """The robots of a ring closest to column u (not already on it) step toward it."""
    robots = [r for r in ctx.robots(ring) if r.pos != u]
    if not robots:
        return
    dmin = min(ctx.pdist(r.pos, u) for r in robots)
    close = [r for r in robots if ctx.pdist(r.pos, u) == dmin]
    if elect and len(close) > 1:
        close = [ctx.elect(close)]
    for r in close:
        en.add(r, [Coord(ring, p) for p in ctx.pos_step(r.pos, u)])


def _closest_pairs(ctx: Ctx, ring: int, targets: list[int]) -> list[tuple]:
    """(distance, robot, target) for every robot of the ring not on a target, at its nearest target."""
    out = []
    for r in ctx.robots(ring):
        if r.pos in targets:
            continue
        d = min(ctx.pdist(r.pos, t) for t in targets)
        out.append((d, r, [t for t in targets if ctx.pdist(r.pos, t) == d]))
    return out


def _move_toward_targets(ctx: Ctx, ring: int, r: Coord, targets: list, en: EnabledSet):
    dests = set()
    for t in targets:
        dests.update(ctx.pos_step(r.pos, t))
    en.add(r, [Coord(ring, p) for p in dests])


def _adjacent(ctx: Ctx, c: Coord) -> list[Coord]:
    return [Coord(c.ring, (c.pos + s) % ctx.ell) for s in (1, -1)]


# --- edge-edge geometry on one ring ---------------------------------------------------------

class EdgeSides:
    """The two arcs a ring is cut into by an axis crossing two of its edges."""

    def __init__(self, ctx: Ctx, ring: int, crossing):
        ell = ctx.ell
        (u1, u2), (u3, u4) = crossing.edges
        self.ctx = ctx
        self.ring = ring
        self.u1, self.u2, self.u3, self.u4 = u1, u2, u3, u4
        self.U = (u1, u2, u3, u4)
        self.partner = {u1: u2, u2: u1, u3: u4, u4: u3}
        self.same_side = {u1: u3, u3: u1, u2: u4, u4: u2}
        step = -1 if (u2 - u1) % ell == 1 else 1
        a = [u1]
        while a[-1] != u3:
            a.append((a[-1] + step) % ell)
        b = [u2]
        while b[-1] != u4:
            b.append((b[-1] - step) % ell)
        self.arcs = {"A": a, "B": b}
        self.side = {p: "A" for p in a}
        self.side.update({p: "B" for p in b})
        self.index = {p: a.index(p) for p in a}
        self.index.update({p: b.index(p) for p in b})
        pos = set(ctx.pos(ring))
        self.pos = pos
        self.occ_u = [u for u in self.U if u in pos]
        self.interior = {s: [p for p in arc[1:-1] if p in pos] for s, arc in self.arcs.items()}

    def along(self, p: int, q: int) -> int:
        return abs(self.index[p] - self.index[q])

    def step_toward(self, p: int, q: int) -> int:
        arc = self.arcs[self.side[p]]
        i, j = self.index[p], self.index[q]
        return arc[i + (1 if j > i else -1)]

    def free(self, side: str) -> bool:
        return not self.interior[side]

    def coord(self, p: int) -> Coord:
        return Coord(self.ring, p)

    def outward(self, u: int) -> int:
        """Neighbour of an axis node away from its partner across the axis."""
        ell = self.ctx.ell
        for q in ((u + 1) % ell, (u - 1) % ell):
            if q != self.partner[u]:
                return q
        raise ModelViolation("ring too short for an edge-edge crossing")

    def kind2(self) -> str:
        a, b = self.occ_u
        if self.partner[a] == b:
            return "I"
        if self.side[a] == self.side[b]:
            return "II"
        return "III"


def edge_edge_moves(ctx: Ctx, es: EdgeSides) -> EnabledSet:
    """Funnel the robots of one ring toward the crossing edges."""
    en = EnabledSet(rule=f"undefined/edge-edge/{len(es.occ_u)}")
    occ_u = es.occ_u
    c = es.coord
    if len(occ_u) == 4:
        u = ctx.elect([c(x) for x in occ_u])
        en.add(u, [c(es.partner[u.pos])])
        return en
    if len(occ_u) == 3:
        (e,) = [x for x in es.U if x not in occ_u]
        target = es.same_side[e]
        inner = es.interior[es.side[e]]
        if inner:
            best = min(inner, key=lambda p: es.along(p, target))
            en.add(c(best), [c(es.step_toward(best, target))])
        else:
            pe = es.partner[e]
            en.add(c(pe), [c(es.outward(pe))])
        return en
    if len(occ_u) == 2:
        kind = es.kind2()
        if kind == "I":
            x, y = occ_u
            by_side = {es.side[x]: x, es.side[y]: y}
            sa, sb = es.interior["A"], es.interior["B"]
            if not sa and not sb:
                u = ctx.elect([c(x), c(y)])
                en.add(u, [c(es.partner[u.pos])])
                return en
            if not sa or not sb:
                full = "A" if sa else "B"
                other = "B" if full == "A" else "A"
                en.add(c(by_side[other]), [c(by_side[full])])
                return en
            far = {s: max(es.interior[s], key=lambda p: es.along(p, by_side[s])) for s in "AB"}
            dist = {s: es.along(far[s], by_side[s]) for s in "AB"}
            if dist["A"] == dist["B"]:
                u = ctx.elect([c(far["A"]), c(far["B"])])
                s = es.side[u.pos]
                en.add(u, [c(es.step_toward(u.pos, by_side[s]))])
                return en
            s = "B" if dist["A"] > dist["B"] else "A"
            near = min(es.interior[s], key=lambda p: es.along(p, by_side[s]))
            en.add(c(near), [c(es.step_toward(near, by_side[s]))])
            return en
        # two axis nodes that are not partners: the one with the larger view steps outward
        u = ctx.elect([c(x) for x in occ_u])
        en.add(u, [c(es.outward(u.pos))])
        return en
    if len(occ_u) == 1:
        (x,) = occ_u
        inner = es.interior[es.side[x]]
        if inner:
            best = min(inner, key=lambda p: es.along(p, x))
            en.add(c(best), [c(es.step_toward(best, x))])
        else:
            en.add(c(x), [c(es.partner[x])])
        return en
    best = None
    cands: dict = {}
    for s, arc in es.arcs.items():
        ends = (arc[0], arc[-1])
        for p in es.interior[s]:
            d = min(es.along(p, e) for e in ends)
            goals = [e for e in ends if es.along(p, e) == d]
            if best is None or d < best:
                best, cands = d, {}
            if d == best:
                cands[c(p)] = [c(es.step_toward(p, g)) for g in goals]
    if not cands:
        raise ModelViolation("no robot on the ring to funnel")
    r = ctx.elect(cands) if len(cands) > 1 else next(iter(cands))
    en.add(r, cands[r])
    return en


# --- fewer robots on one side -------------------------------------------------------------

def _unequal(ctx: Ctx, li: int, lk: int) -> EnabledSet:
    g = gamma(ctx.occ, li, lk, ctx.dims)
    ga = analyse_gamma(g)
    en = EnabledSet(rule=f"undefined/{ga.subcase}")
    if ga.subcase == "rigid":
        u = _gamma_elect(g, [Coord(li, p) for p in range(ctx.ell)])
        _approach(ctx, li, u.pos, en)
        return en
    if ga.subcase == "reduce":
        return _reduce(ctx, g, li, lk)
    cr = crossing_for_anchor(ga.axis.anchor2, ctx.ell)
    if ga.subcase == "node-edge":
        _approach(ctx, li, cr.nodes[0], en)
        return en
    if ga.subcase == "node-node":
        u1, u2 = cr.nodes
        occ = [u for u in (u1, u2) if Coord(li, u) in ctx.occ]
        if len(occ) == 2:
            u = ctx.elect([Coord(li, u1), Coord(li, u2)])
            en.add(u, _adjacent(ctx, u))
        elif len(occ) == 1:
            # not covered by the casework: gather on the occupied axis node
            _approach(ctx, li, occ[0], en)
        else:
            pairs = _closest_pairs(ctx, li, [u1, u2])
            dmin = min(d for d, _, _ in pairs)
            close = {r: ts for d, r, ts in pairs if d == dmin}
            r = ctx.elect(close) if len(close) > 1 else next(iter(close))
            _move_toward_targets(ctx, li, r, close[r], en)
        return en
    return edge_edge_moves(ctx, EdgeSides(ctx, li, cr))


# --- same number of robots on both sides ---------------------------------------------------

def _equal(ctx: Ctx, li: int, lk: int) -> EnabledSet:
    m = ctx.cls.pred.l_max
    # the rings just beyond li and lk, walking away from the maximal ring
    out_i = (li + 1) % ctx.L if (li - m) % ctx.L == 1 else (li - 1) % ctx.L
    out_k = (lk + 1) % ctx.L if (lk - m) % ctx.L == 1 else (lk - 1) % ctx.L
    empty_i, empty_k = ctx.nb[out_i] == 0, ctx.nb[out_k] == 0
    en = EnabledSet(rule="undefined/equal")
    if empty_i or empty_k:
        moves = {}
        for ring, out, empty in ((li, out_i, empty_i), (lk, out_k, empty_k)):
            if empty:
                for r in ctx.robots(ring):
                    moves[r] = [Coord(out, r.pos)]
        r = ctx.elect(moves)
        en.rule = "undefined/equal/leave"
        en.add(r, moves[r])
        return en
    g = gamma(ctx.occ, li, lk, ctx.dims)
    ga = analyse_gamma(g)
    en.rule = f"undefined/equal/{ga.subcase}"
    if ga.subcase == "rigid":
        u = _gamma_elect(g, [Coord(r, p) for r in (li, lk) for p in range(ctx.ell)])
        if u not in ctx.occ and ctx.nb[u.ring] == ctx.ell - 1:
            for x in _adjacent(ctx, u):
                en.add(x, [u], SINGLE_ONLY)
        else:
            _approach(ctx, u.ring, u.pos, en)
        return en
    if ga.subcase == "reduce":
        return _reduce(ctx, g, li, lk)
    cr = crossing_for_anchor(ga.axis.anchor2, ctx.ell)
    if ga.subcase == "node-edge":
        u = cr.nodes[0]
        occ = [ring for ring in (li, lk) if Coord(ring, u) in ctx.occ]
        if len(occ) == 1:
            _approach(ctx, occ[0], u, en, elect=True)
            return en
        close = {}
        for ring in (li, lk):
            pairs = _closest_pairs(ctx, ring, [u])
            if pairs:
                dmin = min(d for d, _, _ in pairs)
                close.update({r: ts for d, r, ts in pairs if d == dmin})
        if len(occ) == 2:
            dmin = min(ctx.pdist(r.pos, u) for r in close)
            close = {r: ts for r, ts in close.items() if ctx.pdist(r.pos, u) == dmin}
        r = ctx.elect(close) if len(close) > 1 else next(iter(close))
        _move_toward_targets(ctx, r.ring, r, close[r], en)
        return en
    if ga.subcase == "node-node":
        return _equal_node_node(ctx, li, lk, cr.nodes, en)
    ring = select_ring_edge_edge(ctx, li, lk, cr)
    es = EdgeSides(ctx, ring, cr)
    if _rung1(es):
        # two neighbouring axis nodes with both arcs empty: one joins the other
        u = ctx.elect([es.coord(x) for x in es.occ_u])
        en.rule = "undefined/equal/edge-edge/merge"
        en.add(u, [es.coord(es.partner[u.pos])])
        return en
    out = edge_edge_moves(ctx, es)
    out.rule = "undefined/equal/" + out.rule.split("/", 1)[1]
    return out


def _equal_node_node(ctx: Ctx, li: int, lk: int, nodes, en: EnabledSet) -> EnabledSet:
    axis = [Coord(r, p) for r in (li, lk) for p in nodes]
    occ = [u for u in axis if u in ctx.occ]
    if len(occ) == 4:
        with_nb = [u for u in axis if any(x in ctx.occ for x in _adjacent(ctx, u))]
        if with_nb:
            u = ctx.elect(with_nb)
            en.add(u, [x for x in _adjacent(ctx, u) if x in ctx.occ])
        else:
            u = ctx.elect(axis)
            en.add(u, _adjacent(ctx, u))
        return en
    if len(occ) == 1:
        (u,) = occ
        _approach(ctx, u.ring, u.pos, en)
        return en
    if len(occ) == 3:
        (e,) = [u for u in axis if u not in ctx.occ]
        (mate,) = [u for u in occ if u.ring == e.ring]
        _approach(ctx, mate.ring, mate.pos, en)
        return en
    if len(occ) == 2:
        a, b = occ
        if a.ring == b.ring:
            u = ctx.elect(occ)
            en.add(u, _adjacent(ctx, u))
            return en
        close = {}
        for u in occ:
            pairs = [(d, r, ts) for d, r, ts in _closest_pairs(ctx, u.ring, [u.pos])]
            if pairs:
                dmin = min(d for d, _, _ in pairs)
                close.update({r: ts for d, r, ts in pairs if d == dmin})
        r = ctx.elect(close) if len(close) > 1 else next(iter(close))
        _move_toward_targets(ctx, r.ring, r, close[r], en)
        return en
    # no axis node occupied: walk toward the nearest one
    close = {}
    best = None
    for ring in (li, lk):
        for d, r, ts in _closest_pairs(ctx, ring, list(nodes)):
            if best is None or d < best:
                best, close = d, {}
            if d == best:
                close[r] = ts
    r = ctx.elect(close) if len(close) > 1 else next(iter(close))
    _move_toward_targets(ctx, r.ring, r, close[r], en)
    return en


# --- ring selection when the axis crosses edges of both rings ---------------------------------

def _rung1(es: EdgeSides) -> bool:
    return len(es.occ_u) == 2 and es.kind2() == "I" and es.free("A") and es.free("B")


def _rung2(es: EdgeSides) -> bool:
    if len(es.occ_u) != 1:
        return False
    s = es.side[es.occ_u[0]]
    o = "B" if s == "A" else "A"
    return es.free(o) and not es.free(s)


def _rung3(es: EdgeSides) -> bool:
    return len(es.occ_u) == 2 and es.kind2() == "I" and (es.free("A") or es.free("B"))


def _rung4(es: EdgeSides) -> bool:
    if len(es.occ_u) != 2 or es.kind2() != "II":
        return False
    s = es.side[es.occ_u[0]]
    o = "B" if s == "A" else "A"
    return es.free(o) and not es.free(s)


def _rung5(es: EdgeSides) -> bool:
    if len(es.occ_u) != 3:
        return False
    (e,) = [x for x in es.U if x not in es.occ_u]
    return es.free(es.side[e])


def _ring_of_largest(ctx: Ctx, nodes) -> int:
    return ctx.elect(nodes).ring


def _u_nodes(both) -> list[Coord]:
    return [es.coord(x) for es in both for x in es.occ_u]


def _nearest_robots(ctx: Ctx, es: EdgeSides, targets) -> list[tuple]:
    """(distance, robot) for robots of the ring not on a target, at their nearest target."""
    out = []
    for p in es.pos:
        if p in targets:
            continue
        out.append((min(ctx.pdist(p, t) for t in targets), es.coord(p)))
    return out


def _by_distance_then_view(ctx: Ctx, both, targets_of) -> int:
    rows = []
    for es in both:
        rows += _nearest_robots(ctx, es, targets_of(es))
    dmin = min(d for d, _ in rows)
    return _ring_of_largest(ctx, [r for d, r in rows if d == dmin])


def select_ring_edge_edge(ctx: Ctx, li: int, lk: int, crossing) -> int:
    """Pick the one ring whose robots gather when the axis of Gamma crosses edges of both rings."""
    both = [EdgeSides(ctx, li, crossing), EdgeSides(ctx, lk, crossing)]
    for rung in (_rung1, _rung2, _rung3, _rung4, _rung5):
        hits = [es for es in both if rung(es)]
        if len(hits) == 1:
            return hits[0].ring
        if len(hits) == 2:
            if rung is _rung1:
                raise ModelViolation("both rings hold neighbouring axis nodes with empty arcs")
            if rung is _rung2:
                return _by_distance_then_view(ctx, both, lambda es: es.occ_u)
            return _ring_of_largest(ctx, _u_nodes(both))
    ni, nk = (len(es.occ_u) for es in both)
    if ni != nk:
        return li if ni < nk else lk
    if ni == 4:
        return _ring_of_largest(ctx, _u_nodes(both))
    if ni == 3:
        counts = []
        for es in both:
            (e,) = [x for x in es.U if x not in es.occ_u]
            counts.append(len(es.interior[es.side[e]]))
        if counts[0] != counts[1]:
            return li if counts[0] < counts[1] else lk

        def near_mate(es):
            (e,) = [x for x in es.U if x not in es.occ_u]
            return [es.same_side[e]]

        return _by_distance_then_view(ctx, both, near_mate)
    if ni == 2:
        prio = {"I": 0, "II": 1, "III": 2}
        kinds = [prio[es.kind2()] for es in both]
        if kinds[0] != kinds[1]:
            return li if kinds[0] < kinds[1] else lk
        if kinds[0] == 0:
            f = [min(len(es.interior["A"]), len(es.interior["B"])) for es in both]
            if f[0] != f[1]:
                return li if f[0] < f[1] else lk
            return _by_distance_then_view(ctx, both, lambda es: es.occ_u)
        movers = []
        for es in both:
            movers += edge_edge_moves(ctx, es).sources()
        return _ring_of_largest(ctx, movers)
    if ni == 1:
        return _by_distance_then_view(ctx, both, lambda es: es.occ_u)
    return _by_distance_then_view(ctx, both, lambda es: list(es.U))


# --- Gamma with several symmetries ---------------------------------------------------------

def _reduce(ctx: Ctx, g, li: int, lk: int) -> EnabledSet:
    """One robot counted in Gamma slides to an empty neighbour on its ring.

    Among all such moves, prefer those whose result is rigid, keeps the same
    set and ring roles, and leaves Gamma with at most one reflection axis.
    """
    tiers: list[dict] = [{}, {}, {}, {}]
    for r in sorted(g.occupied):
        for x in _adjacent(ctx, r):
            if x in ctx.occ:
                continue
            occ2 = ctx.with_move(r, x)
            level = 3
            if is_rigid(occ2, ctx.dims):
                level = 2
                cl2 = classify_occ(occ2, ctx.dims)
                if cl2.label == SetLabel.UNDEFINED and {cl2.li, cl2.lk} == {li, lk}:
                    level = 1
                    sub = analyse_gamma(gamma(occ2, li, lk, ctx.dims)).subcase
                    if sub != "reduce":
                        level = 0
            tiers[level].setdefault(r, []).append(x)
    for tier in tiers:
        if tier:
            r = ctx.elect(tier)
            en = EnabledSet(rule="undefined/reduce")
            en.add(r, tier[r])
            return en
    raise ModelViolation("no robot of Gamma can slide on its ring")
