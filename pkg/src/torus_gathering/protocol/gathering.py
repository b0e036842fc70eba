"""Gathering phase: from a landmark configuration down to a single node."""
from __future__ import annotations

from ..classify import SetLabel, sp2_kind
from ..torus_core import Coord, neighbor_ring
from .align import align_enabled
from .base import SINGLE_ONLY, Ctx, EnabledSet, ModelViolation, PreconditionError


def gathering_enabled(ctx: Ctx) -> EnabledSet:
    cl = ctx.cls
    if cl.label == SetLabel.GATHERED:
        return EnabledSet(rule="gathered")
    if cl.phase != 2:
        raise PreconditionError(f"{cl.label} belongs to the preparation phase")
    handler = {
        SetLabel.PR: c_pr,
        SetLabel.LS: c_ls,
        SetLabel.SP1: sp1,
        SetLabel.SP2: sp2,
        SetLabel.SP3: sp3,
        SetLabel.SP4: sp4,
    }[cl.label]
    return handler(ctx)


def _closest_to(ctx: Ctx, robots: list, col: int) -> list:
    dmin = min(ctx.pdist(r.pos, col) for r in robots)
    return [r for r in robots if ctx.pdist(r.pos, col) == dmin]


def c_pr(ctx: Ctx) -> EnabledSet:
    t = ctx.cls.pred.target
    v = t.v_target
    li = (t.l_target + t.up) % ctx.L
    en = EnabledSet(rule="pr")
    if ctx.nb[li] > 0 and v not in ctx.occ and ctx.nb[t.l_max] == 3:
        # filling the hole of a 2.block on the target ring would give it as many
        # nodes as the maximal ring; join one of its two robots instead
        return _pr_join_sides(ctx, li, t)
    if ctx.nb[li] > 0:
        ui = Coord(li, v.pos)
        if ui in ctx.occ:
            en.rule = "pr/join-target"
            en.add(ui, [v])
            return en
        if ctx.nb[li] < ctx.ell - 1:
            en.rule = "pr/approach"
            for r in _closest_to(ctx, ctx.robots(li), v.pos):
                en.add(r, [Coord(li, p) for p in ctx.pos_step(r.pos, v.pos)])
            return en
        # the only hole of the ring is u_i: its two neighbours may fill it,
        # but never by breaking up a multiplicity
        en.rule = "pr/fill-hole"
        for s in (1, -1):
            en.add(Coord(li, (v.pos + s) % ctx.ell), [ui], SINGLE_ONLY)
        return en
    lk = neighbor_ring(ctx.occ, ctx.dims, t.l_target, t.up)
    en.rule = "pr/descend"
    for r in _closest_to(ctx, ctx.robots(lk), v.pos):
        en.add(r, [Coord((lk - t.up) % ctx.L, r.pos)])
    return en


def _pr_join_sides(ctx: Ctx, li: int, t) -> EnabledSet:
    cols = [(t.v_target.pos + s) % ctx.ell for s in (1, -1)]
    en = EnabledSet(rule="pr/join-side")
    below = [Coord(li, c) for c in cols if Coord(li, c) in ctx.occ]
    if below:
        for x in below:
            en.add(x, [Coord(t.l_target, x.pos)])
        return en
    en.rule = "pr/approach-side"
    robots = ctx.robots(li)
    dmin = min(ctx.pdist(r.pos, c) for r in robots for c in cols)
    for r in robots:
        goals = [c for c in cols if ctx.pdist(r.pos, c) == dmin]
        dests = {p for c in goals for p in ctx.pos_step(r.pos, c)}
        en.add(r, [Coord(li, p) for p in dests])
    return en


def c_ls(ctx: Ctx) -> EnabledSet:
    t = ctx.cls.pred.target
    m, v = t.l_max, t.v_target
    nbm = ctx.nb[m]
    if nbm <= 5:
        out = align_enabled(ctx, m, t.l_target)
        out.rule = "ls/" + out.rule
        return out
    en = EnabledSet(rule="ls/funnel")
    u3 = Coord(m, v.pos)
    side = [Coord(m, (v.pos + s) % ctx.ell) for s in (1, -1)]
    occ_side = [x for x in side if x in ctx.occ]
    if u3 in ctx.occ:
        if len(occ_side) == 1:
            en.add(occ_side[0], [u3])
        else:
            en.add(u3, [v])
        return en
    robots = ctx.robots(m)
    close = _closest_to(ctx, robots, v.pos)
    if len(close) == 2:
        for r in close:
            en.add(r, [Coord(m, p) for p in ctx.pos_step(r.pos, v.pos)])
        return en
    (r,) = close
    d = ctx.pdist(r.pos, v.pos)
    # the robot bounding the same hole from the other side, one step further away
    o = (r.pos - v.pos) % ctx.ell
    direction = -1 if o < ctx.ell - o else 1
    other = None
    x = v.pos
    for _ in range(ctx.ell):
        x = (x + direction) % ctx.ell
        if Coord(m, x) in ctx.occ:
            other = Coord(m, x)
            break
    if other is not None and other != r and ctx.pdist(other.pos, v.pos) == d + 1:
        en.add(other, [Coord(m, (other.pos - direction) % ctx.ell)])
        return en
    en.add(r, [Coord(m, p) for p in ctx.pos_step(r.pos, v.pos)])
    return en


def sp1(ctx: Ctx) -> EnabledSet:
    a, b, u, kind = ctx.cls.sp1
    en = EnabledSet(rule=f"sp-1/{kind}")
    ub = Coord(b, u)
    # the smaller ring contracts onto the node facing u
    for s in (1, -1):
        x = Coord(b, (u + s) % ctx.ell)
        if x in ctx.occ:
            en.add(x, [ub])
    return en


def sp2(ctx: Ctx) -> EnabledSet:
    t = ctx.cls.pred.target
    m, v = t.l_max, t.v_target.pos
    kind = sp2_kind(ctx.pos(m), v, ctx.ell)
    en = EnabledSet(rule=f"sp-2/{kind}")
    c = lambda o: Coord(m, (v + o) % ctx.ell)  # noqa: E731
    if kind in (1, 2):
        # two blocks of two close the hole between them; a block of five
        # contracts its second and fourth robots onto the middle
        en.add(c(-1), [c(0)])
        en.add(c(1), [c(0)])
        return en
    if kind == 3:
        rel = {(p - v) % ctx.ell for p in ctx.pos(m)}
        s = 1 if 1 in rel else -1  # side of the block of three
        en.add(c(s), [c(0)])
        return en
    raise ModelViolation("maximal ring does not match a closing pattern")


def sp3(ctx: Ctx) -> EnabledSet:
    t = ctx.cls.pred.target
    en = EnabledSet(rule="sp-3")
    en.add(t.v_target, [Coord(t.l_max, t.v_target.pos)])
    return en


def sp4(ctx: Ctx) -> EnabledSet:
    (ring,) = [i for i in range(ctx.L) if ctx.nb[i] > 0]
    ps = ctx.pos(ring)
    en = EnabledSet(rule="sp-4")
    s = set(ps)
    if len(ps) == 3:
        (mid,) = [p for p in ps if (p - 1) % ctx.ell in s and (p + 1) % ctx.ell in s]
        for p in ps:
            if p != mid:
                en.add(Coord(ring, p), [Coord(ring, mid)])
        return en
    a, b = ps
    # only the lone robot joins the tower
    en.add(Coord(ring, a), [Coord(ring, b)], SINGLE_ONLY)
    en.add(Coord(ring, b), [Coord(ring, a)], SINGLE_ONLY)
    return en
