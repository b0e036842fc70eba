"""Preparation phase: reach a configuration with a unique maximal ring and a
landmark ring next to it."""
from __future__ import annotations

from ..classify import SetLabel, is_rigid, symmetry_axes
from ..torus_core import Coord, TorusDims, dist, neighbors, neighbor_ring, ring_blocks, ring_counts
from .align import align_enabled, aligned
from .base import Ctx, EnabledSet, ModelViolation, PreconditionError, steps_toward
from . import undefined


def _rigid(occ: frozenset, dims: TorusDims) -> bool:
    return is_rigid(occ, dims)


def _n_maximal(occ: frozenset, dims: TorusDims) -> int:
    nb = ring_counts(occ, dims.big_l)
    top = max(nb)
    return sum(1 for v in nb if v == top)


def preparation_enabled(ctx: Ctx) -> EnabledSet:
    cl = ctx.cls
    if cl.phase != 1:
        raise PreconditionError(f"{cl.label} belongs to the gathering phase")
    handler = {
        SetLabel.NOT_UNIQUE: not_unique,
        SetLabel.EMPTY: c_empty,
        SetLabel.SEMI_EMPTY: semi_empty,
        SetLabel.ORIENTED_1: oriented_1,
        SetLabel.ORIENTED_2: oriented_2,
        SetLabel.SEMI_ORIENTED: semi_oriented,
        SetLabel.UNDEFINED: undefined.undefined_enabled,
    }[cl.label]
    return handler(ctx)


# --- no unique maximal ring ------------------------------------------------------

def not_unique(ctx: Ctx) -> EnabledSet:
    nb = ctx.nb
    top = max(nb)
    maxes = [i for i in range(ctx.L) if nb[i] == top]
    en = EnabledSet(rule="not-unique")
    if top == ctx.ell:
        # full maximal rings: one robot steps onto an occupied neighbour on its
        # ring, chosen so that the reached configuration stays rigid
        before = len(maxes)
        passing: dict = {}
        for i in maxes:
            for r in ctx.robots(i):
                for p in ((r.pos + 1) % ctx.ell, (r.pos - 1) % ctx.ell):
                    occ2 = ctx.with_move(r, Coord(i, p))
                    if _n_maximal(occ2, ctx.dims) < before and _rigid(occ2, ctx.dims):
                        passing.setdefault(r, []).append(Coord(i, p))
        if not passing:
            raise ModelViolation("no robot on a full ring keeps the configuration rigid")
        r = ctx.elect(passing)
        en.add(r, passing[r])
        return en
    rings = [i for i in range(ctx.L) if nb[i] > 0]
    if len(rings) == 2:
        # leave one of the two rings for an empty ring
        moves: dict = {}
        for i in maxes:
            for r in ctx.robots(i):
                for i2 in ((i + 1) % ctx.L, (i - 1) % ctx.L):
                    if nb[i2] == 0:
                        moves.setdefault(r, []).append(Coord(i2, r.pos))
        _elect_preferring_rigid(ctx, moves, en)
        return en
    # march toward the closest empty node of another maximal ring
    best = None
    steps: dict = {}
    for r in sorted(ctx.occ):
        targets = [Coord(i, p) for i in maxes if i != r.ring for p in range(ctx.ell) if Coord(i, p) not in ctx.occ]
        if not targets:
            continue
        dmin = min(dist(r, u, ctx.dims) for u in targets)
        near = [u for u in targets if dist(r, u, ctx.dims) == dmin]
        first = set()
        for x in neighbors(r, ctx.dims):
            if x in ctx.occ:
                continue
            if any(dist(x, u, ctx.dims) == dmin - 1 for u in near):
                first.add(x)
        if best is None or dmin < best:
            best = dmin
            steps = {}
        if dmin == best:
            steps[r] = sorted(first)
    if not steps:
        raise ModelViolation("no robot can approach a maximal ring")
    rigid_steps = {r: [x for x in xs if _rigid(ctx.with_move(r, x), ctx.dims)] for r, xs in steps.items()}
    rigid_steps = {r: xs for r, xs in rigid_steps.items() if xs}
    if rigid_steps:
        r = ctx.elect(rigid_steps)
        en.add(r, rigid_steps[r])
        return en
    # every closest robot would make the configuration symmetric: reason on the
    # configuration C2 the largest-view robot r of R would reach
    r = ctx.elect(steps)
    targets = [Coord(i, p) for i in maxes if i != r.ring for p in range(ctx.ell) if Coord(i, p) not in ctx.occ]
    near = [u for u in targets if dist(r, u, ctx.dims) == best]
    joins = [u for u in near if u in steps[r]]
    x = joins[0] if joins else steps[r][0]
    if not joins:
        # r would enter the column of u for the first time: the robot of u's ring
        # standing in r's column slides into u instead
        repairs: dict = {}
        for u in near:
            if x.pos != u.pos or r.pos == u.pos:
                continue
            t = Coord(u.ring, r.pos)
            if t in ctx.occ:
                repairs.setdefault(t, []).append(u)
        if repairs:
            t = ctx.elect(repairs)
            en.rule = "not-unique/column-repair"
            en.add(t, repairs[t])
            return en
        raise ModelViolation("closest robot would create a symmetric configuration away from the target column")
    u = joins[0]
    occ2 = ctx.with_move(r, x)
    nb2 = ring_counts(occ2, ctx.L)
    moves = {}
    if sum(1 for v in nb2 if v > 0) == 2:
        en.rule = "not-unique/leave-two-rings"
        for i in maxes:
            for q in ctx.robots(i):
                for i2 in ((i + 1) % ctx.L, (i - 1) % ctx.L):
                    if nb[i2] == 0:
                        moves.setdefault(q, []).append(Coord(i2, q.pos))
    else:
        m2 = u.ring
        axes = symmetry_axes(occ2, ctx.dims)
        if any(a.orientation == "parallel" and a.anchor2 == (2 * m2) % ctx.L for a in axes):
            en.rule = "not-unique/slide-mirrored-ring"
            for i in maxes:
                if i == m2:
                    continue
                for q in ctx.robots(i):
                    free = [Coord(i, p) for p in ((q.pos + 1) % ctx.ell, (q.pos - 1) % ctx.ell) if Coord(i, p) not in ctx.occ]
                    if free:
                        moves[q] = free
        else:
            en.rule = "not-unique/merge-blocks"
            rings_t = [i for i in range(ctx.L) if nb[i] > 0 and i != u.ring]
            for i in rings_t:
                ps = ctx.pos(i)
                if _two_blocks_one_hole(ps, ctx.ell):
                    continue
                blks = ring_blocks(ps, ctx.ell, 1)
                big = max(size for _, size in blks)
                members = {(st + t) % ctx.ell for st, size in blks if size == big for t in range(size)}
                if len(members) == len(ps):
                    continue
                dmin = min(ctx.pdist(p, q) for p in ps if p not in members for q in members)
                for p in ps:
                    if p in members:
                        continue
                    goals = [q for q in members if ctx.pdist(p, q) == dmin]
                    if goals:
                        moves[Coord(i, p)] = sorted({Coord(i, y) for g in goals for y in ctx.pos_step(p, g)})
            if not moves:
                for i in rings_t:
                    for q in ctx.robots(i):
                        free = [Coord(i, p) for p in ((q.pos + 1) % ctx.ell, (q.pos - 1) % ctx.ell) if Coord(i, p) not in ctx.occ]
                        if free:
                            moves[q] = free
    if not moves:
        raise ModelViolation("no symmetry-free move toward a maximal ring")
    q = ctx.elect(moves)
    en.add(q, moves[q])
    return en


def _two_blocks_one_hole(ps: list[int], ell: int) -> bool:
    """Two 1.blocks separated by exactly one empty node on each side."""
    blks = ring_blocks(ps, ell, 1)
    return len(blks) == 2 and len(ps) == ell - 2


def _elect_preferring_rigid(ctx: Ctx, moves: dict, en: EnabledSet):
    good = {r: [x for x in xs if _rigid(ctx.with_move(r, x), ctx.dims)] for r, xs in moves.items()}
    good = {r: xs for r, xs in good.items() if xs}
    pool = good or {r: xs for r, xs in moves.items() if xs}
    if not pool:
        raise ModelViolation("no admissible move")
    r = ctx.elect(pool)
    en.add(r, pool[r])


# --- unique maximal ring ------------------------------------------------------------

def _up(ctx: Ctx, m: int, ring: int) -> int:
    return 1 if (m + 1) % ctx.L == ring else -1


def c_empty(ctx: Ctx) -> EnabledSet:
    m = ctx.cls.pred.l_max
    en = EnabledSet(rule="empty")
    others = [r for r in ctx.occ if r.ring != m]
    if not others:
        r = ctx.elect(ctx.robots(m))
        en.add(r, [Coord((m + 1) % ctx.L, r.pos), Coord((m - 1) % ctx.L, r.pos)])
        return en
    dmin = min(ctx.rdist(r.ring, m) for r in others)
    close = [r for r in others if ctx.rdist(r.ring, m) == dmin]
    r = ctx.elect(close)
    en.add(r, [Coord(i, r.pos) for i in ctx.ring_step(r.ring, m)])
    return en


def _ring_gaps(pos: list[int], ell: int) -> dict:
    """For each robot, the gap to the next robot going + and going -."""
    ps = sorted(pos)
    out = {}
    n = len(ps)
    for t, p in enumerate(ps):
        nxt = ps[(t + 1) % n]
        prv = ps[(t - 1) % n]
        out[p] = ((nxt - p) % ell or ell, (p - prv) % ell or ell)
    return out


def semi_empty(ctx: Ctx) -> EnabledSet:
    cl = ctx.cls
    m, li, lk = cl.pred.l_max, cl.li, cl.lk
    up = _up(ctx, m, lk)
    nbk = ctx.nb[lk]
    en = EnabledSet(rule="semi-empty")
    if nbk == 2 or nbk > 3:
        ln = neighbor_ring(ctx.occ, ctx.dims, li, -up)
        r = ctx.elect(ctx.robots(ln))
        en.add(r, [Coord((ln + up) % ctx.L, r.pos)])
        return en
    # three robots on lk that are not a 1.block: bring them together
    gaps = _ring_gaps(ctx.pos(lk), ctx.ell)
    mids = [p for p, (gp, gm) in gaps.items() if gp == gm]
    if len(mids) == 1:
        p = mids[0]
        en.add(Coord(lk, p), [Coord(lk, (p + 1) % ctx.ell), Coord(lk, (p - 1) % ctx.ell)])
        return en
    if len(mids) == 3:
        r = ctx.elect(ctx.robots(lk))
        en.add(r, [Coord(lk, (r.pos + 1) % ctx.ell), Coord(lk, (r.pos - 1) % ctx.ell)])
        return en
    # a unique closest pair; the third robot walks toward it along its shorter empty side
    for p, (gp, gm) in gaps.items():
        others = [q for q in gaps if q != p]
        pair_gap = min(gaps[q][0] for q in others if (q + gaps[q][0]) % ctx.ell in others)
        if pair_gap < min(gp, gm):
            step = 1 if gp < gm else -1
            en.add(Coord(lk, p), [Coord(lk, (p + step) % ctx.ell)])
            return en
    raise ModelViolation("three robots on the marker ring without a closest pair")


def oriented_1(ctx: Ctx) -> EnabledSet:
    cl = ctx.cls
    m, li, lk = cl.pred.l_max, cl.li, cl.lk
    (ri,) = ctx.robots(li)
    u = Coord(m, ri.pos)
    nbm = ctx.nb[m]
    en = EnabledSet(rule="oriented-1")
    if nbm > 4:
        en.add(ri, [u])
        return en
    if nbm == 3:
        if {(p - u.pos) % ctx.ell for p in ctx.pos(m)} == {ctx.ell - 1, 0, 1}:
            en.add(ri, [u])
            return en
        out = align_enabled(ctx, m, li)
        out.rule = "oriented-1/" + out.rule
        return out
    if nbm != 4:
        raise ModelViolation(f"oriented configuration with {nbm} nodes on the maximal ring")
    if u not in ctx.occ:
        en.add(ri, [u])
        return en
    side = [Coord(m, (u.pos + s) % ctx.ell) for s in (1, -1)]
    free = [x for x in side if x not in ctx.occ]
    if free:
        en.add(u, free)
        return en
    # u and both its ring neighbours are occupied: one of the neighbours steps outward
    cands = {}
    for s in (1, -1):
        rr = Coord(m, (u.pos + s) % ctx.ell)
        out = Coord(m, (u.pos + 2 * s) % ctx.ell)
        if out not in ctx.occ:
            cands[rr] = [out]
    half = ctx.ell // 2
    preferred = {rr: xs for rr, xs in cands.items()
                 if not any(ctx.pdist(rr.pos, q) == half for q in ctx.pos(m) if q != rr.pos)}
    pool = preferred or cands
    if not pool:
        raise ModelViolation("no free node around the robots facing the oriented robot")
    r = ctx.elect(pool)
    en.add(r, pool[r])
    return en


def oriented_2(ctx: Ctx) -> EnabledSet:
    cl = ctx.cls
    li, lk = cl.li, cl.lk
    nbk = ctx.nb[lk]
    if nbk in (2, 3):
        out = align_enabled(ctx, lk, li)
        out.rule = "oriented-2/" + out.rule
        return out
    (ri,) = ctx.robots(li)
    c = ri.pos
    en = EnabledSet(rule="oriented-2/gather")
    cands = [r for r in ctx.robots(lk) if r.pos != c]
    dmin = min(ctx.pdist(r.pos, c) for r in cands)
    close = [r for r in cands if ctx.pdist(r.pos, c) == dmin]
    r = ctx.elect(close)
    en.add(r, [Coord(lk, p) for p in ctx.pos_step(r.pos, c)])
    return en


def semi_oriented(ctx: Ctx) -> EnabledSet:
    cl = ctx.cls
    m = cl.pred.l_max
    a, b = (m - 1) % ctx.L, (m + 1) % ctx.L
    en = EnabledSet(rule="semi-oriented")
    lna = neighbor_ring(ctx.occ, ctx.dims, a, -1)
    lnb = neighbor_ring(ctx.occ, ctx.dims, b, +1)
    if lna == b:
        # only three occupied rings: one of the two lone robots steps away from the maximal ring
        cands = {ctx.robots(a)[0]: [Coord((a - 1) % ctx.L, ctx.pos(a)[0])],
                 ctx.robots(b)[0]: [Coord((b + 1) % ctx.L, ctx.pos(b)[0])]}
        r = ctx.elect(cands)
        en.add(r, cands[r])
        return en
    ta = (a - lna) % ctx.L  # rings crossed walking from a away from the maximal ring
    tb = (lnb - b) % ctx.L
    # a robot of a neighbouring ring steps toward the nearer of the two lone robots'
    # rings, onto an empty node only; when one ring neighbours both, the adversary
    # picks the direction if both rings are equally far
    entries = []
    for ring, step, t in ((lna, +1, ta), (lnb, -1, tb)):
        for r in ctx.robots(ring):
            dst = Coord((ring + step) % ctx.L, r.pos)
            if dst not in ctx.occ:
                entries.append((t, 0, r, dst))
            # sidesteps toward another empty node of the next ring, used when the
            # node straight ahead is taken or stepping there breaks rigidity
            for d in (1, -1):
                x = Coord(ring, (r.pos + d) % ctx.ell)
                if x not in ctx.occ:
                    entries.append((t, 1, r, x))
    if not entries:
        raise ModelViolation("no empty node to step onto toward the lone robots")
    tmin = min(e[0] for e in entries)
    # rigid results first, then straight steps before sidesteps
    ranked = [((not _rigid(ctx.with_move(r, x), ctx.dims), kind), r, x) for t, kind, r, x in entries if t == tmin]
    top = min(k for k, _, _ in ranked)
    cands: dict = {}
    for k, r, x in ranked:
        if k == top:
            cands.setdefault(r, []).append(x)
    r = ctx.elect(cands)
    en.add(r, cands[r])
    return en
