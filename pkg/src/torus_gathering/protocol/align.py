"""Aligning the robots of one ring against a marker pattern on an adjacent ring.

Everything here works on offsets relative to u3, the node of the aligned ring
sitting in the marker's column: u1..u5 are offsets -2..2. "Minus side" robots
are met first when walking from u3 in the -1 direction.
"""
from __future__ import annotations

from typing import Optional

from ..classify import PreconditionError, _target_vertex
from ..torus_core import Coord, cyc
from .base import SINGLE_ONLY, TOWER_ONLY, Ctx, EnabledSet

GOALS = {
    2: (-1, 1),
    3: (-1, 0, 1),
    4: (-2, -1, 1, 2),
    5: (-2, -1, 0, 1, 2),
}


def goal(nb: int, ell: int) -> frozenset:
    return frozenset(o % ell for o in GOALS[nb])


def is_aligned(rel: set, ell: int) -> bool:
    return len(rel) in GOALS and frozenset(rel) == goal(len(rel), ell)


def marker_column(lk_positions: list[int], ell: int) -> Optional[int]:
    """Column of u_mark: the lone node, the hole of a 2.block of two, or the middle of a 1.block of three."""
    return _target_vertex(sorted(lk_positions), ell)


def _minus_scan(rel: set, ell: int) -> list[int]:
    return [(-t) % ell for t in range(1, ell) if (-t) % ell in rel]


def _plus_scan(rel: set, ell: int) -> list[int]:
    return [t for t in range(1, ell) if t in rel]


MARKER = None  # destination meaning "the u_mark node on the marker ring"


class Moves:
    """Relative-offset moves: offset -> (destinations, guard)."""

    def __init__(self, ell: int):
        self.ell = ell
        self.items: list = []

    def add(self, src: int, dests, guard=None):
        ds = sorted({d if d is MARKER else d % self.ell for d in dests}, key=lambda d: -1 if d is MARKER else d)
        if ds:
            self.items.append((src % self.ell, ds, guard))


def _step_in(x: int, direction: int, ell: int) -> int:
    return (x + direction) % ell


def _fill_sides(rel: set, ell: int, mv: Moves, skip: set, depth: int):
    """Fill u2 (then u1 when depth is 2) from the minus side and u4 (then u5)
    from the plus side, each robot walking back toward u3 without crossing it."""
    minus = [x for x in _minus_scan(rel, ell) if x not in skip]
    plus = [x for x in _plus_scan(rel, ell) if x not in skip]
    for order, near, far, direction in ((minus, -1, -2, +1), (plus, 1, 2, -1)):
        near %= ell
        far %= ell
        if len(order) >= 1 and near not in rel:
            mv.add(order[0], [_step_in(order[0], direction, ell)])
        elif depth == 2 and len(order) >= 2 and near in rel and far not in rel:
            mv.add(order[1], [_step_in(order[1], direction, ell)])


def _toward_zero(x: int, ell: int) -> list[int]:
    up = (-x) % ell
    down = x % ell
    if up < down:
        return [(x + 1) % ell]
    if down < up:
        return [(x - 1) % ell]
    return [(x + 1) % ell, (x - 1) % ell]


def _consecutive(rel: set, ell: int) -> Optional[list[int]]:
    """Members in walking order if they form one 1.block, else None."""
    if len(rel) >= ell:
        return None
    starts = [p for p in rel if (p - 1) % ell not in rel]
    if len(starts) != 1:
        return None
    s = starts[0]
    return [(s + t) % ell for t in range(len(rel))]


def _empty_neighbours(x: int, rel: set, ell: int) -> list[int]:
    return [y for y in ((x + 1) % ell, (x - 1) % ell) if y not in rel]


def align_moves(rel: set, ell: int) -> Moves:
    """Moves of the robots on the aligned ring, as offsets from u3."""
    rel = set(rel)
    nb = len(rel)
    mv = Moves(ell)
    if nb not in GOALS:
        raise PreconditionError(f"alignment needs 2 to 5 occupied nodes, got {nb}")
    if is_aligned(rel, ell):
        return mv
    d = lambda a, b: cyc(a, b, ell)  # noqa: E731
    if nb == 2:
        if 0 in rel:
            (r2,) = [x for x in rel if x != 0]
            a, b = d(r2, -1 % ell), d(r2, 1)
            if a < b:
                mv.add(0, [1])
            elif b < a:
                mv.add(0, [-1])
            else:
                mv.add(0, [-1, 1])
            return mv
        _fill_sides(rel, ell, mv, set(), 1)
        return mv
    if nb == 3:
        if 0 in rel:
            _fill_sides(rel, ell, mv, {0}, 1)
            return mv
        block = _consecutive(rel, ell)
        if block is not None and d(block[0], 0) == d(block[-1], 0):
            # c1: both extremities leave the block toward u3
            mv.add(block[0], [block[0] - 1])
            mv.add(block[-1], [block[-1] + 1])
            return mv
        for r1 in rel:
            for s in (1, -1):
                r2, r3 = (r1 + s) % ell, (r1 + 3 * s) % ell
                gap = (r1 + 2 * s) % ell
                # the hole left by a half-executed c1 move is never u3 itself
                if r2 in rel and r3 in rel and gap not in rel and gap != 0 and (r1 - s) % ell not in rel:
                    if d(r1, 0) == d(r3, 0) + 1:
                        # c2: the extremity left behind by a half-executed c1 finishes its move
                        mv.add(r1, [r1 - s])
                        return mv
        return _closest_rule(rel, ell, mv, middle_index=1)
    if nb == 4:
        if 0 not in rel:
            _fill_sides(rel, ell, mv, set(), 2)
            return mv
        m1, p1, m2, p2 = (-1) % ell, 1, (-2) % ell, 2
        if m1 not in rel and p1 not in rel:
            # a single robot on u3 steps aside; a multiplicity on u3 instead
            # drops onto the marker ring (see align_enabled)
            mv.add(0, [m1, p1], SINGLE_ONLY)
            mv.add(0, [MARKER], TOWER_ONLY)
            return mv
        if (m1 in rel) != (p1 in rel):
            mv.add(0, [m1 if m1 not in rel else p1])
            return mv
        if m2 not in rel and p2 in rel:
            mv.add(m1, [m2])
            return mv
        if p2 not in rel and m2 in rel:
            mv.add(p1, [p2])
            return mv
        (r1,) = [x for x in rel if x not in (m1, 0, p1)]
        a, b = d(r1, m2), d(r1, p2)
        dests = []
        if a <= b:
            dests += _toward(r1, m2, ell, rel)
        if b <= a:
            dests += _toward(r1, p2, ell, rel)
        mv.add(r1, dests)
        return mv
    # nb == 5
    if 0 in rel:
        _fill_sides(rel, ell, mv, {0}, 2)
        return mv
    block = _consecutive(rel, ell)
    if block is not None and d(block[0], 0) == d(block[-1], 0):
        # both extremities of a 1.block of five move toward u3
        mv.add(block[0], [block[0] - 1])
        mv.add(block[-1], [block[-1] + 1])
        return mv
    xs = _minus_scan(rel, ell)  # X1..X5 in minus-scan order
    x1, x2, x3, x4, x5 = xs
    if d(x1, 0) == d(x5, 0):
        # the walking-order gaps between consecutive robots
        g12 = d(x1, x2)
        g54 = d(x5, x4)
        adj23 = d(x2, x3) == 1
        adj43 = d(x4, x3) == 1
        if adj23 and adj43 and g12 == g54:
            # r2 and r4 step away from r3, toward r1 and r5
            mv.add(x2, [_step_in(x2, +1, ell)])
            mv.add(x4, [_step_in(x4, -1, ell)])
            return mv
        if adj43 and d(x2, x3) == 2 and g54 == g12 + 1:
            mv.add(x4, [_step_in(x4, -1, ell)])
            return mv
        if adj23 and d(x4, x3) == 2 and g12 == g54 + 1:
            mv.add(x2, [_step_in(x2, +1, ell)])
            return mv
    # half-executed block move: the extremity that has not moved yet finishes
    for ends in ((x1, x2, x5, +1), (x5, x4, x1, -1)):
        lone, nxt, other, direction = ends
        rest = sorted(set(rel) - {lone})
        blk = _consecutive(set(rest), ell)
        if blk is not None and d(lone, nxt) == 2 and d(other, 0) == d(lone, 0) + 1:
            mv.add(other, [_step_in(other, -direction, ell)])
            return mv
    return _closest_rule(rel, ell, mv, middle_index=2)


def _toward(x: int, target: int, ell: int, rel: set) -> list[int]:
    out = []
    for y in _steps(x, target, ell):
        if y not in rel:
            out.append(y)
    return out


def _steps(x: int, target: int, ell: int) -> list[int]:
    up = (target - x) % ell
    down = (x - target) % ell
    if up == 0:
        return []
    if up < down:
        return [(x + 1) % ell]
    if down < up:
        return [(x - 1) % ell]
    return [(x + 1) % ell, (x - 1) % ell]


def _closest_rule(rel: set, ell: int, mv: Moves, middle_index: int) -> Moves:
    """u3 empty: the robot closest to u3 walks toward it; a tie between the two
    sides is broken by the middle robot's position, or by the middle robot
    stepping aside when it is equidistant."""
    d = lambda a, b: cyc(a, b, ell)  # noqa: E731
    best = min(d(x, 0) for x in rel)
    close = [x for x in rel if d(x, 0) == best]
    if len(close) == 1:
        mv.add(close[0], _toward_zero(close[0], ell))
        return mv
    xs = _minus_scan(rel, ell)
    a, b = xs[0], xs[-1]
    mid = xs[middle_index]
    da, db = d(a, mid), d(b, mid)
    if da < db:
        mv.add(a, _toward_zero(a, ell))
    elif db < da:
        mv.add(b, _toward_zero(b, ell))
    else:
        mv.add(mid, _empty_neighbours(mid, rel, ell))
    return mv


def align_enabled(ctx: Ctx, li: int, lk: int) -> EnabledSet:
    ell = ctx.ell
    pi, pk = ctx.pos(li), ctx.pos(lk)
    if not (2 <= len(pi) <= 5) or len(pi) <= len(pk):
        raise PreconditionError(f"cannot align ring {li} ({len(pi)} nodes) against ring {lk} ({len(pk)} nodes)")
    u3 = marker_column(pk, ell)
    if u3 is None:
        raise PreconditionError(f"ring {lk} shows no marker pattern")
    rel = {(p - u3) % ell for p in pi}
    mv = align_moves(rel, ell)
    out = EnabledSet(rule=f"align/{len(pi)}")
    for src, dests, guard in mv.items:
        coords = []
        for dst in dests:
            if dst is MARKER:
                coords.append(Coord(lk % ctx.L, u3))
            else:
                coords.append(Coord(li % ctx.L, (dst + u3) % ell))
        out.add(Coord(li % ctx.L, (src + u3) % ell), coords, guard)
    return out


def aligned(ctx: Ctx, li: int, lk: int) -> bool:
    u3 = marker_column(ctx.pos(lk), ctx.ell)
    if u3 is None:
        return False
    return is_aligned({(p - u3) % ctx.ell for p in ctx.pos(li)}, ctx.ell)
