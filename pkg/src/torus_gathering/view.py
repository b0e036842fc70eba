"""Ego-centred views and view-based elections.

A Delta sequence is packed into one integer: row t (the ring t steps away in
the chosen column direction) occupies bits [ell*(L-1-t), ell*(L-t)), and within
a row the observer's own column is the most significant bit. Comparing two such
integers is exactly the row-major lexicographic comparison of the bit strings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .torus_core import Config, Coord, TorusDims


class TieError(RuntimeError):
    """Two candidates of an election have the same view."""


class Occupancy:
    """Binary occupancy with precomputed ring reads, shared by all view queries."""

    __slots__ = ("dims", "occ", "_reads")

    def __init__(self, dims: TorusDims, occ: Iterable):
        self.dims = dims
        self.occ = frozenset(Coord(*c) for c in occ)
        ell, big_l = dims.ell, dims.big_l
        rows = [[0] * ell for _ in range(big_l)]
        for i, j in self.occ:
            rows[i][j] = 1
        # reads[i][0][j]: ell bits read from (i, j) in + direction, first bit most significant
        reads = []
        for i in range(big_l):
            row = rows[i]
            plus = []
            minus = []
            for j in range(ell):
                vp = 0
                vm = 0
                for t in range(ell):
                    vp = (vp << 1) | row[(j + t) % ell]
                    vm = (vm << 1) | row[(j - t) % ell]
                plus.append(vp)
                minus.append(vm)
            reads.append((plus, minus))
        self._reads = reads

    def delta(self, at, ring_dir: int) -> int:
        plus, minus = self._reads[at[0]]
        return (plus if ring_dir > 0 else minus)[at[1]]

    def big_delta(self, at, ring_dir: int, col_dir: int) -> int:
        ell, big_l = self.dims.ell, self.dims.big_l
        side = 0 if ring_dir > 0 else 1
        i, j = at
        v = 0
        for t in range(big_l):
            v = (v << ell) | self._reads[(i + col_dir * t) % big_l][side][j]
        return v

    def view_key(self, at) -> tuple:
        vals = [self.big_delta(at, a, b) for a in (1, -1) for b in (1, -1)]
        vals.sort(reverse=True)
        return tuple(vals)


def as_occupancy(cfg) -> Occupancy:
    if isinstance(cfg, Occupancy):
        return cfg
    if isinstance(cfg, Config):
        return Occupancy(cfg.dims, cfg.occupied)
    raise TypeError(f"cannot read occupancy from {type(cfg).__name__}")


def unpack_rows(value: int, dims: TorusDims) -> tuple:
    ell, big_l = dims.ell, dims.big_l
    rows = []
    for t in range(big_l):
        chunk = (value >> (ell * (big_l - 1 - t))) & ((1 << ell) - 1)
        rows.append(tuple((chunk >> (ell - 1 - s)) & 1 for s in range(ell)))
    return tuple(rows)


def delta_seq(cfg, at, ring_dir: int) -> tuple:
    occ = as_occupancy(cfg)
    v = occ.delta(at, ring_dir)
    ell = occ.dims.ell
    return tuple((v >> (ell - 1 - s)) & 1 for s in range(ell))


@dataclass(frozen=True)
class RobotView:
    sorted_views: tuple  # four packed Delta values, descending
    m: bool
    dims: TorusDims

    def rows(self) -> list:
        return [unpack_rows(v, self.dims) for v in self.sorted_views]


def compute_view(cfg, at, m: bool | None = None) -> RobotView:
    occ = as_occupancy(cfg)
    at = Coord(*at)
    if at not in occ.occ:
        raise ValueError(f"observer node {tuple(at)} is not occupied")
    if m is None:
        m = cfg.count(at) >= 2 if isinstance(cfg, Config) else False
    return RobotView(occ.view_key(at), bool(m), occ.dims)


def compare_views(a: RobotView, b: RobotView) -> int:
    """-1, 0 or 1; the multiplicity bit is not part of the order."""
    if a.dims != b.dims:
        raise ValueError("views from different tori")
    if a.sorted_views < b.sorted_views:
        return -1
    if a.sorted_views > b.sorted_views:
        return 1
    return 0


def elect_by_key(occ: Occupancy, candidates: Iterable) -> Coord:
    """Largest view among candidates; raises TieError if the top is shared."""
    cands = sorted(set(Coord(*c) for c in candidates))
    if not cands:
        raise ValueError("empty candidate set")
    if len(cands) == 1:
        return cands[0]
    keyed = sorted(((occ.view_key(c), c) for c in cands), reverse=True)
    if keyed[0][0] == keyed[1][0]:
        raise TieError(f"nodes {tuple(keyed[0][1])} and {tuple(keyed[1][1])} have the same view")
    return keyed[0][1]


def elect_largest_view(cfg, candidates: Iterable) -> Coord:
    occ = as_occupancy(cfg)
    cands = [Coord(*c) for c in candidates]
    for c in cands:
        if c not in occ.occ:
            raise ValueError(f"candidate {tuple(c)} is not occupied")
    return elect_by_key(occ, cands)


def views_distinct(occ: Occupancy, nodes: Iterable | None = None) -> bool:
    nodes = occ.occ if nodes is None else nodes
    keys = [occ.view_key(c) for c in nodes]
    return len(set(keys)) == len(keys)
