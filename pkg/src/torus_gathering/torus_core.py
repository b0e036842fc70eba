"""Torus geometry: coordinates, adjacency, distances, rings and blocks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class TorusDims:
    """An (ell, big_l) torus: big_l rings of ell nodes each."""

    ell: int
    big_l: int
    strict: bool = False

    def __post_init__(self):
        if self.ell <= 2 or self.big_l <= 2:
            raise DimensionError(f"ring sizes must exceed 2, got ell={self.ell} L={self.big_l}")
        if self.big_l >= self.ell:
            raise DimensionError(f"need L < ell, got ell={self.ell} L={self.big_l}")
        if self.strict and self.big_l <= 4:
            raise DimensionError(f"strict dimensions need L > 4, got L={self.big_l}")

    @property
    def n(self) -> int:
        return self.ell * self.big_l

    def nodes(self) -> Iterator["Coord"]:
        for i in range(self.big_l):
            for j in range(self.ell):
                yield Coord(i, j)

    def contains(self, c) -> bool:
        return 0 <= c[0] < self.big_l and 0 <= c[1] < self.ell


class Coord(NamedTuple):
    ring: int
    pos: int


def neighbors(c, dims: TorusDims) -> list[Coord]:
    i, j = c
    return [
        Coord(i, (j + 1) % dims.ell),
        Coord(i, (j - 1) % dims.ell),
        Coord((i + 1) % dims.big_l, j),
        Coord((i - 1) % dims.big_l, j),
    ]


def cyc(a: int, b: int, m: int) -> int:
    """Shortest distance between a and b on a cycle of length m."""
    d = (a - b) % m
    return min(d, m - d)


def dist(a, b, dims: TorusDims) -> int:
    return cyc(a[0], b[0], dims.big_l) + cyc(a[1], b[1], dims.ell)


@dataclass(frozen=True)
class Block:
    ring: int
    start: Coord
    size: int
    gap: int

    def members(self, ell: int) -> list[Coord]:
        return [Coord(self.ring, (self.start.pos + t * self.gap) % ell) for t in range(self.size)]


@dataclass(frozen=True)
class Config:
    """Per-node robot counts on a torus. Robots only ever see the occupancy."""

    dims: TorusDims
    counts: tuple  # sorted tuple of (Coord, count) with count > 0
    occupied: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "occupied", frozenset(c for c, _ in self.counts))

    @classmethod
    def from_counts(cls, dims: TorusDims, counts) -> "Config":
        items = counts.items() if hasattr(counts, "items") else counts
        merged: dict = {}
        for c, v in items:
            if v < 0:
                raise ValueError("negative robot count")
            if v == 0:
                continue
            c = Coord(*c)
            if not dims.contains(c):
                raise ValueError(f"node {tuple(c)} outside torus {dims.ell}x{dims.big_l}")
            merged[c] = merged.get(c, 0) + v
        return cls(dims, tuple(sorted(merged.items())))

    @classmethod
    def from_positions(cls, dims: TorusDims, positions: Iterable) -> "Config":
        counts: dict = {}
        for p in positions:
            p = Coord(*p)
            counts[p] = counts.get(p, 0) + 1
        return cls.from_counts(dims, counts)

    @property
    def k(self) -> int:
        return sum(v for _, v in self.counts)

    def count(self, c) -> int:
        for node, v in self.counts:
            if node == c:
                return v
        return 0

    def count_map(self) -> dict:
        return dict(self.counts)

    def towers(self) -> list[Coord]:
        return [c for c, v in self.counts if v >= 2]


def ring_positions(occ: frozenset, i: int) -> list[int]:
    return sorted(p for r, p in occ if r == i)


def nb_ring(cfg, i: int) -> int:
    occ = cfg.occupied if isinstance(cfg, Config) else cfg
    return sum(1 for r, _ in occ if r == i)


def ring_counts(occ: frozenset, big_l: int) -> list[int]:
    nb = [0] * big_l
    for r, _ in occ:
        nb[r] += 1
    return nb


def ring_blocks(positions: Iterable[int], ell: int, d: int) -> list[tuple[int, int]]:
    """Maximal d.blocks of a set of ring positions as (start, size) pairs."""
    pos = set(positions)
    if d < 1:
        raise ValueError("gap must be at least 1")
    out = []
    seen = set()
    for p in sorted(pos):
        if p in seen:
            continue
        # walk backwards to the start of the chain through p
        start = p
        steps = 0
        while (start - d) % ell in pos and (start - d) % ell != p and steps < ell:
            start = (start - d) % ell
            steps += 1
        size = 0
        q = start
        while q in pos and q not in seen:
            seen.add(q)
            size += 1
            q = (q + d) % ell
        out.append((start, size))
    # blocks that wrap all the way around (a full d-cycle) start at their smallest member
    fixed = []
    for start, size in out:
        members = [(start + t * d) % ell for t in range(size)]
        if (start - d) % ell in pos and (start - d) % ell in members:
            start = min(members)
        fixed.append((start, size))
    fixed.sort(key=lambda b: (b[0], b[1]))
    return fixed


def blocks(cfg, i: int, d: int) -> list[Block]:
    occ = cfg.occupied if isinstance(cfg, Config) else cfg
    ell = cfg.dims.ell
    return [Block(i, Coord(i, s), size, d) for s, size in ring_blocks(ring_positions(occ, i), ell, d)]


def maximal_rings(cfg) -> list[int]:
    nb = ring_counts(cfg.occupied, cfg.dims.big_l)
    top = max(nb)
    return [i for i, v in enumerate(nb) if v == top]


def adjacent_rings(i: int, dims: TorusDims) -> tuple[int, int]:
    return ((i - 1) % dims.big_l, (i + 1) % dims.big_l)


def neighbor_ring(occ: frozenset, dims: TorusDims, i: int, step: int) -> int:
    """First occupied ring met when scanning from ring i in direction step (+1/-1)."""
    rings = {r for r, _ in occ}
    for t in range(1, dims.big_l + 1):
        r = (i + step * t) % dims.big_l
        if r in rings:
            return r
    return i


def neighbor_rings(cfg, i: int) -> tuple[int, int]:
    return (neighbor_ring(cfg.occupied, cfg.dims, i, -1), neighbor_ring(cfg.occupied, cfg.dims, i, +1))


# --- torus automorphisms -----------------------------------------------------

class Automorphism(NamedTuple):
    """x -> (sr * ring + dr, sp * pos + dp) with signs in {+1, -1}."""

    sr: int
    dr: int
    sp: int
    dp: int

    def apply(self, c, dims: TorusDims) -> Coord:
        return Coord((self.sr * c[0] + self.dr) % dims.big_l, (self.sp * c[1] + self.dp) % dims.ell)

    def is_identity(self, dims: TorusDims) -> bool:
        return self.sr == 1 and self.sp == 1 and self.dr % dims.big_l == 0 and self.dp % dims.ell == 0


def automorphisms(dims: TorusDims) -> list[Automorphism]:
    """All 4 * ell * big_l maps generated by translations and the two axis reflections."""
    out = []
    for sr in (1, -1):
        for sp in (1, -1):
            for dr in range(dims.big_l):
                for dp in range(dims.ell):
                    out.append(Automorphism(sr, dr, sp, dp))
    return out


def apply_to_config(sigma: Automorphism, cfg: Config) -> Config:
    return Config.from_counts(cfg.dims, {sigma.apply(c, cfg.dims): v for c, v in cfg.counts})


def apply_to_set(sigma: Automorphism, occ: Iterable, dims: TorusDims) -> frozenset:
    return frozenset(sigma.apply(c, dims) for c in occ)
