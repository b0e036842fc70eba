"""Shared plumbing for the move rules: enabled sets, ring arithmetic, elections."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

from ..classify import Classification, ModelViolation, PreconditionError, classify_occ
from ..torus_core import Coord, TorusDims, cyc, ring_counts, ring_positions
from ..view import Occupancy, TieError, elect_by_key

# guard values attached to an enabled move
SINGLE_ONLY = "single"  # only robots that are not part of a multiplicity move
TOWER_ONLY = "tower"  # only robots that are part of a multiplicity move


@dataclass(frozen=True)
class Entry:
    """Destinations for robots with multiplicity bit False (single) and True (tower)."""

    single: tuple = ()
    tower: tuple = ()

    @property
    def dests(self) -> tuple:
        return tuple(sorted(set(self.single) | set(self.tower)))


class EnabledSet:
    """Moves enabled in a configuration, keyed by the node the movers stand on.

    All robots on a node see the same occupancy and differ at most in their
    own multiplicity bit, so each node carries one destination list per bit
    value. Several destinations mean the adversary picks one.
    """

    def __init__(self, entries: dict | None = None, rule: str = ""):
        self.entries: dict = dict(entries or {})
        self.rule = rule

    def add(self, src, dests: Iterable, guard: Optional[str] = None):
        src = Coord(*src)
        ds = set(Coord(*d) for d in dests)
        if not ds:
            return
        old = self.entries.get(src, Entry())
        single, tower = set(old.single), set(old.tower)
        if guard != TOWER_ONLY:
            single |= ds
        if guard != SINGLE_ONLY:
            tower |= ds
        self.entries[src] = Entry(tuple(sorted(single)), tuple(sorted(tower)))

    def __bool__(self):
        return bool(self.entries)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, src):
        return Coord(*src) in self.entries

    def options(self, src, multiplicity: bool) -> tuple:
        e = self.entries.get(Coord(*src))
        if e is None:
            return ()
        return e.tower if multiplicity else e.single

    def pairs(self, towers: Iterable = ()) -> list[tuple]:
        """(from, to, adversary) triples with multiplicity bits taken from the tower set."""
        towers = set(towers)
        out = []
        for src in sorted(self.entries):
            opts = self.options(src, src in towers)
            for d in opts:
                out.append((src, d, len(opts) > 1))
        return out

    def sources(self) -> list:
        return sorted(self.entries)

    def mapped(self, fn) -> "EnabledSet":
        out = EnabledSet(rule=self.rule)
        for s, e in self.entries.items():
            out.entries[fn(s)] = Entry(tuple(sorted(fn(d) for d in e.single)), tuple(sorted(fn(d) for d in e.tower)))
        return out

    def canonical(self) -> tuple:
        return tuple(sorted((s, e.single, e.tower) for s, e in self.entries.items()))

    def __repr__(self):
        parts = []
        for s, e in sorted(self.entries.items()):
            if e.single == e.tower:
                parts.append(f"{tuple(s)}->{[tuple(d) for d in e.single]}")
            else:
                parts.append(f"{tuple(s)}->single{[tuple(d) for d in e.single]}/tower{[tuple(d) for d in e.tower]}")
        return f"EnabledSet[{self.rule}](" + ", ".join(parts) + ")"


class Ctx:
    """One snapshot of the torus as every robot sees it (binary occupancy)."""

    def __init__(self, occ: Iterable, dims: TorusDims):
        self.dims = dims
        self.ell = dims.ell
        self.L = dims.big_l
        self.occ = frozenset(Coord(*c) for c in occ)
        self._rp: dict = {}

    @cached_property
    def view_occ(self) -> Occupancy:
        return Occupancy(self.dims, self.occ)

    @cached_property
    def cls(self) -> Classification:
        return classify_occ(self.occ, self.dims)

    @cached_property
    def nb(self) -> list[int]:
        return ring_counts(self.occ, self.L)

    def pos(self, i: int) -> list[int]:
        i %= self.L
        if i not in self._rp:
            self._rp[i] = ring_positions(self.occ, i)
        return self._rp[i]

    def robots(self, i: int) -> list[Coord]:
        return [Coord(i % self.L, p) for p in self.pos(i)]

    def occupied(self, i: int, j: int) -> bool:
        return Coord(i % self.L, j % self.ell) in self.occ

    def elect(self, candidates: Iterable) -> Coord:
        return elect_by_key(self.view_occ, candidates)

    def view(self, c) -> tuple:
        return self.view_occ.view_key(c)

    def rdist(self, a: int, b: int) -> int:
        return cyc(a, b, self.L)

    def pdist(self, a: int, b: int) -> int:
        return cyc(a, b, self.ell)

    def ring_step(self, i: int, target: int) -> list[int]:
        """Ring indices of the first vertical step from ring i toward ring target."""
        return steps_toward(i, target, self.L)

    def pos_step(self, a: int, b: int) -> list[int]:
        return steps_toward(a, b, self.ell)

    def with_move(self, src, dst) -> frozenset:
        occ = set(self.occ)
        occ.discard(Coord(*src))
        occ.add(Coord(*dst))
        return frozenset(occ)


def steps_toward(a: int, b: int, m: int) -> list[int]:
    """First positions on a shortest walk from a to b on a cycle of length m."""
    if a % m == b % m:
        return []
    up = (b - a) % m
    down = (a - b) % m
    if up < down:
        return [(a + 1) % m]
    if down < up:
        return [(a - 1) % m]
    return [(a + 1) % m, (a - 1) % m]


def path_clear(positions: set, a: int, b: int, step: int, m: int) -> bool:
    """No occupied position strictly between a and b walking in direction step."""
    x = (a + step) % m
    while x != b % m:
        if x in positions:
            return False
        x = (x + step) % m
    return True


__all__ = [
    "Ctx",
    "EnabledSet",
    "Entry",
    "ModelViolation",
    "PreconditionError",
    "SINGLE_ONLY",
    "TOWER_ONLY",
    "TieError",
    "path_clear",
    "steps_toward",
]
