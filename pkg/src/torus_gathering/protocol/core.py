"""Algorithm dispatch: classify the snapshot, then run the phase's move rules."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from ..classify import ModelViolation, PreconditionError
from ..torus_core import Coord, TorusDims, neighbors
from .base import Ctx, EnabledSet
from .gathering import gathering_enabled
from .preparation import preparation_enabled


@dataclass(frozen=True)
class Snapshot:
    """What one robot sees: binary occupancy plus its own node and multiplicity bit."""

    dims: TorusDims
    occupancy: frozenset
    self_at: Coord
    self_multiplicity: bool = False


@dataclass(frozen=True)
class MoveDecision:
    """Destination adjacent to the robot, or None to stay. Several options mean the adversary picks."""

    options: tuple = ()
    rule: str = ""

    @property
    def stay(self) -> bool:
        return not self.options

    @property
    def destination(self) -> Optional[Coord]:
        return self.options[0] if len(self.options) == 1 else None


STAY = MoveDecision()


@lru_cache(maxsize=200_000)
def _enabled_cached(dims: TorusDims, occ: frozenset) -> EnabledSet:
    ctx = Ctx(occ, dims)
    if ctx.cls.phase == 2 or len(occ) == 1:
        en = gathering_enabled(ctx)
    else:
        en = preparation_enabled(ctx)
    for src, entry in en.entries.items():
        if src not in occ:
            raise ModelViolation(f"rule {en.rule} moves robots from empty node {tuple(src)}")
        adj = set(neighbors(src, dims))
        for d in entry.dests:
            if d not in adj:
                raise ModelViolation(f"rule {en.rule} sends {tuple(src)} to non-adjacent {tuple(d)}")
    return en


def enabled_moves(occ, dims: TorusDims) -> EnabledSet:
    """Moves enabled in a binary occupancy (deterministic, shared by all robots)."""
    return _enabled_cached(dims, frozenset(Coord(*c) for c in occ))


def decide(snap: Snapshot) -> MoveDecision:
    at = Coord(*snap.self_at)
    if at not in snap.occupancy:
        raise PreconditionError(f"observer node {tuple(at)} is not occupied")
    en = enabled_moves(snap.occupancy, snap.dims)
    opts = en.options(at, snap.self_multiplicity)
    if not opts:
        return STAY
    return MoveDecision(tuple(opts), en.rule)


def clear_cache():
    _enabled_cached.cache_clear()
