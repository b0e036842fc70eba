from .align import align_enabled, align_moves, aligned, is_aligned
from .base import SINGLE_ONLY, TOWER_ONLY, Ctx, EnabledSet
from .core import STAY, MoveDecision, Snapshot, decide, enabled_moves
from .gathering import gathering_enabled
from .preparation import preparation_enabled
from .undefined import select_ring_edge_edge, undefined_enabled


__all__ = [
    "EnabledSet",
    "MoveDecision",
    "SINGLE_ONLY",
    "STAY",
    "Snapshot",
    "TOWER_ONLY",
    "align_enabled",
    "align_moves",
    "aligned",
    "decide",
    "enabled_moves",
    "gathering_enabled",
    "is_aligned",
    "preparation_enabled",
    "select_ring_edge_edge",
    "undefined_enabled",
]
