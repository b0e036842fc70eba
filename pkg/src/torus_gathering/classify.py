"""Configuration analysis: symmetry, rigidity, predicates and set labels."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional

from .torus_core import (
    Automorphism,
    Config,
    Coord,
    TorusDims,
    automorphisms,
    cyc,
    ring_counts,
    ring_positions,
)
from .view import Occupancy, views_distinct


class ModelViolation(RuntimeError):
    """A configuration that the algorithm should never produce."""


class PreconditionError(ValueError):
    pass


class SetLabel(str, Enum):
    NOT_UNIQUE = "NotUnique"
    EMPTY = "C_Empty"
    SEMI_EMPTY = "C_Semi-Empty"
    ORIENTED_1 = "C_Oriented-1"
    ORIENTED_2 = "C_Oriented-2"
    SEMI_ORIENTED = "C_Semi-Oriented"
    UNDEFINED = "C_Undefined"
    SP1 = "C_sp-1"
    SP2 = "C_sp-2"
    SP3 = "C_sp-3"
    SP4 = "C_sp-4"
    PR = "C_pr"
    LS = "C_ls"
    GATHERED = "Gathered"

    def __str__(self):
        return self.value


PHASE2 = {SetLabel.SP1, SetLabel.SP2, SetLabel.SP3, SetLabel.SP4, SetLabel.PR, SetLabel.LS, SetLabel.GATHERED}


def phase_of(label: SetLabel) -> int:
    return 2 if label in PHASE2 else 1


def _occ_set(cfg) -> frozenset:
    if isinstance(cfg, Config):
        return cfg.occupied
    if isinstance(cfg, Occupancy):
        return cfg.occ
    return frozenset(cfg)


def _dims(cfg, dims=None) -> TorusDims:
    if dims is not None:
        return dims
    return cfg.dims


# --- symmetry ------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetryAxis:
    """Axis of a reflection. 'perpendicular' axes cut across every ring and
    reflect positions (j -> anchor2 - j); 'parallel' axes run along rings and
    reflect ring indices (i -> anchor2 - i). anchor2 is twice the anchor
    position, reduced to [0, size) since anchor2 and anchor2 + size describe the
    same reflection."""

    orientation: str
    anchor2: int

    def sigma(self, dims: TorusDims) -> Automorphism:
        if self.orientation == "perpendicular":
            return Automorphism(1, 0, -1, self.anchor2)
        return Automorphism(-1, self.anchor2, 1, 0)

    def describe(self, dims: TorusDims) -> str:
        size = dims.ell if self.orientation == "perpendicular" else dims.big_l
        loci = [self.anchor2 / 2, (self.anchor2 + size) / 2 % size]
        txt = ", ".join(f"{x:g}" for x in sorted(set(loci)))
        return f"{self.orientation} axis through {txt}"


def is_fixed(occ: frozenset, sigma: Automorphism, dims: TorusDims) -> bool:
    return all(sigma.apply(c, dims) in occ for c in occ)


def is_periodic(cfg, dims: TorusDims | None = None) -> bool:
    occ = _occ_set(cfg)
    dims = _dims(cfg, dims)
    if not occ:
        return False
    for dr in range(dims.big_l):
        for dp in range(dims.ell):
            if dr == 0 and dp == 0:
                continue
            if is_fixed(occ, Automorphism(1, dr, 1, dp), dims):
                return True
    return False


def symmetry_axes(cfg, dims: TorusDims | None = None) -> list[SymmetryAxis]:
    occ = _occ_set(cfg)
    dims = _dims(cfg, dims)
    out = []
    for c in range(dims.ell):
        ax = SymmetryAxis("perpendicular", c)
        if is_fixed(occ, ax.sigma(dims), dims):
            out.append(ax)
    for c in range(dims.big_l):
        ax = SymmetryAxis("parallel", c)
        if is_fixed(occ, ax.sigma(dims), dims):
            out.append(ax)
    return out


@lru_cache(maxsize=64)
def _auts(dims: TorusDims) -> tuple:
    return tuple(s for s in automorphisms(dims) if not s.is_identity(dims))


def stabilizer(cfg, dims: TorusDims | None = None) -> list[Automorphism]:
    """Non-identity torus automorphisms preserving the occupancy."""
    occ = _occ_set(cfg)
    dims = _dims(cfg, dims)
    return [s for s in _auts(dims) if is_fixed(occ, s, dims)]


def is_rigid(cfg, dims: TorusDims | None = None) -> bool:
    """All occupied nodes have pairwise distinct views."""
    dims = _dims(cfg, dims)
    occ = cfg if isinstance(cfg, Occupancy) else Occupancy(dims, _occ_set(cfg))
    return views_distinct(occ)


def is_rigid_by_symmetry(cfg, dims: TorusDims | None = None) -> bool:
    """No reflection axis and no non-trivial translation."""
    dims = _dims(cfg, dims)
    return not symmetry_axes(cfg, dims) and not is_periodic(cfg, dims)


def is_rigid_by_automorphism(cfg, dims: TorusDims | None = None) -> bool:
    """No occupancy-preserving automorphism moves an occupied node."""
    occ = _occ_set(cfg)
    dims = _dims(cfg, dims)
    for s in stabilizer(occ, dims):
        if any(s.apply(c, dims) != c for c in occ):
            return False
    return True


def canonical_key(occ: Iterable, dims: TorusDims) -> tuple:
    occ = list(occ)
    best = None
    for s in automorphisms(dims):
        key = tuple(sorted(s.apply(c, dims) for c in occ))
        if best is None or key < best:
            best = key
    return best


@dataclass(frozen=True)
class AxisCrossing:
    kind: str  # node-node, node-edge or edge-edge
    nodes: tuple  # positions of nodes lying on the axis
    edges: tuple  # ((u1, u2), (u3, u4)) with u1, u3 on one side of the axis


def axis_ring_intersection(axis: SymmetryAxis, ring: int, dims: TorusDims) -> AxisCrossing:
    if axis.orientation != "perpendicular":
        raise PreconditionError("only an axis crossing the rings meets a ring in isolated loci")
    return crossing_for_anchor(axis.anchor2, dims.ell)


def crossing_for_anchor(c: int, ell: int) -> AxisCrossing:
    """Loci of the reflection j -> c - j on a ring of ell nodes."""
    fixed = tuple(sorted(j for j in range(ell) if (c - j) % ell == j))
    # edges {a, a+1} swapped onto themselves
    swapped = sorted(a for a in range(ell) if (c - a) % ell == (a + 1) % ell)
    if len(fixed) == 2:
        return AxisCrossing("node-node", fixed, ())
    if len(fixed) == 1:
        return AxisCrossing("node-edge", fixed, tuple((a, (a + 1) % ell) for a in swapped))
    a, b = swapped
    u1, u2 = a, (a + 1) % ell
    # u3 sits on the same side as u1: walking down from u1 we meet u3 before crossing the axis
    u4, u3 = b, (b + 1) % ell
    return AxisCrossing("edge-edge", (), ((u1, u2), (u3, u4)))


# --- predicates --------------------------------------------------------------------

@dataclass(frozen=True)
class Target:
    l_max: int
    l_secondary: int
    l_target: int
    v_target: Coord
    up: int  # ring step leading from l_max to l_target


@dataclass(frozen=True)
class Predicates:
    unique: bool
    l_max: Optional[int]
    empty: bool
    partial: bool
    target: Optional[Target]
    nb: tuple


def _target_vertex(pos: list[int], ell: int) -> Optional[int]:
    if len(pos) == 1:
        return pos[0]
    if len(pos) == 2:
        a, b = pos
        if cyc(a, b, ell) == 2:
            mids = [m for m in range(ell) if cyc(m, a, ell) == 1 and cyc(m, b, ell) == 1]
            if len(mids) == 1:
                return mids[0]
        return None
    if len(pos) == 3:
        s = set(pos)
        for p in pos:
            if (p - 1) % ell in s and (p + 1) % ell in s:
                return p
    return None


def predicates(cfg, dims: TorusDims | None = None) -> Predicates:
    occ = _occ_set(cfg)
    dims = _dims(cfg, dims)
    big_l, ell = dims.big_l, dims.ell
    nb = ring_counts(occ, big_l)
    top = max(nb)
    maxes = [i for i in range(big_l) if nb[i] == top]
    if len(maxes) != 1:
        return Predicates(False, None, False, False, None, tuple(nb))
    m = maxes[0]
    target = None
    for up in (1, -1):
        lt, ls = (m + up) % big_l, (m - up) % big_l
        if nb[ls] != 0 or nb[lt] == 0:
            continue
        v = _target_vertex(ring_positions(occ, lt), ell)
        if v is not None:
            target = Target(m, ls, lt, Coord(lt, v), up)
    empty = partial = False
    if target is not None:
        others = [i for i in range(big_l) if i not in (target.l_max, target.l_target) and nb[i] > 0]
        empty = not others
        partial = not empty
    return Predicates(True, m, empty, partial, target, tuple(nb))


# --- set labels -------------------------------------------------------------------

def _is_consecutive(pos: list[int], ell: int) -> bool:
    s = set(pos)
    if len(s) >= ell:
        return False
    # a run of consecutive nodes has exactly one member without a predecessor
    starts = [p for p in s if (p - 1) % ell not in s]
    return len(starts) == 1


def _shift(pos: Iterable[int], v: int, ell: int) -> frozenset:
    return frozenset((p - v) % ell for p in pos)


def _pattern(offsets: Iterable[int], ell: int) -> frozenset:
    return frozenset(o % ell for o in offsets)


def sp2_kind(max_pos: list[int], v: int, ell: int) -> Optional[int]:
    """Which of the three ring patterns around column v the maximal ring shows."""
    rel = _shift(max_pos, v, ell)
    if rel == _pattern((-2, -1, 1, 2), ell):
        return 1
    if rel == _pattern((-2, -1, 0, 1, 2), ell):
        return 2
    if rel in (_pattern((-2, 0, 1, 2), ell), _pattern((2, 0, -1, -2), ell)):
        return 3
    return None


def sp3_match(max_pos: list[int], v: int, ell: int) -> bool:
    rel = _shift(max_pos, v, ell)
    return rel in (_pattern((-1, 0, 1), ell), _pattern((-1, 1), ell))


def sp1_match(occ: frozenset, dims: TorusDims, nb: list[int]) -> Optional[tuple]:
    """(ring a, ring b, column u, b-kind) when the two-ring gathering pattern holds."""
    ell, big_l = dims.ell, dims.big_l
    rings = [i for i in range(big_l) if nb[i] > 0]
    if len(rings) != 2:
        return None
    a, b = rings
    if nb[a] < nb[b]:
        a, b = b, a
    if nb[a] == nb[b] or cyc(a, b, big_l) != 1:
        return None
    pa, pb = ring_positions(occ, a), ring_positions(occ, b)
    for u in range(ell):
        ra = _shift(pa, u, ell)
        if ra not in (_pattern((-1, 0, 1), ell), _pattern((-2, -1, 1, 2), ell), _pattern((-2, -1, 0, 1, 2), ell)):
            continue
        rb = _shift(pb, u, ell)
        if rb == _pattern((-1, 0, 1), ell):
            return (a, b, u, "block3")
        if rb == _pattern((-1, 1), ell):
            return (a, b, u, "block2gap")
        if rb in (_pattern((0, 1), ell), _pattern((0, -1), ell)):
            return (a, b, u, "pair")
    return None


def oriented1_match(occ: frozenset, ell: int, li: int, lk: int) -> bool:
    pi = ring_positions(occ, li)
    if len(pi) != 1:
        return False
    rel = _shift(ring_positions(occ, lk), pi[0], ell)
    return rel in (_pattern((-1, 0, 1), ell), _pattern((-1, 1), ell))


@dataclass(frozen=True)
class Classification:
    label: SetLabel
    pred: Predicates
    # for phase-1 labels with a unique maximal ring: the adjacent rings as (li, lk)
    # following the label's naming; for symmetric situations li/lk may be swapped freely
    li: Optional[int] = None
    lk: Optional[int] = None
    sp1: Optional[tuple] = None

    @property
    def phase(self) -> int:
        return phase_of(self.label)


def classify_occ(occ: frozenset, dims: TorusDims) -> Classification:
    if not occ:
        raise ModelViolation("empty configuration")
    ell, big_l = dims.ell, dims.big_l
    pred = predicates(occ, dims)
    nb = list(pred.nb)
    rings = [i for i in range(big_l) if nb[i] > 0]
    if len(occ) == 1:
        return Classification(SetLabel.GATHERED, pred)
    if len(rings) == 1 and nb[rings[0]] in (2, 3) and _is_consecutive(ring_positions(occ, rings[0]), ell):
        return Classification(SetLabel.SP4, pred)
    t = pred.target
    if t is not None and pred.empty and nb[t.l_target] == 1:
        pm = ring_positions(occ, t.l_max)
        v = t.v_target.pos
        if sp3_match(pm, v, ell):
            return Classification(SetLabel.SP3, pred)
        if sp2_kind(pm, v, ell) is not None:
            return Classification(SetLabel.SP2, pred)
    s1 = sp1_match(occ, dims, nb)
    if s1 is not None:
        return Classification(SetLabel.SP1, pred, sp1=s1)
    if t is not None:
        return Classification(SetLabel.PR if pred.partial else SetLabel.LS, pred)
    if not pred.unique:
        return Classification(SetLabel.NOT_UNIQUE, pred)
    m = pred.l_max
    a, b = (m - 1) % big_l, (m + 1) % big_l
    na, nbb = nb[a], nb[b]
    if na == 0 and nbb == 0:
        return Classification(SetLabel.EMPTY, pred, a, b)
    if min(na, nbb) == 0:
        li, lk = (a, b) if na == 0 else (b, a)
        if nb[lk] == 1:
            raise ModelViolation("one adjacent ring empty and the other with one node should be a target")
        return Classification(SetLabel.SEMI_EMPTY, pred, li, lk)
    if na == 1 and nbb == 1:
        return Classification(SetLabel.SEMI_ORIENTED, pred, a, b)
    if min(na, nbb) == 1:
        li, lk = (a, b) if na == 1 else (b, a)
        lab = SetLabel.ORIENTED_1 if oriented1_match(occ, ell, li, lk) else SetLabel.ORIENTED_2
        return Classification(lab, pred, li, lk)
    li, lk = (a, b) if na <= nbb else (b, a)
    return Classification(SetLabel.UNDEFINED, pred, li, lk)


def phase_and_set(cfg, dims: TorusDims | None = None) -> SetLabel:
    return classify_occ(_occ_set(cfg), _dims(cfg, dims)).label


# --- Gamma -------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaConfig:
    base: frozenset
    dims: TorusDims
    ignored_rings: frozenset
    occupied: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "occupied", frozenset(c for c in self.base if c[0] not in self.ignored_rings))


def gamma(cfg, li: int, lk: int, dims: TorusDims | None = None) -> GammaConfig:
    occ = _occ_set(cfg)
    dims = _dims(cfg, dims)
    rings = {r for r, _ in occ}
    if len(rings) < 3:
        raise PreconditionError("Gamma needs at least three occupied rings")
    ignored = {li, lk} if len(rings) >= 4 else {li}
    return GammaConfig(occ, dims, frozenset(ignored))


@dataclass(frozen=True)
class GammaAnalysis:
    gamma: GammaConfig
    subcase: str  # rigid, node-edge, node-node, edge-edge, reduce
    axis: Optional[SymmetryAxis]


def analyse_gamma(g: GammaConfig) -> GammaAnalysis:
    stab = stabilizer(g.occupied, g.dims)
    if not stab:
        return GammaAnalysis(g, "rigid", None)
    if len(stab) == 1 and stab[0].sr == 1 and stab[0].sp == -1:
        ax = SymmetryAxis("perpendicular", stab[0].dp % g.dims.ell)
        return GammaAnalysis(g, crossing_for_anchor(ax.anchor2, g.dims.ell).kind, ax)
    return GammaAnalysis(g, "reduce", None)


# --- summary tag ------------------------------------------------------------------

@dataclass(frozen=True)
class ClassTag:
    rigid: bool
    axes: tuple
    periodic: bool
    unique_max: Optional[int]
    target: Optional[Target]
    label: SetLabel


def class_tag(cfg, dims: TorusDims | None = None) -> ClassTag:
    occ = _occ_set(cfg)
    dims = _dims(cfg, dims)
    cl = classify_occ(occ, dims)
    return ClassTag(
        rigid=is_rigid(occ, dims),
        axes=tuple(symmetry_axes(occ, dims)),
        periodic=is_periodic(occ, dims),
        unique_max=cl.pred.l_max,
        target=cl.pred.target,
        label=cl.label,
    )
