"""Patches and their acceptance regions.

Two layers live here.  The staircase layer is the brute-force patch oracle:
the r-patch at index p is coded by the integer increments
``dq(n) = lift(p+n).v - lift(p).v = floor(w(p) + L(n))`` over the offset box
``n in [-r, r]^d``, and two indices carry equivalent r-patches exactly when
their staircase codes agree.

The shape layer realises patches cut out by a scaled convex body: the
candidate lattice differences are the integer vectors m = (n, v) with
internal displacement ``v - L(n)`` inside the open window difference
(-1, 1)^(k-d) whose chart position lies in r*Omega (the pi-chart for
geometric patches, the plain index chart for cylinder patches).  The window
points whose patch equals the one at p form the acceptance region: an
axes-parallel box (intersection of the realised candidates' unit boxes),
minus one translated unit cube per retained unrealised candidate.  Cylinder
patches retain none, so their region is a plain box; for geometric patches
the retained count grows only like the boundary measure of r*Omega.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import EmptyRegion, UnboundedShape
from .scheme import (
    LatticeVector,
    SchemeSpec,
    check_regular,
    lattice_box,
    lift_offsets,
    window_coord,
)

BOUNDARY_TOL = 1e-12


# -- staircase patterns -------------------------------------------------------


@dataclass(frozen=True)
class StaircasePattern:
    """Integer coding of an r-patch: offset -> internal increment."""

    r: float
    offsets: tuple[tuple[int, ...], ...]
    deltas: tuple[tuple[int, ...], ...]

    def as_dict(self) -> dict[tuple[int, ...], tuple[int, ...]]:
        return dict(zip(self.offsets, self.deltas))


def staircase(spec: SchemeSpec, p: Sequence[int], r: float) -> StaircasePattern:
    """Staircase code of the r-patch at index p.

    Patterns are compared by exact integer equality; equality is equivalent
    to equivalence of the underlying patches.
    """
    p_arr = np.asarray(p, dtype=np.int64).reshape(spec.d)
    offsets = lattice_box(r, spec.d)
    check_regular(spec, p_arr + offsets)
    w = window_coord(spec, p_arr)
    deltas = lift_offsets(spec, w, offsets.astype(float))
    return StaircasePattern(
        r=float(r),
        offsets=tuple(tuple(int(x) for x in row) for row in offsets),
        deltas=tuple(tuple(int(x) for x in row) for row in deltas),
    )


# -- patch shapes -------------------------------------------------------------


class PatchKind(Enum):
    TYPE_I = "type1"  # measured in the pi-chart (geometric positions)
    TYPE_II = "type2"  # measured in the reference chart (lattice indices)


@dataclass(frozen=True)
class BoxOmega:
    """Axes-parallel convex body given by per-coordinate (lo, hi), lo < 0 < hi."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @staticmethod
    def symmetric(halfwidth: float, d: int) -> "BoxOmega":
        return BoxOmega(tuple([-halfwidth] * d), tuple([halfwidth] * d))

    def validate(self, d: int) -> None:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        if lo.shape != (d,) or hi.shape != (d,):
            raise UnboundedShape(f"box bounds must have dimension {d}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise UnboundedShape("box bounds must be finite")
        if not np.all((lo < 0) & (hi > 0)):
            raise UnboundedShape("box must contain a neighbourhood of the origin")

    def contains(self, x: np.ndarray, scale: float) -> np.ndarray:
        x = np.atleast_2d(x)
        lo = scale * np.asarray(self.lo) - BOUNDARY_TOL
        hi = scale * np.asarray(self.hi) + BOUNDARY_TOL
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def bounding_radii(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def inradius(self) -> float:
        return float(min(np.min(np.abs(self.lo)), np.min(np.abs(self.hi))))


@dataclass(frozen=True)
class BallOmega:
    radius: float

    def validate(self, d: int) -> None:
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise UnboundedShape("ball radius must be positive and finite")

    def contains(self, x: np.ndarray, scale: float) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.linalg.norm(x, axis=-1) <= scale * self.radius + BOUNDARY_TOL

    def bounding_radii(self) -> np.ndarray:
        return np.array([self.radius])

    def inradius(self) -> float:
        return float(self.radius)


@dataclass(frozen=True)
class PolytopeOmega:
    """Convex body given by its vertex list; membership by half-space test."""

    vertices: tuple[tuple[float, ...], ...]

    def _equations(self) -> np.ndarray:
        from scipy.spatial import ConvexHull

        verts = np.asarray(self.vertices, dtype=float)
        if verts.shape[1] == 1:
            lo, hi = verts.min(), verts.max()
            return np.array([[-1.0, lo], [1.0, -hi]])  # -x + lo <= 0, x - hi <= 0
        hull = ConvexHull(verts)
        return hull.equations  # rows (normal..., offset): n.x + off <= 0

    def validate(self, d: int) -> None:
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != d or not np.all(np.isfinite(verts)):
            raise UnboundedShape(f"polytope needs finite vertices of dimension {d}")
        try:
            eqs = self._equations()
        except Exception as exc:
            raise UnboundedShape(f"degenerate vertex list: {exc}") from exc
        if not np.all(eqs[:, -1] < 0):
            raise UnboundedShape("polytope must contain the origin in its interior")

    def contains(self, x: np.ndarray, scale: float) -> np.ndarray:
        x = np.atleast_2d(x)
        eqs = self._equations()
        vals = x @ eqs[:, :-1].T + scale * eqs[:, -1]
        return np.all(vals <= BOUNDARY_TOL, axis=-1)

    def bounding_radii(self) -> np.ndarray:
        return np.max(np.abs(np.asarray(self.vertices)), axis=0)

    def inradius(self) -> float:
        eqs = self._equations()
        return float(np.min(-eqs[:, -1] / np.linalg.norm(eqs[:, :-1], axis=1)))


@dataclass(frozen=True)
class PatchShape:
    kind: PatchKind
    omega: BoxOmega | BallOmega | PolytopeOmega
    r: float

    def validate(self, d: int) -> None:
        if not (np.isfinite(self.r) and self.r >= 0):
            raise UnboundedShape("scale r must be finite and nonnegative")
        self.omega.validate(d)


# -- axes-parallel boxes ------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Half-open axes-parallel box [lo, hi)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(float(x) for x in self.hi))

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def volume(self) -> float:
        return float(np.prod(np.maximum(self.sides, 0.0)))

    def is_empty(self, eps: float = 0.0) -> bool:
        return bool(np.any(self.sides <= eps))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lo) & (x < self.hi)))

    def intersect(self, other: "Box") -> "Box":
        return Box(
            np.maximum(self.lo, other.lo),
            np.minimum(self.hi, other.hi),
        )


def unit_cube_at(corner: np.ndarray) -> Box:
    corner = np.asarray(corner, dtype=float)
    return Box(corner, corner + 1.0)


def box_minus_cubes_decompose(base: Box, holes: Sequence[Box]) -> list[Box]:
    """Disjoint box decomposition of base minus the union of unit-cube holes.

    Requires base side lengths at most 1, so each hole exposes at most one
    face inside the base extent per axis; slicing between consecutive exposed
    faces then reduces the dimension.  Output size is at most (N+1)^m for N
    holes in dimension m.
    """
    m = len(base.lo)
    if np.any(base.sides > 1.0 + BOUNDARY_TOL):
        raise ValueError("base box must have side lengths at most 1")
    relevant = []
    for h in holes:
        if np.any(np.asarray(h.hi) - np.asarray(h.lo) < 1.0 - 1e-9):
            raise ValueError("holes must be unit cubes")
        clipped = base.intersect(h)
        if not clipped.is_empty():
            relevant.append((np.asarray(h.lo, float), np.asarray(h.hi, float)))
    boxes = _decompose(np.asarray(base.lo, float), np.asarray(base.hi, float), relevant)
    assert len(boxes) <= (len(relevant) + 1) ** m
    return boxes


def _decompose(lo, hi, holes) -> list[Box]:
    if np.any(hi - lo <= 0):
        return []
    if not holes:
        return [Box(lo, hi)]
    m = len(lo)
    if m == 1:
        a, b = lo[0], hi[0]
        for hl, hh in holes:
            if hh[0] <= a or hl[0] >= b:
                continue
            if hl[0] <= a:
                a = max(a, hh[0])
            else:
                # hole cannot sit strictly inside a base of length <= 1
                b = min(b, hl[0])
        return [Box([a], [b])] if b > a else []
    axis = m - 1
    faces = set()
    for hl, hh in holes:
        if hh[axis] <= lo[axis] or hl[axis] >= hi[axis]:
            continue
        if lo[axis] < hl[axis] < hi[axis]:
            faces.add(float(hl[axis]))
        if lo[axis] < hh[axis] < hi[axis]:
            faces.add(float(hh[axis]))
    cuts = sorted({float(lo[axis]), float(hi[axis])} | faces)
    out: list[Box] = []
    for c0, c1 in zip(cuts, cuts[1:]):
        if c1 <= c0:
            continue
        slab_holes = [
            (hl[:axis], hh[:axis])
            for hl, hh in holes
            if hl[axis] <= c0 and hh[axis] >= c1
        ]
        for sub in _decompose(lo[:axis], hi[:axis], slab_holes):
            out.append(Box(tuple(sub.lo) + (c0,), tuple(sub.hi) + (c1,)))
    return out


# -- candidates and acceptance regions ----------------------------------------


def _chart_slack(spec: SchemeSpec) -> np.ndarray:
    """Per-coordinate sup of |(I - M L)^{-1} M delta| over |delta|_inf < 1."""
    if spec.m_is_zero:
        return np.zeros(spec.d)
    return np.sum(np.abs(spec.chart_matrix() @ spec.m_map), axis=1)


def lattice_candidates(spec: SchemeSpec, shape: PatchShape) -> list[LatticeVector]:
    """All lattice vectors that could join a patch of the given shape.

    These are the m = (n, v) with v - L(n) in the open window difference and
    chart position in r*Omega; the chart is the pi projection for type I and
    the index map for type II.  Finite because Omega is bounded.
    """
    shape.validate(spec.d)
    r = shape.r
    radii = shape.omega.bounding_radii()
    if radii.shape == (1,) and spec.d > 1:
        radii = np.repeat(radii, spec.d)
    extent = r * radii
    if shape.kind is PatchKind.TYPE_I:
        extent = extent + _chart_slack(spec)
    n_max = np.floor(extent + BOUNDARY_TOL).astype(np.int64)
    axes = [np.arange(-nm, nm + 1, dtype=np.int64) for nm in n_max]
    grid = np.meshgrid(*axes, indexing="ij") if spec.d > 1 else [axes[0]]
    ns = np.stack([g.ravel() for g in grid], axis=-1).reshape(-1, spec.d)
    L = ns.astype(float) @ spec.alpha.T  # (n_pts, k-d)
    base = np.floor(L).astype(np.int64)
    has_upper = L - np.floor(L) > 0  # floor(L)+1 admissible iff L not integer
    out: list[LatticeVector] = []
    chart_mat = None if spec.m_is_zero else spec.chart_matrix()
    for i in range(ns.shape[0]):
        options = [
            (int(base[i, j]), int(base[i, j]) + 1) if has_upper[i, j] else (int(base[i, j]),)
            for j in range(spec.internal_dim)
        ]
        for v in itertools.product(*options):
            if shape.kind is PatchKind.TYPE_II or spec.m_is_zero:
                chart = ns[i].astype(float)
            else:
                chart = chart_mat @ (ns[i] - spec.m_map @ np.asarray(v, float))
            if shape.omega.contains(chart, r)[0]:
                out.append(LatticeVector(tuple(int(x) for x in ns[i]), v))
    out.sort(key=lambda lv: (lv.n, lv.v))
    return out


def classify_candidates(
    spec: SchemeSpec, shape: PatchShape, p: Sequence[int]
) -> tuple[list[LatticeVector], list[LatticeVector]]:
    """Split the candidate set by whether each is realised at the index p.

    A candidate (n, v) is realised exactly when the staircase increment at
    offset n equals v.
    """
    candidates = lattice_candidates(spec, shape)
    p_arr = np.asarray(p, dtype=np.int64).reshape(spec.d)
    phys = np.array(sorted({lv.n for lv in candidates}), dtype=np.int64).reshape(-1, spec.d)
    check_regular(spec, p_arr + phys)
    w = window_coord(spec, p_arr)
    dq = {tuple(n): tuple(int(x) for x in row) for n, row in
          zip(phys, lift_offsets(spec, w, phys.astype(float)))}
    z_in = [lv for lv in candidates if lv.v == dq[lv.n]]
    z_out = [lv for lv in candidates if lv.v != dq[lv.n]]
    return z_in, z_out


def patch_key(spec: SchemeSpec, shape: PatchShape, p: Sequence[int]) -> tuple:
    """Hashable identity of the shaped patch at p (the realised set)."""
    z_in, _ = classify_candidates(spec, shape, p)
    return tuple((lv.n, lv.v) for lv in z_in)


@dataclass(frozen=True)
class AcceptanceRegion:
    """Box-minus-unit-cubes subset of the window accepting one patch class."""

    base: Box
    holes: tuple[Box, ...]
    boxes: tuple[Box, ...]

    def volume(self) -> float:
        return float(sum(b.volume() for b in self.boxes))

    def contains(self, w) -> bool:
        return any(b.contains(w) for b in self.boxes)


def acceptance_region(
    spec: SchemeSpec, shape: PatchShape, p: Sequence[int]
) -> AcceptanceRegion:
    """Acceptance region of the shaped patch at index p.

    The base box is the intersection of the realised candidates' translated
    unit boxes.  An unrealised candidate (n, v) survives as a hole only when
    the realised variant of the same column, (n, dq(n)), falls outside the
    candidate set; whenever it is a candidate, it already pins the staircase
    increment at n on the whole base, so the constraint is implied and the
    hole is dropped.  Cylinder (type II) regions therefore never carry holes.
    """
    z_in, z_out = classify_candidates(spec, shape, p)
    w = window_coord(spec, p)
    lo = np.full(spec.internal_dim, -np.inf)
    hi = np.full(spec.internal_dim, np.inf)
    for lv in z_in:
        corner = lv.v_arr - spec.alpha @ lv.n_arr
        lo = np.maximum(lo, corner)
        hi = np.minimum(hi, corner + 1.0)
    base = Box(lo, hi)
    if base.is_empty() or not base.contains(w):
        raise EmptyRegion("realised constraints exclude the defining point")
    holes: list[Box] = []
    if shape.kind is PatchKind.TYPE_I and not spec.m_is_zero:
        chart_mat = spec.chart_matrix()
        realized_v = {}
        for lv in z_in:
            realized_v[lv.n] = lv.v_arr
        for lv in z_out:
            dq = realized_v.get(lv.n)
            if dq is None:
                dq = lift_offsets(spec, w, lv.n_arr.reshape(1, -1))[0].astype(float)
            chart = chart_mat @ (lv.n_arr - spec.m_map @ dq)
            if shape.omega.contains(chart, shape.r)[0]:
                continue  # realised variant is a candidate: constraint implied
            cube = unit_cube_at(lv.v_arr - spec.alpha @ lv.n_arr)
            if not base.intersect(cube).is_empty():
                holes.append(cube)
    boxes = box_minus_cubes_decompose(base, holes)
    region = AcceptanceRegion(base=base, holes=tuple(holes), boxes=tuple(boxes))
    if not region.contains(w):
        raise EmptyRegion("defining point fell out of its own acceptance region")
    return region


def nesting_constant(spec: SchemeSpec, omega) -> float:
    """Scale slack c with P_I(y,(r-c)O) <= P_II(y,rO) <= P_I(y,(r+c)O).

    The pi-chart and index-chart positions of a realised lattice difference
    differ by at most the chart distortion times the window diameter; divide
    by the inradius to convert that displacement into a scale change.
    """
    kappa = spec.chart_distortion() * np.sqrt(spec.internal_dim)
    return float(kappa / omega.inradius())


def patch_to_json_dict(
    spec: SchemeSpec, shape: PatchShape, p: Sequence[int]
) -> dict:
    """Export a shaped patch with its acceptance region."""
    region = acceptance_region(spec, shape, p)
    z_in, _ = classify_candidates(spec, shape, p)
    omega = shape.omega
    if isinstance(omega, BoxOmega):
        omega_out = {"kind": "box", "lo": list(omega.lo), "hi": list(omega.hi)}
    elif isinstance(omega, BallOmega):
        omega_out = {"kind": "ball", "radius": omega.radius}
    else:
        omega_out = {"kind": "polytope", "vertices": [list(v) for v in omega.vertices]}
    return {
        "shape": {"kind": shape.kind.value, "omega": omega_out, "r": shape.r},
        "pattern": [[list(lv.n), list(lv.v)] for lv in z_in],
        "acceptance": {
            "base": {"lo": list(region.base.lo), "hi": list(region.base.hi)},
            "holes": len(region.holes),
            "boxes": [{"lo": list(b.lo), "hi": list(b.hi)} for b in region.boxes],
        },
    }
