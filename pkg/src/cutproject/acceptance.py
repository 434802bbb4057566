"""Acceptance-domain grid: singular cuts, regular components, exact frequencies.

The window points hit by translated window boundaries under lattice indices
of height at most r form, coordinate by coordinate, a finite set of cut
values ``frac(L_j(p))`` for p in [-r, r]^d.  The regular points fall into a
product grid of half-open boxes; each box is the acceptance domain of one
r-patch class and its volume is that patch's exact frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadComponent, BudgetExceeded, SingularPoint, TooManyComponents
from .scheme import SchemeSpec, frac, lattice_box

DEFAULT_DEDUP_TOL = 1e-10
DEFAULT_COMPONENT_BUDGET = 10**7


@dataclass(frozen=True)
class ComponentId:
    """Per-coordinate interval index into the grid cuts."""

    idx: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "idx", tuple(int(i) for i in self.idx))


@dataclass(frozen=True, eq=False)
class RegularGrid:
    """Sorted cut points per internal coordinate plus dedup tolerance.

    ``cuts[j]`` always contains 0 (the p = 0 boundary) and is strictly
    increasing; the last interval of each coordinate is [last_cut, 1).
    """

    r: float
    cuts: tuple[np.ndarray, ...]
    dedup_tol: float = DEFAULT_DEDUP_TOL

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cuts)

    @property
    def n_components(self) -> int:
        return int(np.prod([len(c) for c in self.cuts], dtype=np.int64))

    def lengths(self, j: int) -> np.ndarray:
        """Interval lengths of coordinate j, wrap interval included."""
        c = self.cuts[j]
        return np.diff(np.append(c, 1.0))

    def all_ids(self):
        for idx in np.ndindex(*self.shape):
            yield ComponentId(idx)

    def box_of(self, cid: ComponentId) -> tuple[np.ndarray, np.ndarray]:
        """Half-open box [lo, hi) of a component."""
        _check_id(self, cid)
        lo = np.array([self.cuts[j][i] for j, i in enumerate(cid.idx)])
        hi = np.array(
            [
                self.cuts[j][i + 1] if i + 1 < len(self.cuts[j]) else 1.0
                for j, i in enumerate(cid.idx)
            ]
        )
        return lo, hi

    def linear_index(self, cid: ComponentId) -> int:
        _check_id(self, cid)
        return int(np.ravel_multi_index(cid.idx, self.shape))


def _check_id(grid: RegularGrid, cid: ComponentId) -> None:
    if len(cid.idx) != len(grid.cuts):
        raise BadComponent(f"id has {len(cid.idx)} coordinates, grid expects {len(grid.cuts)}")
    for j, i in enumerate(cid.idx):
        if not 0 <= i < len(grid.cuts[j]):
            raise BadComponent(f"index {i} out of range for coordinate {j}")


def _dedup_circle(values: np.ndarray, tol: float) -> np.ndarray:
    """Sort and merge cut values closer than tol, treating 1 as 0."""
    vals = np.sort(values)
    keep = [vals[0]]
    for v in vals[1:]:
        if v - keep[-1] > tol:
            keep.append(v)
    # a cut within tol below 1 coincides with the cut at 0 modulo 1
    if len(keep) > 1 and 1.0 - keep[-1] <= tol:
        keep.pop()
    return np.array(keep)


def build_grid(
    spec: SchemeSpec,
    r: float,
    dedup_tol: float = DEFAULT_DEDUP_TOL,
    budget: int = DEFAULT_COMPONENT_BUDGET,
) -> RegularGrid:
    """Cut grid of the r-singular points.

    cuts[j] = sorted, deduplicated {frac(L_j(p)) : p in [-r, r]^d}.  Raises
    TooManyComponents when the product of cut counts exceeds ``budget``.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    # a generic slope produces no coincident cuts, so the enumeration size
    # (2 floor(r) + 1)^d already lower-bounds the component count
    try:
        pts = lattice_box(r, spec.d, budget=budget)
    except BudgetExceeded as exc:
        raise TooManyComponents(str(exc)) from exc
    vals = np.asarray(frac(pts @ spec.alpha.T))  # (n_pts, k-d)
    cuts = []
    total = 1
    for j in range(spec.internal_dim):
        cj = _dedup_circle(vals[:, j], dedup_tol)
        # p = 0 contributes frac(0) = 0 exactly; dedup keeps the smallest
        # representative, which a near-1 straggler may have displaced
        if cj[0] != 0.0:
            cj = np.concatenate(([0.0], cj[cj > dedup_tol]))
        cj.setflags(write=False)
        cuts.append(cj)
        total *= len(cj)
        if total > budget:
            raise TooManyComponents(
                f"grid would have at least {total} components, budget {budget}"
            )
    return RegularGrid(r=float(r), cuts=tuple(cuts), dedup_tol=dedup_tol)


def cell_indices(grid: RegularGrid, w: np.ndarray) -> np.ndarray:
    """Left-closed interval index per coordinate, no singularity check.

    ``w`` has shape (..., k-d); values equal to a cut land in the interval
    that starts there.  This is the assignment rule of the counting sweeps.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    out = np.empty(w.shape, dtype=np.int64)
    for j, c in enumerate(grid.cuts):
        out[..., j] = np.searchsorted(c, w[..., j], side="right") - 1
    return out


def component_of(grid: RegularGrid, w) -> ComponentId:
    """Component of a regular window point; SingularPoint on or near a cut."""
    w = np.asarray(w, dtype=float).reshape(len(grid.cuts))
    idx = []
    for j, c in enumerate(grid.cuts):
        # circle distance to the cut set; the wrap cut at 1 is the cut at 0
        gaps = np.abs(w[j] - c)
        d = min(gaps.min(), 1.0 - w[j])
        if d <= grid.dedup_tol:
            raise SingularPoint(
                f"coordinate {j} of {w[j]!r} lies on a cut within {grid.dedup_tol:.0e}"
            )
        idx.append(int(np.searchsorted(c, w[j], side="right") - 1))
    return ComponentId(tuple(idx))


def frequency(grid: RegularGrid, cid: ComponentId) -> float:
    """Exact patch frequency: the volume of the component box."""
    lo, hi = grid.box_of(cid)
    return float(np.prod(hi - lo))


def all_frequencies(grid: RegularGrid) -> np.ndarray:
    """Volumes of every component, indexed by the linearised grid order."""
    per_coord = [grid.lengths(j) for j in range(len(grid.cuts))]
    out = per_coord[0]
    for lens in per_coord[1:]:
        out = np.multiply.outer(out, lens)
    return out.ravel()


def min_side(grid: RegularGrid) -> float:
    """Smallest interval length over all coordinates, wrap gap included."""
    return min(float(grid.lengths(j).min()) for j in range(len(grid.cuts)))


def max_side(grid: RegularGrid) -> float:
    """Largest interval length over all coordinates, wrap gap included."""
    return max(float(grid.lengths(j).max()) for j in range(len(grid.cuts)))
