"""Repetitivity and repulsivity estimates.

Repetitivity is measured on the window side: the smallest orbit height N
such that every start phase (sampled on a uniform grid of the window) visits
every component of the r-regular grid within the orbit box [-N, N]^d.  For a
one-dimensional window this reduces to exact circular-arc coverage: the
translated component arcs have the circular gap structure of the orbit
itself, so both the grid estimate and the sufficient all-starts criterion
(max orbit gap at most the component length) are evaluated without
materialising any start points.

Repulsivity is the smallest chart distance between two scanned indices whose
window coordinates share a component, which is the minimal recurrence gap of
r-patches inside the scan box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acceptance import RegularGrid, build_grid, cell_indices, min_side
from .errors import BudgetExceeded, NoRecurrence
from .scheme import SchemeSpec, check_regular, frac, lattice_box

DEFAULT_GRID_DENSITY = 1000
DEFAULT_N_CAP = 10**6
ORBIT_BUDGET = 10**7


@dataclass(frozen=True)
class RepetitivityEstimate:
    """Window-side repetitivity at one scale.

    ``n_grid`` is the smallest orbit height covering every component from
    every start on the gamma grid (an estimate from below of the all-starts
    value); ``n_sufficient`` is the smallest height whose orbit gaps are
    finer than every component (an estimate from above; one-dimensional
    windows only).
    """

    r: float
    n_grid: int
    n_sufficient: int | None
    grid_density: int


@dataclass(frozen=True)
class RepulsivityResult:
    r: float
    value: float  # chart distance of the closest same-patch pair
    offset: tuple[int, ...]
    n_scan: int


@dataclass(frozen=True)
class RegularityCurve:
    kind: str  # "repetitivity" | "repulsivity"
    method: str
    samples: tuple[tuple[float, float], ...]  # (r, value), r increasing

    def __post_init__(self):
        rs = [r for r, _ in self.samples]
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("curve scales must be strictly increasing")


def _orbit_values(spec: SchemeSpec, N: int, budget: int) -> np.ndarray:
    """Sorted window values frac(L(n)) over the orbit box (1-d window)."""
    pts = lattice_box(N, spec.d, budget=budget)
    return np.sort(np.asarray(frac(pts.astype(float) @ spec.alpha.T))[:, 0])


def _coverage_state(spec: SchemeSpec, grid: RegularGrid, N: int, density: int, budget: int):
    """(grid_ok, all_ok) of the orbit at height N against every component."""
    orbit = _orbit_values(spec, N, budget)
    gaps = np.diff(np.append(orbit, orbit[0] + 1.0))
    max_gap = float(gaps.max())
    all_ok = max_gap <= min_side(grid)
    if all_ok:
        return True, True
    cuts = grid.cuts[0]
    lengths = np.diff(np.append(cuts, 1.0))
    grid_ok = True
    for a, length in zip(cuts, lengths):
        if max_gap <= length:
            continue
        starts = np.asarray(frac(a + orbit))
        open_gaps = gaps > length
        u = starts[open_gaps] + length
        v = starts[open_gaps] + gaps[open_gaps]
        # a start-grid multiple of 1/density inside [u, v) breaks coverage
        if np.any(np.ceil(u * density) < v * density):
            grid_ok = False
            break
    return grid_ok, all_ok


def _search_smallest(ok, n_cap: int) -> int:
    if ok(0):
        return 0
    n = 1
    while not ok(n):
        n *= 2
        if n > n_cap:
            raise BudgetExceeded(f"repetitivity height exceeded cap {n_cap}")
    lo, hi = n // 2, n  # ok(hi), not ok(lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def repetitivity(
    spec: SchemeSpec,
    r: float,
    grid_density: int = DEFAULT_GRID_DENSITY,
    n_cap: int = DEFAULT_N_CAP,
    component_budget: int = 10**7,
    orbit_budget: int = ORBIT_BUDGET,
) -> RepetitivityEstimate:
    """Smallest orbit height meeting every r-component from every grid start."""
    grid = build_grid(spec, r, budget=component_budget)
    if spec.internal_dim == 1:
        states: dict[int, tuple[bool, bool]] = {}

        def state(n: int) -> tuple[bool, bool]:
            if n not in states:
                states[n] = _coverage_state(spec, grid, n, grid_density, orbit_budget)
            return states[n]

        n_grid = _search_smallest(lambda n: state(n)[0], n_cap)
        n_suff = _search_smallest(lambda n: state(n)[1], n_cap)
        return RepetitivityEstimate(
            r=float(r), n_grid=n_grid, n_sufficient=n_suff, grid_density=grid_density
        )
    n_grid = _search_smallest(
        lambda n: _grid_covered_nd(spec, grid, n, grid_density, orbit_budget), n_cap
    )
    return RepetitivityEstimate(
        r=float(r), n_grid=n_grid, n_sufficient=None, grid_density=grid_density
    )


def _grid_covered_nd(
    spec: SchemeSpec, grid: RegularGrid, N: int, density: int, budget: int
) -> bool:
    """Boolean-mask coverage check for windows of dimension two and higher."""
    m = spec.internal_dim
    if density**m > budget:
        raise BudgetExceeded("start-point grid exceeds budget; lower the density")
    pts = lattice_box(N, spec.d, budget=budget)
    offsets = np.asarray(frac(pts.astype(float) @ spec.alpha.T))  # (n_orb, m)
    for cid_lo, cid_hi in _component_boxes(grid):
        covered = np.zeros((density,) * m, dtype=bool)
        for off in offsets:
            slices_per_axis = []
            for j in range(m):
                lo = frac(cid_lo[j] - off[j])
                hi = lo + (cid_hi[j] - cid_lo[j])
                i0 = int(np.ceil(lo * density))
                i1 = int(np.ceil(hi * density))
                if i1 <= density:
                    slices_per_axis.append([slice(i0, i1)])
                else:
                    slices_per_axis.append([slice(i0, density), slice(0, i1 - density)])
            from itertools import product

            for combo in product(*slices_per_axis):
                covered[combo] = True
        if not covered.all():
            return False
    return True


def _component_boxes(grid: RegularGrid):
    for cid in grid.all_ids():
        yield grid.box_of(cid)


def repulsivity(
    spec: SchemeSpec,
    r: float,
    n_scan: int,
    component_budget: int = 10**7,
    point_budget: int = 10**7,
) -> RepulsivityResult:
    """Minimal chart distance between two same-patch indices in the scan box.

    Points are grouped by grid component; the closest pair inside each group
    is found by a nearest-neighbour query on the chart positions.
    """
    from scipy.spatial import cKDTree

    grid = build_grid(spec, r, budget=component_budget)
    pts = lattice_box(n_scan, spec.d, budget=point_budget)
    check_regular(spec, pts)
    phase = spec.t + pts.astype(float) @ spec.alpha.T
    w = np.asarray(frac(phase))
    q = np.floor(phase)
    cells = cell_indices(grid, w)
    lin = np.zeros(len(pts), dtype=np.int64)
    for j, size in enumerate(grid.shape):
        lin = lin * size + cells[:, j]
    if spec.m_is_zero:
        positions = pts.astype(float)
    else:
        positions = (pts - q @ spec.m_map.T) @ spec.chart_matrix().T
    order = np.argsort(lin, kind="stable")
    groups = np.split(order, np.flatnonzero(np.diff(lin[order])) + 1)
    best = np.inf
    best_offset: tuple[int, ...] | None = None
    for members in groups:
        if len(members) < 2:
            continue
        tree = cKDTree(positions[members])
        dists, idx = tree.query(positions[members], k=2)
        i_local = int(np.argmin(dists[:, 1]))
        if dists[i_local, 1] < best:
            best = float(dists[i_local, 1])
            i, j = members[i_local], members[idx[i_local, 1]]
            best_offset = tuple(int(x) for x in (pts[j] - pts[i]))
    if best_offset is None:
        raise NoRecurrence(f"no repeated r-patch within |p| <= {n_scan}; raise the budget")
    return RepulsivityResult(r=float(r), value=best, offset=best_offset, n_scan=n_scan)


def repetitivity_curve(spec: SchemeSpec, r_values: Sequence[float], **kwargs) -> RegularityCurve:
    samples = []
    for r in r_values:
        est = repetitivity(spec, r, **kwargs)
        samples.append((float(r), float(est.n_grid)))
    return RegularityCurve(kind="repetitivity", method="window-grid", samples=tuple(samples))


def repulsivity_curve(
    spec: SchemeSpec, r_values: Sequence[float], n_scan: int, **kwargs
) -> RegularityCurve:
    samples = []
    for r in r_values:
        res = repulsivity(spec, r, n_scan, **kwargs)
        samples.append((float(r), res.value))
    return RegularityCurve(kind="repulsivity", method="orbit-scan", samples=tuple(samples))
