"""Empirical frequencies, discrepancy sweeps, and exponential-sum diagnostics.

Counting follows the orbit identification: the points of the set indexed by
``[-R, R]^d`` around an anchor visit the window along the Kronecker orbit
``w(anchor) + L(n) mod 1``, so patch counts are visit counts of grid cells.
Two counting engines are provided.  The streaming engine enumerates lattice
indices in blocks and bins window values into cells; it works in any
dimension.  The coverage engine, available when the window is one
dimensional, replaces enumeration along the last lattice axis by an exact
circular-coverage function evaluated with sorted breakpoints, which brings a
full (2R+1)^2 sweep down to O(R log R); both engines assign boundary hits to
the left-closed interval and conserve the total count exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .acceptance import RegularGrid, all_frequencies
from .errors import BudgetExceeded, ResonantFrequency, TooManyComponents
from .scheme import SchemeSpec, check_regular, dist_to_int, frac, window_coord

BOUNDARY_FLAG_TOL = 1e-12
RESONANCE_TOL = 1e-9

STREAM_BUDGET = 2 * 10**8
_CHUNK = 4 * 10**6


@dataclass(frozen=True)
class CountResult:
    """Raw per-component visit counts of one orbit sweep."""

    counts: np.ndarray  # linearised grid order
    n_points: int
    boundary_hits: int  # orbit points within tolerance of a cut (flagged, kept)


@dataclass(frozen=True)
class DiscrepancyReport:
    r: float
    R: float
    component: tuple[int, ...] | str  # id of the extremal cell, or "sup"
    empirical: float
    exact: float
    discrepancy: float  # |empirical - exact| * n_points
    bound: float  # reference envelope C (log R)^(k+eps) / R^d
    n_points: int
    boundary_hits: int


def theory_bound(R: float, k: int, d: int, c: float = 1.0, epsilon: float = 1.0) -> float:
    return c * math.log(max(R, 2.0)) ** (k + epsilon) / max(R, 1.0) ** d


def component_counts(
    spec: SchemeSpec,
    grid: RegularGrid,
    y_anchor: Sequence[int],
    R: float,
    method: str = "auto",
    budget: int = STREAM_BUDGET,
    flag_boundary: bool = True,
) -> CountResult:
    """Visit counts of every grid cell by the orbit over [-R, R]^d.

    ``method`` is "coverage", "stream", or "auto" (coverage whenever the
    window is one dimensional and d <= 2).  Counts always total
    (2 floor(R) + 1)^d exactly.  ``flag_boundary=False`` skips the
    near-cut hit count (reported as -1) on large streaming sweeps.
    """
    check_regular(spec, np.asarray(y_anchor, dtype=float).reshape(spec.d))
    w0 = window_coord(spec, y_anchor)
    N = int(math.floor(R))
    if method == "auto":
        method = "coverage" if spec.internal_dim == 1 and spec.d <= 2 else "stream"
    if method == "coverage":
        if spec.internal_dim != 1 or spec.d > 2:
            raise ValueError("coverage counting needs a 1-d window and d <= 2")
        return _coverage_counts(spec, grid, float(w0[0]), N)
    return _stream_counts(spec, grid, w0, N, budget, flag_boundary)


def _coverage_counts(spec: SchemeSpec, grid: RegularGrid, w0: float, N: int) -> CountResult:
    """Exact cell counts via circular coverage along the last lattice axis.

    For each cut c_j the breakpoints b_j(n) = frac(c_j - n * theta_last)
    mark where the inner orbit enters cell j; an evaluation phase e lies in
    cell j for inner index n exactly when e falls in the circular arc
    [b_j(n), b_{j+1}(n)).  Summing the arc indicator over n via sorted
    breakpoints gives each cell's count against all evaluation phases at
    once, and the wrap terms cancel so the total is exact.
    """
    cuts = grid.cuts[0]
    nc = len(cuts)
    theta_in = spec.alpha[0, -1]
    inner = np.arange(-N, N + 1)
    M = inner.size
    if nc == 1:
        # single component: the whole window, every orbit point lands in it
        total = M**spec.d
        return CountResult(
            counts=np.array([total], dtype=np.int64), n_points=total, boundary_hits=0
        )
    B = np.asarray(frac(cuts[:, None] - inner[None, :] * theta_in))  # (nc, M)
    B_next = np.roll(B, -1, axis=0)
    W = np.sum(B > B_next, axis=1)  # wrap indicator per cut row
    Bs = np.sort(B, axis=1)
    if spec.d == 1:
        cs = np.array([w0])
    else:
        cs = np.asarray(frac(w0 + inner * spec.alpha[0, 0]))
    T = np.empty(nc, dtype=np.int64)
    boundary = 0
    for j in range(nc):
        pos = np.searchsorted(Bs[j], cs, side="right")
        T[j] = int(pos.sum())
        lo = np.searchsorted(Bs[j], cs - BOUNDARY_FLAG_TOL, side="left")
        hi = np.searchsorted(Bs[j], cs + BOUNDARY_FLAG_TOL, side="right")
        boundary += int(np.sum(hi - lo))
        # circle wrap: breakpoints just below 1 against phases just above 0
        hi_wrap = np.searchsorted(Bs[j], cs + 1.0 - BOUNDARY_FLAG_TOL, side="left")
        boundary += int(np.sum(M - hi_wrap))
        lo_wrap = np.searchsorted(Bs[j], cs - 1.0 + BOUNDARY_FLAG_TOL, side="right")
        boundary += int(np.sum(lo_wrap))
    counts = T - np.roll(T, -1) + cs.size * W
    return CountResult(
        counts=counts.astype(np.int64),
        n_points=int(M) * int(cs.size),
        boundary_hits=boundary,
    )


def _stream_counts(
    spec: SchemeSpec,
    grid: RegularGrid,
    w0: np.ndarray,
    N: int,
    budget: int,
    flag_boundary: bool = True,
) -> CountResult:
    m = spec.internal_dim
    M = 2 * N + 1
    total = M**spec.d
    if total > budget:
        raise BudgetExceeded(f"orbit sweep of {total} points exceeds budget {budget}")
    shape = grid.shape
    n_comp = grid.n_components
    if n_comp > budget:
        raise TooManyComponents(f"{n_comp} components exceed budget {budget}")
    inner = np.arange(-N, N + 1)
    inner_phase = inner[:, None] * spec.alpha[:, -1][None, :]  # (M, m)
    if spec.d == 1:
        outer_phase = np.zeros((1, m))
    else:
        outer_axes = [np.arange(-N, N + 1)] * (spec.d - 1)
        outer = np.stack(
            [g.ravel() for g in np.meshgrid(*outer_axes, indexing="ij")], axis=-1
        )
        outer_phase = outer.astype(float) @ spec.alpha[:, :-1].T
    counts = np.zeros(n_comp, dtype=np.int64)
    boundary = 0
    rows_per_chunk = max(1, _CHUNK // M)
    buf = np.empty((rows_per_chunk, M, m))
    for start in range(0, outer_phase.shape[0], rows_per_chunk):
        block = outer_phase[start : start + rows_per_chunk]
        w = buf[: block.shape[0]]
        np.add(block[:, None, :], inner_phase[None, :, :], out=w)
        w += w0
        np.mod(w, 1.0, out=w)
        w[w >= 1.0] -= 1.0
        w = w.reshape(-1, m)
        lin = np.zeros(w.shape[0], dtype=np.int64)
        near = np.zeros(w.shape[0], dtype=bool) if flag_boundary else None
        for j in range(m):
            c = grid.cuts[j]
            idx = np.searchsorted(c, w[:, j], side="right") - 1
            if flag_boundary:
                left = w[:, j] - c[idx]
                right = (
                    np.where(idx + 1 < len(c), c[np.minimum(idx + 1, len(c) - 1)], 1.0)
                    - w[:, j]
                )
                near |= (left <= BOUNDARY_FLAG_TOL) | (right <= BOUNDARY_FLAG_TOL)
            lin *= shape[j]
            lin += idx
        counts += np.bincount(lin, minlength=n_comp)
        if flag_boundary:
            boundary += int(np.sum(near))
    return CountResult(
        counts=counts,
        n_points=int(total),
        boundary_hits=boundary if flag_boundary else -1,
    )


def empirical_frequency(
    spec: SchemeSpec,
    grid: RegularGrid,
    component,
    y_anchor: Sequence[int],
    R: float,
    method: str = "auto",
    budget: int = STREAM_BUDGET,
) -> float:
    """Observed frequency of one component over the orbit box [-R, R]^d."""
    result = component_counts(spec, grid, y_anchor, R, method=method, budget=budget)
    lin = grid.linear_index(component)
    return float(result.counts[lin]) / result.n_points


def sup_discrepancy(
    spec: SchemeSpec,
    grid: RegularGrid,
    y_anchor: Sequence[int],
    R: float,
    method: str = "auto",
    budget: int = STREAM_BUDGET,
    bound_c: float = 1.0,
    bound_epsilon: float = 1.0,
    flag_boundary: bool = True,
) -> DiscrepancyReport:
    """Worst cell deviation |count - n_points * frequency| in one sweep."""
    result = component_counts(
        spec, grid, y_anchor, R, method=method, budget=budget,
        flag_boundary=flag_boundary,
    )
    freqs = all_frequencies(grid)
    dev = np.abs(result.counts - result.n_points * freqs)
    worst = int(np.argmax(dev))
    return DiscrepancyReport(
        r=grid.r,
        R=float(R),
        component="sup",
        empirical=float(result.counts[worst]) / result.n_points,
        exact=float(freqs[worst]),
        discrepancy=float(dev[worst]),
        bound=theory_bound(R, spec.k, spec.d, bound_c, bound_epsilon),
        n_points=result.n_points,
        boundary_hits=result.boundary_hits,
    )


# -- exponential sums ---------------------------------------------------------


@dataclass(frozen=True)
class KroneckerOrbit:
    """Description of the orbit {frac(w0 + L(n)) : n in [-N, N]^d}."""

    w0: np.ndarray  # (m,)
    alpha: np.ndarray  # (m, d)
    N: int

    @property
    def m(self) -> int:
        return np.atleast_1d(self.w0).size

    @property
    def n_points(self) -> int:
        return (2 * self.N + 1) ** np.atleast_2d(self.alpha).shape[1]

    def exp_sum_mod(self, h: np.ndarray) -> np.ndarray:
        """|sum_n exp(2 pi i <h, x_n>)| for rows h, via Dirichlet kernels.

        The lattice box is a product, so the modulus factorises into
        |sin((2N+1) pi theta_i) / sin(pi theta_i)| with theta_i = <h, L(e_i)>.
        """
        alpha = np.atleast_2d(self.alpha)
        h = np.atleast_2d(h)
        theta = h @ alpha  # (n_h, d)
        M = 2 * self.N + 1
        s = np.abs(np.sin(np.pi * theta))
        num = np.abs(np.sin(np.pi * M * theta))
        near_int = dist_to_int(theta) < 1e-15
        ratio = np.where(near_int, float(M), num / np.where(s == 0, 1.0, s))
        return np.prod(ratio, axis=1)


def _h_lattice(H: int, m: int, budget: int) -> np.ndarray:
    n_h = (2 * H + 1) ** m - 1
    if n_h > budget:
        raise BudgetExceeded(f"{n_h} frequency vectors exceed budget {budget}")
    axes = [np.arange(-H, H + 1)] * m
    hs = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    return hs[np.any(hs != 0, axis=1)]


def r_weight(h: np.ndarray) -> np.ndarray:
    """r(h) = prod_j max(1, |h_j|)^{-1}."""
    h = np.atleast_2d(h)
    return 1.0 / np.prod(np.maximum(1.0, np.abs(h)), axis=1)


def etk_bound(
    orbit_or_points,
    H: int,
    c_m: float | None = None,
    budget: int = 10**8,
) -> float:
    """Upper bound on the normalised box discrepancy of the points.

    Evaluates C_m (1/H + sum_{0 < |h| <= H} r(h) |S_h| / N) where S_h is the
    exponential sum of the points at frequency h.  C_m defaults to the
    conservative classical constant 3^m.
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    if isinstance(orbit_or_points, KroneckerOrbit):
        m = orbit_or_points.m
        hs = _h_lattice(H, m, budget)
        sums = orbit_or_points.exp_sum_mod(hs) / orbit_or_points.n_points
    else:
        pts = np.atleast_2d(np.asarray(orbit_or_points, dtype=float))
        m = pts.shape[1]
        hs = _h_lattice(H, m, budget)
        sums = np.empty(len(hs))
        chunk = max(1, _CHUNK // max(len(pts), 1))
        for start in range(0, len(hs), chunk):
            block = hs[start : start + chunk]
            phases = np.exp(2j * np.pi * (block @ pts.T))
            sums[start : start + chunk] = np.abs(phases.mean(axis=1))
    cm = 3.0**m if c_m is None else c_m
    return float(cm * (1.0 / H + np.sum(r_weight(hs) * sums)))


@dataclass(frozen=True)
class ExpSumResult:
    abs_value: float
    bound: float  # prod_i (2 ||<h, L(e_i)>||)^{-1}


def exp_sum_closed_form(
    spec: SchemeSpec, h: Sequence[int], N: int, tol: float = RESONANCE_TOL
) -> ExpSumResult:
    """Exact |S| of the orbit exponential sum and its Diophantine bound.

    Raises ResonantFrequency when some <h, L(e_i)> is within tolerance of an
    integer (the geometric sum degenerates and the bound is vacuous).
    """
    h_arr = np.asarray(h, dtype=float).reshape(spec.internal_dim)
    theta = h_arr @ spec.alpha  # (d,)
    norms = dist_to_int(theta)
    if np.any(norms < tol):
        raise ResonantFrequency(
            f"<h, L(e_i)> within {tol:.0e} of an integer for h={list(map(int, h_arr))}"
        )
    M = 2 * N + 1
    value = float(np.prod(np.abs(np.sin(np.pi * M * theta) / np.sin(np.pi * theta))))
    bound = float(np.prod(1.0 / (2.0 * norms)))
    assert value <= bound * (1.0 + 1e-9)
    return ExpSumResult(abs_value=value, bound=bound)


def log_power_sum(
    spec: SchemeSpec, H: int, tol: float = RESONANCE_TOL, budget: int = 10**8
) -> float:
    """sum_{0<|h|<=H} r(h) prod_i ||<h, L(e_i)>||^{-1}, evaluated exactly."""
    if H < 1:
        raise ValueError("H must be >= 1")
    hs = _h_lattice(H, spec.internal_dim, budget)
    theta = hs @ spec.alpha  # (n_h, d)
    norms = dist_to_int(theta)
    if np.any(norms < tol):
        raise ResonantFrequency("resonant frequency vector in the summation range")
    return float(np.sum(r_weight(hs) * np.prod(1.0 / norms, axis=1)))


# -- fits and trend tests ------------------------------------------------------


def fit_log_exponent(H_values, sums) -> float:
    """Least-squares exponent of log H: slope of log(sum) vs log(log H)."""
    x = np.log(np.log(np.asarray(H_values, dtype=float)))
    y = np.log(np.asarray(sums, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def fit_power_exponent(xs, ys) -> float:
    """Least-squares slope of log ys against log xs."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def kendall_trend(values) -> float:
    """Kendall tau of a sequence against its index (nan-safe)."""
    from scipy.stats import kendalltau

    values = np.asarray(values, dtype=float)
    tau = kendalltau(np.arange(len(values)), values).statistic
    return float(0.0 if np.isnan(tau) else tau)
