"""Diophantine approximation machinery.

Continued fractions, best-approximation profiles of systems of linear forms,
the convergence/divergence classification of approximation functions
``psi(r) = c r^{-a} (log r)^{-b}``, and the transference step that converts a
verified absence of small solutions of ``||L(q)|| <= psi, |q| <= X`` into an
inhomogeneous covering radius.

Norms follow the max convention: ``|q|`` is the sup norm of the integer
vector, ``||L(q)||`` the max over the k-d forms of distance to the nearest
integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BudgetExceeded, Overflow
from .scheme import SchemeSpec, dist_to_int


@dataclass(frozen=True)
class CFExpansion:
    """Partial quotients and convergents of a real number."""

    x: float
    quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]  # (p_i, q_i)
    rational_termination: bool


def continued_fraction(x: float, depth: int, quotient_cap: float = 1e15) -> CFExpansion:
    """Standard continued-fraction algorithm with float-precision guard.

    Stops early with ``rational_termination=True`` when a partial quotient
    overflows ``quotient_cap`` (the input is rational at float precision).
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    quotients: list[int] = []
    convergents: list[tuple[int, int]] = []
    p_cur, p_prev = 1, 0  # p_{-1}, p_{-2}
    q_cur, q_prev = 0, 1  # q_{-1}, q_{-2}
    terminated = False
    y = float(x)
    for _ in range(depth):
        a = math.floor(y)
        quotients.append(int(a))
        p_cur, p_prev = a * p_cur + p_prev, p_cur
        q_cur, q_prev = a * q_cur + q_prev, q_cur
        convergents.append((p_cur, q_cur))
        rem = y - a
        if rem <= 0 or 1.0 / rem > quotient_cap:
            terminated = True
            break
        y = 1.0 / rem
    return CFExpansion(
        x=float(x),
        quotients=tuple(quotients),
        convergents=tuple(convergents),
        rational_termination=terminated,
    )


def value_from_quotients(quotients) -> float:
    """Real number with the given partial quotients (finite tail)."""
    num, den = 1, 0
    for a in reversed(quotients):
        num, den = a * num + den, num
    return num / den if den else float(quotients[0])


@dataclass(frozen=True)
class ApproximationRecord:
    q: tuple[int, ...]
    norm: float  # ||L(q)||
    height: int  # |q|


@dataclass(frozen=True)
class ApproximationProfile:
    """Best-approximation records: new minima of ||L(q)|| by height."""

    q_max: int
    records: tuple[ApproximationRecord, ...]

    def min_norm_up_to(self, height: int) -> float:
        """Smallest ||L(q)|| over 0 < |q| <= height (inf if none recorded)."""
        best = math.inf
        for rec in self.records:
            if rec.height <= height:
                best = rec.norm
            else:
                break
        return best


def _as_alpha(spec_or_matrix) -> np.ndarray:
    if isinstance(spec_or_matrix, SchemeSpec):
        return spec_or_matrix.alpha
    return np.atleast_2d(np.asarray(spec_or_matrix, dtype=float))


def linear_form_norm(spec_or_matrix, q) -> float:
    """||L(q)||: max over the forms of distance to the nearest integer."""
    alpha = _as_alpha(spec_or_matrix)
    return float(np.max(dist_to_int(alpha @ np.asarray(q, dtype=float))))


def approximation_profile(
    spec_or_matrix, q_max: int, budget: int = 10**8
) -> ApproximationProfile:
    """Exhaustive sweep over 0 < |q| <= q_max recording minima of ||L(q)||.

    For a single form in one variable the sweep is replaced by the
    continued-fraction fast path (records occur exactly at convergent
    denominators); the two agree where both apply.
    """
    alpha = _as_alpha(spec_or_matrix)
    n_forms, d = alpha.shape
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    if d == 1 and n_forms == 1:
        return _profile_cf_fast_path(float(alpha[0, 0]), q_max)
    if (2 * q_max + 1) ** d > budget:
        raise BudgetExceeded(f"profile sweep needs (2*{q_max}+1)^{d} evaluations")
    axes = [np.arange(-q_max, q_max + 1)] * d
    grid = np.meshgrid(*axes, indexing="ij")
    qs = np.stack([g.ravel() for g in grid], axis=-1)
    heights = np.max(np.abs(qs), axis=1)
    keep = heights > 0
    qs, heights = qs[keep], heights[keep]
    norms = np.max(dist_to_int(qs @ alpha.T), axis=1)
    order = np.lexsort((np.arange(len(qs)), heights))
    records: list[ApproximationRecord] = []
    best = math.inf
    for i in order:
        if norms[i] < best:
            best = float(norms[i])
            records.append(
                ApproximationRecord(tuple(int(x) for x in qs[i]), best, int(heights[i]))
            )
    return ApproximationProfile(q_max=q_max, records=_dedup_heights(records))


def _profile_cf_fast_path(alpha: float, q_max: int) -> ApproximationProfile:
    alpha = alpha - math.floor(alpha)  # profile invariant under alpha mod 1
    records: list[ApproximationRecord] = []
    best = math.inf
    # q = 1 is always the first record holder
    cf = continued_fraction(alpha, depth=64)
    denominators = [q for _, q in cf.convergents if 1 <= q <= q_max]
    if 1 not in denominators:
        denominators.insert(0, 1)
    for q in denominators:
        norm = float(dist_to_int(q * alpha))
        if norm < best:
            best = norm
            records.append(ApproximationRecord((q,), norm, q))
    return ApproximationProfile(q_max=q_max, records=_dedup_heights(records))


def _dedup_heights(records: list[ApproximationRecord]) -> tuple[ApproximationRecord, ...]:
    """Keep one record per height (the final minimum reached at that height)."""
    out: dict[int, ApproximationRecord] = {}
    for rec in records:
        out[rec.height] = rec
    return tuple(out[h] for h in sorted(out))


# -- psi families and the convergence dichotomy ------------------------------


@dataclass(frozen=True)
class PsiFamily:
    """psi(r) = c * r^{-a} * (log r)^{-b}; b may be negative."""

    a: float
    b: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("power exponent a must be >= 0")

    def value(self, r):
        """psi(r) for r >= 1; psi(1) is defined as psi(2) (log singularity)."""
        r = np.maximum(np.asarray(r, dtype=float), 2.0)
        return self.c * r ** (-self.a) * np.log(r) ** (-self.b)

    @property
    def r_decreasing_from(self) -> float:
        """Threshold beyond which psi is decreasing."""
        if self.a == 0:
            return 2.0 if self.b >= 0 else math.inf
        return max(2.0, float(np.exp(-self.b / self.a)))


class SeriesVerdict(Enum):
    DIVERGES = "diverges"
    CONVERGES = "converges"


@dataclass(frozen=True)
class KGClassification:
    verdict: SeriesVerdict
    exponent: float  # m - 1 - a n, compared against -1
    log_exponent: float  # b n, tie-break against 1
    partial_sum: float  # sum of the first 10^6 terms, for display


def kg_classify(family: PsiFamily, m: int, n: int, display_terms: int = 10**6) -> KGClassification:
    """Convergence dichotomy of the series sum_r r^{m-1} psi(r)^n.

    Analytic classification: the term is ~ c^n r^{m-1-an} (log r)^{-bn}; the
    series converges iff the power exponent is < -1, or equals -1 with the
    log exponent bn > 1.  The partial sum is attached for display only.
    """
    exponent = m - 1 - family.a * n
    log_exponent = family.b * n
    if exponent < -1 or (exponent == -1 and log_exponent > 1):
        verdict = SeriesVerdict.CONVERGES
    else:
        verdict = SeriesVerdict.DIVERGES
    r = np.arange(1, display_terms + 1, dtype=float)
    partial = float(np.sum(r ** (m - 1) * family.value(r) ** n))
    return KGClassification(verdict, float(exponent), float(log_exponent), partial)


# -- transference -------------------------------------------------------------


def transference(psi_value: float, X: float, d: int, k: int) -> tuple[float, float, int]:
    """Inhomogeneous covering data (c, R, h) from a homogeneous gap.

    If no nonzero |n| <= X has ||L(n)|| <= psi, then every target gamma is
    approximated by some |n| <= R with ||L(n) - gamma|| <= c, where
    h = floor(X^{-d} psi^{d-k}), c = (h+1) psi / 2, R = (h+1) X / 2.
    """
    if psi_value <= 0 or X <= 0:
        raise ValueError("psi and X must be positive")
    raw = X ** (-d) * psi_value ** (d - k)
    if raw > 1e18:
        raise Overflow(f"transference index h = {raw:.3e} exceeds integer range")
    h = int(math.floor(raw))
    c = 0.5 * (h + 1) * psi_value
    R = 0.5 * (h + 1) * X
    return c, R, h


@dataclass(frozen=True)
class TransferenceCheck:
    hypothesis_ok: bool
    c: float
    R: float
    h: int
    worst_gap: float  # max over the gamma grid of min_n ||L(n) - gamma||
    conclusion_ok: bool


def transference_verify(
    spec_or_matrix,
    psi_value: float,
    X: float,
    gamma_grid: int = 1000,
    tol: float = 1e-12,
    budget: int = 10**8,
) -> TransferenceCheck:
    """Exhaustively verify hypothesis and conclusion of the transference step.

    The hypothesis is checked by sweeping 0 < |q| <= X; the conclusion on a
    uniform grid of gamma values in [0,1)^{k-d} (product grid when k-d > 1,
    ``gamma_grid`` points per axis capped by the budget).
    """
    alpha = _as_alpha(spec_or_matrix)
    n_forms, d = alpha.shape
    k = d + n_forms
    profile = approximation_profile(spec_or_matrix, int(math.floor(X)), budget=budget)
    hypothesis_ok = profile.min_norm_up_to(int(math.floor(X))) > psi_value
    c, R, h = transference(psi_value, X, d, k)
    n_box = int(math.floor(R))
    if (2 * n_box + 1) ** d > budget:
        raise BudgetExceeded("conclusion check needs too many lattice points")
    axes = [np.arange(-n_box, n_box + 1)] * d
    ns = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    vals = np.mod(ns @ alpha.T, 1.0)  # (n_pts, k-d)
    gammas = np.stack(
        [
            g.ravel()
            for g in np.meshgrid(
                *([np.arange(gamma_grid) / gamma_grid] * n_forms), indexing="ij"
            )
        ],
        axis=-1,
    )
    worst = 0.0
    for gamma in gammas:
        diff = dist_to_int(vals - gamma)
        gap = float(np.min(np.max(diff, axis=1)))
        worst = max(worst, gap)
    return TransferenceCheck(
        hypothesis_ok=bool(hypothesis_ok),
        c=c,
        R=R,
        h=h,
        worst_gap=worst,
        conclusion_ok=bool(worst <= c + tol),
    )
