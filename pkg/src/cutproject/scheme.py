"""Cut-and-project scheme data and the star map.

A scheme is the data of a totally irrational physical space, given as the
graph of a linear map ``L(x)_i = sum_j alpha[i][j] x_j`` from R^d to R^(k-d),
an internal space parametrised by a second linear map ``M`` (the graph
``{(M(z), z)}``), and a window phase ``t`` in [0,1)^(k-d).  The window is the
half-open unit cube of the internal coordinates, so every physical index
``p`` in Z^d lifts to exactly one lattice point of the slice; the window
coordinate of that point is ``w(p) = (t + L(p)) mod 1``.

All operations are pure functions of immutable inputs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, DegenerateInternalSpace, SingularShift

# Distance from the integers below which a probed shift is declared singular.
SINGULAR_TOL = 1e-12

# Determinant floor for (I - M L); below this the spaces are degenerate.
DET_TOL = 1e-9

# Decimal digits used by the extended-precision star map (exact mode).
EXACT_DPS = 60


def frac(x):
    """Fractional part mapped into [0, 1).

    ``np.mod`` may round up to exactly 1.0 for tiny negative inputs; fold
    that case back to 0 so all callers can rely on the half-open range.
    """
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, y - 1.0, y)


def dist_to_int(x):
    """Componentwise distance to the nearest integer."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.round(x))


@dataclass(frozen=True)
class LatticeVector:
    """Integer lattice datum: physical index ``n`` and internal part ``v``."""

    n: tuple[int, ...]
    v: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(x) for x in self.n))
        object.__setattr__(self, "v", tuple(int(x) for x in self.v))

    @property
    def n_arr(self) -> np.ndarray:
        return np.array(self.n, dtype=float)

    @property
    def v_arr(self) -> np.ndarray:
        return np.array(self.v, dtype=float)

    def __sub__(self, other: "LatticeVector") -> "LatticeVector":
        return LatticeVector(
            tuple(a - b for a, b in zip(self.n, other.n)),
            tuple(a - b for a, b in zip(self.v, other.v)),
        )


@dataclass(frozen=True, eq=False)
class SchemeSpec:
    """Full cut-and-project data.

    Fields
    ------
    d, k:
        physical and total dimension, ``0 < d < k``.
    alpha:
        (k-d) x d matrix of the physical-space map ``L``.
    m_map:
        d x (k-d) matrix of the internal-space map ``M``; all zeros means the
        internal space is the reference space (projection by first-d
        coordinates).
    t:
        window phase in [0,1)^(k-d); arbitrary real shifts are reduced mod 1.
    exact:
        route the star map through extended-precision arithmetic (regression
        fixtures; slow).
    """

    d: int
    k: int
    alpha: np.ndarray
    m_map: np.ndarray | None = None
    t: np.ndarray | None = None
    exact: bool = False
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (0 < self.d < self.k):
            raise ValueError(f"need 0 < d < k, got d={self.d}, k={self.k}")
        m = self.k - self.d
        alpha = np.array(self.alpha, dtype=float).reshape(m, self.d)
        m_map = (
            np.zeros((self.d, m))
            if self.m_map is None
            else np.array(self.m_map, dtype=float).reshape(self.d, m)
        )
        t = (
            np.zeros(m)
            if self.t is None
            else np.asarray(frac(np.array(self.t, dtype=float).reshape(m)))
        )
        for arr in (alpha, m_map, t):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "m_map", m_map)
        object.__setattr__(self, "t", t)
        det = np.linalg.det(np.eye(self.d) - m_map @ alpha)
        if abs(det) < DET_TOL:
            raise DegenerateInternalSpace(
                f"|det(I - M L)| = {abs(det):.3e} below tolerance {DET_TOL:.0e}"
            )

    # -- derived quantities -------------------------------------------------

    @property
    def internal_dim(self) -> int:
        return self.k - self.d

    @property
    def m_is_zero(self) -> bool:
        return not np.any(self.m_map)

    def chart_matrix(self) -> np.ndarray:
        """Inverse of (I - M L), the chart correction for the projection pi."""
        return np.linalg.inv(np.eye(self.d) - self.m_map @ self.alpha)

    def chart_distortion(self) -> float:
        """Spectral norm of (I - M L)^{-1} M.

        Bounds how far the pi-chart position of a lattice difference can sit
        from its reference-chart position, per unit of internal displacement.
        """
        if self.m_is_zero:
            return 0.0
        return float(np.linalg.norm(self.chart_matrix() @ self.m_map, 2))

    # -- serialisation ------------------------------------------------------

    def to_json_dict(self) -> dict:
        out = {
            "d": self.d,
            "k": self.k,
            "alpha": [[float(x) for x in row] for row in self.alpha],
            "t": [float(x) for x in self.t],
        }
        if not self.m_is_zero:
            out["m_map"] = [[float(x) for x in row] for row in self.m_map]
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def scheme_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @staticmethod
    def from_json_dict(data: dict) -> "SchemeSpec":
        d, k = int(data["d"]), int(data["k"])
        if "alpha" in data:
            alpha = np.array(data["alpha"], dtype=float)
        elif "seed" in data:
            rng = np.random.default_rng(int(data["seed"]))
            alpha = rng.uniform(size=(k - d, d))
        else:
            raise ValueError("scheme JSON needs either 'alpha' or 'seed'")
        return SchemeSpec(
            d=d,
            k=k,
            alpha=alpha,
            m_map=np.array(data["m_map"], dtype=float) if "m_map" in data else None,
            t=np.array(data["t"], dtype=float) if "t" in data else None,
            seed=data.get("seed"),
        )

    # -- convenience constructors -------------------------------------------

    @staticmethod
    def golden(t: float = 0.2) -> "SchemeSpec":
        """Sturmian scheme with the golden-conjugate slope."""
        return SchemeSpec(d=1, k=2, alpha=[[(np.sqrt(5.0) - 1.0) / 2.0]], t=[t])

    @staticmethod
    def random(
        d: int,
        k: int,
        seed: int,
        with_m: bool = False,
        m_scale: float = 0.3,
    ) -> "SchemeSpec":
        """Scheme with alpha drawn uniformly from [0,1)^{d(k-d)}."""
        rng = np.random.default_rng(seed)
        alpha = rng.uniform(size=(k - d, d))
        m_map = rng.uniform(-m_scale, m_scale, size=(d, k - d)) if with_m else None
        t = rng.uniform(0.02, 0.98, size=k - d)
        return SchemeSpec(d=d, k=k, alpha=alpha, m_map=m_map, t=t, seed=seed)


# -- the star map -----------------------------------------------------------


def _phase(spec: SchemeSpec, points: np.ndarray) -> np.ndarray:
    """t + L(p) for an integer array of shape (..., d), no reduction."""
    return spec.t + points @ spec.alpha.T


def _phase_exact(spec: SchemeSpec, points: np.ndarray) -> np.ndarray:
    """Extended-precision t + L(p), rounded back to float per component."""
    import mpmath

    with mpmath.workdps(EXACT_DPS):
        alpha = [[mpmath.mpf(x) for x in row] for row in spec.alpha]
        t = [mpmath.mpf(x) for x in spec.t]
        pts = np.atleast_2d(points)
        out = np.empty((pts.shape[0], spec.internal_dim), dtype=float)
        for a, p in enumerate(pts):
            for i in range(spec.internal_dim):
                acc = t[i]
                for j in range(spec.d):
                    acc += alpha[i][j] * int(p[j])
                out[a, i] = float(acc - mpmath.floor(acc))
        return out.reshape(points.shape[:-1] + (spec.internal_dim,))


def window_coords(spec: SchemeSpec, points) -> np.ndarray:
    """Star-map values w(p) = (t + L(p)) mod 1 for an array of indices.

    ``points`` has shape (..., d); the result has shape (..., k-d).  Total
    function: singular values are returned, not rejected.
    """
    points = np.asarray(points, dtype=float)
    if spec.exact:
        return _phase_exact(spec, points)
    return np.asarray(frac(_phase(spec, points)))


def window_coord(spec: SchemeSpec, p: Sequence[int]) -> np.ndarray:
    """Star-map value of a single physical index."""
    return window_coords(spec, np.asarray(p, dtype=float).reshape(spec.d))


def check_regular(spec: SchemeSpec, points, tol: float = SINGULAR_TOL) -> None:
    """Raise SingularShift if any probed phase sits on the window boundary."""
    y = _phase(spec, np.asarray(points, dtype=float))
    bad = dist_to_int(y) < tol
    if np.any(bad):
        idx = np.argwhere(np.any(np.atleast_2d(bad), axis=-1))
        raise SingularShift(
            f"shift phase is singular at {idx.shape[0]} probed index(es); "
            "the window boundary is hit within tolerance"
        )


def lift(spec: SchemeSpec, p: Sequence[int], tol: float = SINGULAR_TOL) -> LatticeVector:
    """Unique lattice lift of the physical index ``p``.

    Returns (p, q) with q_j = floor(t_j + L_j(p)); the internal displacement
    of the lifted point is w(p) = t + L(p) - q.
    """
    p_arr = np.asarray(p, dtype=float).reshape(spec.d)
    check_regular(spec, p_arr, tol)
    if spec.exact:
        w = _phase_exact(spec, p_arr)
        q = np.round(_phase(spec, p_arr) - w)
    else:
        q = np.floor(_phase(spec, p_arr))
    return LatticeVector(tuple(int(x) for x in p_arr), tuple(int(x) for x in q))


def lift_offsets(spec: SchemeSpec, w: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Staircase increments floor(w + L(n)) for offsets n, given w = w(p).

    Vectorised core of patch extraction: ``lift(p + n).v - lift(p).v``
    equals ``floor(w(p) + L(n))`` componentwise.
    """
    return np.floor(w + offsets @ spec.alpha.T).astype(np.int64)


def project_chart(spec: SchemeSpec, m) -> np.ndarray:
    """Physical-chart coordinate of the projection pi applied to a lattice vector.

    Accepts a LatticeVector or a pair of arrays (n, v); solves
    u = (I - M L)^{-1} (n - M v).  With M = 0 this is exactly the
    first-d-coordinates map.
    """
    if isinstance(m, LatticeVector):
        n, v = m.n_arr, m.v_arr
    else:
        n, v = (np.asarray(x, dtype=float) for x in m)
    if spec.m_is_zero:
        return n.astype(float)
    rhs = n - v @ spec.m_map.T
    try:
        chart = spec.chart_matrix()
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded at init
        raise DegenerateInternalSpace(str(exc)) from exc
    return rhs @ chart.T


def lattice_box(radius: float, d: int, budget: int = 10**7) -> np.ndarray:
    """Integer points of [-radius, radius]^d in lexicographic order."""
    n = int(np.floor(radius)) if radius >= 0 else -1
    if n < 0:
        return np.empty((0, d), dtype=np.int64)
    side = 2 * n + 1
    if side**d > budget:
        raise BudgetExceeded(f"lattice box has {side}^{d} points, budget {budget}")
    axes = [np.arange(-n, n + 1, dtype=np.int64)] * d
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=-1)


def generate_points(
    spec: SchemeSpec, R: float, budget: int = 10**7, tol: float = SINGULAR_TOL
) -> list[tuple[tuple[int, ...], tuple[int, ...], np.ndarray]]:
    """All points of the cut-and-project set indexed by [-R, R]^d.

    One entry (p, q, w(p)) per lattice index, in lexicographic order of p;
    exactly (2 floor(R) + 1)^d entries.
    """
    if R < 0:
        raise ValueError("R must be nonnegative")
    pts = lattice_box(R, spec.d, budget)
    check_regular(spec, pts, tol)
    w = window_coords(spec, pts)
    q = np.floor(_phase(spec, pts.astype(float))).astype(np.int64)
    return [
        (tuple(int(x) for x in pts[i]), tuple(int(x) for x in q[i]), w[i])
        for i in range(pts.shape[0])
    ]
