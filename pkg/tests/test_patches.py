import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cutproject.acceptance import build_grid, cell_indices, component_of
from cutproject.errors import UnboundedShape
from cutproject.patches import (
    BallOmega,
    Box,
    BoxOmega,
    PatchKind,
    PatchShape,
    PolytopeOmega,
    acceptance_region,
    box_minus_cubes_decompose,
    classify_candidates,
    lattice_candidates,
    nesting_constant,
    patch_key,
    staircase,
    unit_cube_at,
)
from cutproject.scheme import SchemeSpec, window_coord, window_coords

from conftest import ALPHA_GOLDEN, random_spec


class TestStaircase:
    def test_trivial_radius(self, golden_spec):
        pat = staircase(golden_spec, [3], 0)
        assert pat.as_dict() == {(0,): (0,)}

    def test_golden_example(self, golden_spec):
        pat = staircase(golden_spec, [0], 1)
        assert pat.as_dict() == {(-1,): (-1,), (0,): (0,), (1,): (0,)}

    def test_bounded_deviation(self):
        spec = random_spec(2, 4, 3)
        pat = staircase(spec, [5, -7], 3)
        for n, dq in pat.as_dict().items():
            drift = np.asarray(dq) - spec.alpha @ np.asarray(n, float)
            assert np.all(np.abs(drift) < 1.0)

    @pytest.mark.parametrize("r", [1, 2, 5])
    def test_oracle_equivalence_golden(self, golden_spec, r):
        # staircase equality iff same grid component (|p| <= 100)
        grid = build_grid(golden_spec, r)
        pts = np.arange(-100, 101).reshape(-1, 1)
        cells = cell_indices(grid, window_coords(golden_spec, pts))[:, 0]
        patterns = {}
        for p, cell in zip(pts[:, 0], cells):
            key = staircase(golden_spec, [p], r).deltas
            patterns.setdefault(key, set()).add(int(cell))
        by_cell = {}
        for key, cellset in patterns.items():
            assert len(cellset) == 1  # one component per pattern
            cell = cellset.pop()
            assert cell not in by_cell  # one pattern per component
            by_cell[cell] = key


class TestLatticeCandidates:
    def test_cylinder_matches_brute_force(self):
        spec = random_spec(1, 3, 2)
        shape = PatchShape(PatchKind.TYPE_II, BoxOmega.symmetric(1.0, 1), r=1.0)
        got = {(lv.n, lv.v) for lv in lattice_candidates(spec, shape)}
        brute = set()
        for n in range(-1, 2):
            L = spec.alpha @ np.array([float(n)])
            for v in itertools.product(range(-2, 3), repeat=2):
                if np.all(np.abs(np.asarray(v) - L) < 1.0):
                    brute.add(((n,), v))
        assert got == brute

    def test_shrunk_shape_keeps_origin_only(self):
        spec = random_spec(2, 3, 5)
        shape = PatchShape(PatchKind.TYPE_I, BallOmega(1.0), r=1e-3)
        cands = lattice_candidates(spec, shape)
        assert [(lv.n, lv.v) for lv in cands] == [((0, 0), (0,))]

    def test_types_agree_when_m_zero(self):
        spec = random_spec(2, 4, 8)
        omega = BallOmega(1.0)
        a = lattice_candidates(spec, PatchShape(PatchKind.TYPE_I, omega, r=4.0))
        b = lattice_candidates(spec, PatchShape(PatchKind.TYPE_II, omega, r=4.0))
        assert a == b

    def test_invalid_shapes_rejected(self):
        spec = random_spec(2, 3, 0)
        with pytest.raises(UnboundedShape):
            lattice_candidates(
                spec, PatchShape(PatchKind.TYPE_II, BallOmega(np.inf), r=1.0)
            )
        with pytest.raises(UnboundedShape):
            lattice_candidates(
                spec,
                PatchShape(
                    PatchKind.TYPE_II, BoxOmega((0.0, -1.0), (1.0, 1.0)), r=1.0
                ),
            )

    def test_polytope_membership(self):
        spec = random_spec(2, 3, 1)
        square = PolytopeOmega(((1.5, 0.0), (0.0, 1.5), (-1.5, 0.0), (0.0, -1.5)))
        shape = PatchShape(PatchKind.TYPE_II, square, r=2.0)
        got = {lv.n for lv in lattice_candidates(spec, shape)}
        expected = {
            (i, j)
            for i in range(-3, 4)
            for j in range(-3, 4)
            if abs(i) + abs(j) <= 3  # |x|_1 <= r * 1.5
        }
        assert got == expected


class TestAcceptanceRegion:
    def test_cylinder_region_equals_grid_component(self, golden_spec):
        shape = PatchShape(PatchKind.TYPE_II, BoxOmega.symmetric(1.0, 1), r=1.0)
        grid = build_grid(golden_spec, 1)
        for p in range(-30, 31):
            region = acceptance_region(golden_spec, shape, [p])
            assert region.holes == ()
            cid = component_of(grid, window_coord(golden_spec, [p]))
            lo, hi = grid.box_of(cid)
            assert_allclose(region.base.lo, lo, atol=1e-12)
            assert_allclose(region.base.hi, hi, atol=1e-12)

    def test_tiny_shape_accepts_whole_window(self):
        spec = random_spec(2, 4, 4)
        shape = PatchShape(PatchKind.TYPE_I, BallOmega(1.0), r=1e-3)
        region = acceptance_region(spec, shape, [2, 2])
        assert_allclose(region.base.lo, [0, 0], atol=0)
        assert_allclose(region.base.hi, [1, 1], atol=0)
        assert region.holes == ()

    def test_type2_never_has_holes(self):
        for seed in range(4):
            spec = random_spec(2, 3, seed, with_m=True)
            for r in (2.0, 5.0, 9.0):
                shape = PatchShape(PatchKind.TYPE_II, BallOmega(1.0), r=r)
                region = acceptance_region(spec, shape, [1, -2])
                assert region.holes == ()

    def test_membership_matches_realized_oracle(self):
        # type I, nonzero M: region membership must reproduce the patch oracle.
        # The patch at a window point w realises candidate (n, v) exactly when
        # floor(w + L(n)) == v, so "same patch as at p0" is a pure floor test.
        spec = random_spec(2, 3, 7, with_m=True)
        shape = PatchShape(PatchKind.TYPE_I, BallOmega(1.0), r=6.0)
        p0 = [3, 1]
        region = acceptance_region(spec, shape, p0)
        cands = lattice_candidates(spec, shape)
        A = np.array([lv.n for lv in cands], dtype=float)
        V = np.array([lv.v[0] for lv in cands], dtype=np.int64)
        L = (A @ spec.alpha.T).ravel()  # k - d == 1
        w0 = window_coord(spec, p0)[0]
        ref = np.floor(w0 + L).astype(np.int64) == V  # realised indicator at p0
        rng = np.random.default_rng(0)
        samples = rng.uniform(size=20000)
        dq = np.floor(samples[:, None] + L[None, :]).astype(np.int64)
        equal = np.all((dq == V[None, :]) == ref[None, :], axis=1)
        inside = np.zeros(len(samples), dtype=bool)
        for b in region.boxes:
            inside |= (samples >= b.lo[0]) & (samples < b.hi[0])
        assert np.array_equal(inside, equal)
        # Monte Carlo volume agrees within 3 sigma (implied by the above)
        vol = region.volume()
        sigma = np.sqrt(vol * (1 - vol) / len(samples))
        assert abs(equal.mean() - vol) <= 3 * sigma + 1e-12

    def test_type1_hole_budget(self):
        spec = random_spec(2, 3, 11, with_m=True)
        counts = []
        for r in (4, 8, 12, 16, 20):
            shape = PatchShape(PatchKind.TYPE_I, BallOmega(1.0), r=float(r))
            region = acceptance_region(spec, shape, [0, 0])
            counts.append(len(region.holes))
        ratios = [c / r for c, r in zip(counts, (4, 8, 12, 16, 20))]
        assert max(ratios) < 20  # holes grow at most linearly (d - 1 = 1)


class TestNesting:
    def test_inclusions_with_computed_constant(self):
        spec = random_spec(2, 3, 13, with_m=True)
        omega = BallOmega(1.0)
        c = nesting_constant(spec, omega)
        assert c > 0
        for r in (5.0, 8.0):
            inner = set(patch_key(spec, PatchShape(PatchKind.TYPE_I, omega, r - c), [1, 2]))
            mid = set(patch_key(spec, PatchShape(PatchKind.TYPE_II, omega, r), [1, 2]))
            outer = set(patch_key(spec, PatchShape(PatchKind.TYPE_I, omega, r + c), [1, 2]))
            assert inner <= mid <= outer


class TestBoxMinusCubes:
    def test_no_holes_identity(self):
        base = Box((0.1, 0.2), (0.9, 0.8))
        assert box_minus_cubes_decompose(base, []) == [base]

    def test_corner_hole_two_boxes(self):
        base = Box((0.0, 0.0), (1.0, 1.0))
        hole = unit_cube_at(np.array([0.5, 0.5]))
        boxes = box_minus_cubes_decompose(base, [hole])
        got = {(b.lo, b.hi) for b in boxes}
        assert got == {
            ((0.0, 0.0), (1.0, 0.5)),
            ((0.0, 0.5), (0.5, 1.0)),
        }

    def test_cover_gives_empty(self):
        base = Box((0.2, 0.2), (0.7, 0.7))
        hole = unit_cube_at(np.array([0.0, 0.0]))
        assert box_minus_cubes_decompose(base, [hole]) == []

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_volume_conservation_random(self, m):
        rng = np.random.default_rng(42 + m)
        for _ in range(100):
            lo = rng.uniform(0, 0.2, size=m)
            hi = lo + rng.uniform(0.3, 1.0 - 0.21, size=m)
            base = Box(lo, hi)
            n_holes = rng.integers(0, 5)
            holes = [
                unit_cube_at(rng.uniform(-1.0, 1.0, size=m)) for _ in range(n_holes)
            ]
            boxes = box_minus_cubes_decompose(base, holes)
            # inclusion-exclusion oracle for |base \ union(holes)|
            expected = 0.0
            for k in range(n_holes + 1):
                for subset in itertools.combinations(holes, k):
                    cur = base
                    for h in subset:
                        cur = cur.intersect(h)
                    expected += (-1) ** k * cur.volume()
            got = sum(b.volume() for b in boxes)
            assert abs(got - expected) < 1e-12
            assert len(boxes) <= (len(holes) + 1) ** m
            # disjointness and membership agreement on random probes
            for a, b in itertools.combinations(boxes, 2):
                assert a.intersect(b).is_empty()
            probes = rng.uniform(lo, hi, size=(50, m))
            for x in probes:
                direct = base.contains(x) and not any(h.contains(x) for h in holes)
                assert direct == any(bx.contains(x) for bx in boxes)
