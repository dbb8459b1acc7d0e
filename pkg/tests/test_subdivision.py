import numpy as np
import pytest

from geometry import hull
from geometry.errors import PreconditionError
from geometry.subdivision import (
    CHAIKIN_MASK,
    CUBIC_MASK,
    LINEAR_MASK,
    ControlPolygon,
    RefinementMask,
    convergence_report,
    limit_curve,
    subdivide_once,
    subdivide_to_depth,
    subdivision_matrix,
    two_scale_eval,
)


def random_octagon(rng):
    angles = np.sort(rng.uniform(0.0, 2 * np.pi, 8))
    radii = rng.uniform(0.5, 1.5, 8)
    return ControlPolygon(np.column_stack([radii * np.cos(angles), radii * np.sin(angles)]), closed=True)


class TestRefinementMask:
    @pytest.mark.parametrize("n, mask", [(1, LINEAR_MASK), (2, CHAIKIN_MASK), (3, CUBIC_MASK)])
    def test_binomial_masks(self, n, mask):
        assert RefinementMask.from_degree(n) == mask
        assert mask.degree == n

    def test_affine_invariance_is_checked(self):
        with pytest.raises(PreconditionError, match="affine"):
            RefinementMask((1, 2, 2), 2.0)

    def test_weights(self):
        np.testing.assert_allclose(CUBIC_MASK.weights, [0.125, 0.5, 0.75, 0.5, 0.125])


class TestTwoScale:
    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_identity_holds(self, rng, n):
        for ts in rng.uniform(-0.5, n + 1.5, 1000):
            lhs, rhs = two_scale_eval(n, ts)
            assert abs(lhs - rhs) <= 1e-12

    def test_unsupported_degree(self):
        with pytest.raises(PreconditionError):
            two_scale_eval(4, 0.5)


class TestSubdivide:
    def test_depth_zero_echoes_input(self):
        poly = ControlPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
        out = subdivide_to_depth(poly, CUBIC_MASK, 0)
        np.testing.assert_array_equal(out.points, poly.points)

    def test_closed_square_depth_three(self):
        poly = ControlPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
        assert len(subdivide_to_depth(poly, CUBIC_MASK, 3)) == 32

    def test_closed_cubic_rules(self):
        poly = ControlPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
        refined = subdivide_once(poly).points
        # vertex point of P0, then edge midpoint of P0P1
        np.testing.assert_allclose(refined[0], [0.125, 0.125, 0.0])
        np.testing.assert_allclose(refined[1], [0.5, 0.0, 0.0])

    def test_open_polygon_keeps_endpoints(self):
        points = np.array([[0, 0], [1, 2], [3, 2], [4, 0], [6, 1]], dtype=float)
        S = subdivision_matrix(5, CUBIC_MASK, closed=False)
        assert S.shape == (9, 5)
        refined = subdivide_once(ControlPolygon(points, closed=False))
        np.testing.assert_array_equal(refined.points[0, :2], points[0])
        np.testing.assert_array_equal(refined.points[-1, :2], points[-1])

    def test_rows_are_affine_combinations(self):
        for closed in (True, False):
            S = subdivision_matrix(6, CHAIKIN_MASK, closed=closed)
            np.testing.assert_allclose(S.sum(axis=1), 1.0)

    def test_open_polygon_too_short(self):
        with pytest.raises(PreconditionError):
            subdivide_once(ControlPolygon([[0, 0], [1, 0], [2, 1]], closed=False), CUBIC_MASK)

    def test_linear_mask_inserts_midpoints(self):
        poly = ControlPolygon([[0, 0], [2, 0], [2, 2]], closed=True)
        refined = subdivide_once(poly, LINEAR_MASK).points[:, :2]
        np.testing.assert_allclose(refined, [[0, 0], [1, 0], [2, 0], [2, 1], [2, 2], [1, 1]])

    def test_refined_polygon_stays_in_hull(self, rng):
        for mask in (LINEAR_MASK, CHAIKIN_MASK, CUBIC_MASK):
            poly = random_octagon(rng)
            refined = subdivide_once(poly, mask)
            assert np.all(hull.contains(poly.points[:, :2], refined.points[:, :2], tol=1e-9))

    def test_operator_is_stationary(self, rng):
        poly = random_octagon(rng)
        twice = subdivide_once(subdivide_once(poly))
        assert np.array_equal(twice.points, subdivide_to_depth(poly, CUBIC_MASK, 2).points)

    def test_points_on_a_line_stay_on_it(self):
        closed = subdivide_once(ControlPolygon([[0, 0], [1, 0], [2, 0], [3, 0]], closed=True)).points
        np.testing.assert_array_equal(closed[:, 1:], 0.0)
        assert np.all((closed[:, 0] >= 0.0) & (closed[:, 0] <= 3.0))
        opened = subdivide_once(ControlPolygon([[x, 2 * x] for x in range(5)], closed=False)).points
        np.testing.assert_allclose(opened[:, 0], np.arange(9) / 2)
        np.testing.assert_allclose(opened[:, 1], np.arange(9))

    def test_negative_depth(self):
        with pytest.raises(PreconditionError):
            subdivide_to_depth(ControlPolygon([[0, 0], [1, 0]]), CUBIC_MASK, -1)


class TestConvergence:
    def test_distance_to_limit_curve_shrinks(self, rng):
        for _ in range(5):
            report = convergence_report(random_octagon(rng), CUBIC_MASK, depths=range(1, 7))
            distances = [d for _, d in report]
            assert all(b < a for a, b in zip(distances, distances[1:]))
            for depth in range(3, 7):
                ratio = distances[depth - 1] / distances[depth - 2]
                assert 0.15 <= ratio <= 0.35

    def test_limit_curve_is_uniform_closed_spline(self, rng):
        poly = random_octagon(rng)
        curve = limit_curve(poly, CUBIC_MASK)
        assert curve.closed and curve.degree == 3
        assert curve.num_control == 11

    def test_report_needs_closed_polygon(self):
        poly = ControlPolygon([[0, 0], [1, 0], [2, 1], [3, 3]], closed=False)
        with pytest.raises(PreconditionError):
            convergence_report(poly)

    def test_report_needs_sorted_depths(self, rng):
        with pytest.raises(PreconditionError):
            convergence_report(random_octagon(rng), depths=[3, 1])
