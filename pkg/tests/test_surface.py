import math

import numpy as np
import pytest

from geometry import hull
from geometry.curve import evaluate
from geometry.errors import PreconditionError
from geometry.fitting import SectionFit, fit_points
from geometry.surface import (
    basis_weights,
    evaluate_surface,
    loft,
    make_sections_compatible,
    section_parameters,
    tessellate,
    twist_metric,
)
from tests.conftest import circle_points


def stacked_circles(count, radius=1.0, points=48, phase=0.0):
    return [fit_points(circle_points(points, radius, phase=phase, z=float(z)), 3, 12, closed=True) for z in range(count)]


@pytest.fixture
def cylinder_sections():
    return stacked_circles(10)


class TestCompatibility:
    def test_identical_sections_are_unchanged(self, cylinder_sections):
        compatible = make_sections_compatible(cylinder_sections)
        for before, after in zip(cylinder_sections, compatible):
            assert after is before

    def test_refit_gives_shared_knots(self, rng):
        sections = []
        for z in range(5):
            radii = 1.0 + 0.2 * rng.uniform(size=40)
            angles = np.sort(rng.uniform(0, 2 * np.pi, 40))
            xy = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
            sections.append(fit_points(np.column_stack([xy, np.full(40, z)]), 3, 10, closed=True))
        compatible = make_sections_compatible(sections)
        assert len({s.curve.knots for s in compatible}) == 1
        for before, after in zip(sections, compatible):
            assert after.curve.num_control == 13
            assert after.residual_rms <= 2 * before.residual_rms

    def test_mismatched_control_counts(self):
        a = fit_points(circle_points(30, z=0.0), 3, 8, closed=True)
        b = fit_points(circle_points(30, z=1.0), 3, 9, closed=True)
        with pytest.raises(PreconditionError):
            make_sections_compatible([a, b])


class TestLoft:
    def test_extrusion_reproduces_sections(self, cylinder_sections):
        curves = [s.curve for s in cylinder_sections]
        surface = loft(curves, 3)
        v_params = section_parameters(curves)
        for curve, v in zip(curves, v_params):
            for u in np.linspace(*curve.domain, 7):
                np.testing.assert_allclose(evaluate_surface(surface, u, v), evaluate(curve, u), atol=1e-8)

    def test_cone_radius_follows_sections(self):
        sections = [
            fit_points(circle_points(48, 1.0 + 0.2 * z, z=float(z)), 3, 12, closed=True) for z in range(6)
        ]
        curves = [s.curve for s in make_sections_compatible(sections)]
        surface = loft(curves, 3)
        for z, v in enumerate(section_parameters(curves)):
            for u in (0.0, 0.3, 0.8):
                point = evaluate_surface(surface, u, v)
                assert np.hypot(point[0], point[1]) == pytest.approx(1.0 + 0.2 * z, abs=1e-2)
                assert point[2] == pytest.approx(z, abs=1e-6)

    def test_too_few_sections(self, cylinder_sections):
        with pytest.raises(PreconditionError):
            loft([s.curve for s in cylinder_sections[:3]], 3)

    def test_incompatible_sections(self):
        a = fit_points(circle_points(30, z=0.0), 3, 8, closed=True).curve
        b = fit_points(circle_points(30, z=1.0), 3, 9, closed=True).curve
        with pytest.raises(PreconditionError):
            loft([a, a, b, b], 3)

    def test_default_row_count(self, cylinder_sections):
        surface = loft([s.curve for s in cylinder_sections], 3)
        assert surface.control_net.shape == (5, 15, 3)
        exact = loft([s.curve for s in cylinder_sections[:4]], 3)
        assert exact.control_net.shape[0] == 4

    def test_interpolating_loft_passes_through_every_section(self, cylinder_sections):
        curves = [s.curve for s in cylinder_sections]
        surface = loft(curves, 3, interpolate=True)
        assert surface.control_net.shape[0] == 10


class TestTessellation:
    def test_two_by_two_grid_is_the_domain_corners(self, cylinder_sections):
        surface = loft([s.curve for s in cylinder_sections], 3)
        mesh = tessellate(surface, 2, 2)
        (lo_u, hi_u), (lo_v, hi_v) = surface.domain_u, surface.domain_v
        corners = [(lo_u, lo_v), (hi_u, lo_v), (lo_u, hi_v), (hi_u, hi_v)]
        for vertex, (u, v) in zip(mesh.vertices, corners):
            np.testing.assert_allclose(vertex, evaluate_surface(surface, u, v), atol=1e-12)
        assert mesh.quads.tolist() == [[0, 1, 3, 2]]

    def test_mesh_lies_in_net_bounding_box(self, cylinder_sections):
        surface = loft([s.curve for s in cylinder_sections], 3)
        mesh = tessellate(surface, 16, 8)
        net = surface.control_net.reshape(-1, 3)
        assert np.all(mesh.vertices >= net.min(axis=0) - 1e-9)
        assert np.all(mesh.vertices <= net.max(axis=0) + 1e-9)
        assert mesh.quads.shape == (15 * 7, 4)
        assert mesh.triangles().shape == (2 * 15 * 7, 3)

    def test_cylinder_vertices_on_radius(self, cylinder_sections):
        mesh = tessellate(loft([s.curve for s in cylinder_sections], 3), 32, 16)
        radii = np.linalg.norm(mesh.vertices[:, :2], axis=1)
        assert np.sqrt(np.mean((radii - 1.0) ** 2)) < 1e-2

    def test_basis_weights_partition_unity(self, cylinder_sections, rng):
        surface = loft([s.curve for s in cylinder_sections], 3)
        us = np.append(rng.uniform(*surface.domain_u, 198), [surface.domain_u[0], surface.domain_u[1]])
        vs = np.append(rng.uniform(*surface.domain_v, 198), [surface.domain_v[0], surface.domain_v[1]])
        for u, v in zip(us, vs):
            assert basis_weights(surface, u, v).sum() == pytest.approx(1.0, abs=1e-12)

    def test_surface_points_lie_in_net_hull(self, rng):
        sections = [
            fit_points(circle_points(40, 1.0 + 0.3 * rng.uniform(), z=float(z)), 3, 10, closed=True) for z in range(7)
        ]
        surface = loft([s.curve for s in make_sections_compatible(sections)], 3)
        mesh = tessellate(surface, 24, 12)
        assert np.all(hull.contains(surface.control_net.reshape(-1, 3), mesh.vertices, tol=1e-9))

    def test_tessellation_needs_two_by_two(self, cylinder_sections):
        surface = loft([s.curve for s in cylinder_sections], 3)
        with pytest.raises(PreconditionError):
            tessellate(surface, 1, 4)


class TestTwist:
    def test_aligned_sections_have_no_twist(self, cylinder_sections):
        assert twist_metric(cylinder_sections) == pytest.approx(0.0, abs=1e-12)

    def test_rotated_seams(self):
        sections = [
            SectionFit(curve=None, data_points=circle_points(16, phase=0.1 * i, z=float(i)), parameters=None, residual_rms=0.0)
            for i in range(4)
        ]
        assert twist_metric(sections) == pytest.approx(0.1)
        assert math.isclose(twist_metric(sections[:1]), 0.0)
