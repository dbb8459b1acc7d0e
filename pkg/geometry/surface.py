"""
Tensor-product B-spline surfaces lofted through compatible cross-sections.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from geometry.curve import BSplineCurve, unique_control_points
from geometry.errors import DomainError, PreconditionError
from geometry.fitting import (
    FitProblem,
    SectionFit,
    averaged_knots,
    average_knot_vectors,
    parameterize_chord_length,
    solve_least_squares,
)
from geometry.splinecore import CLOSED_RIGHT, KnotVector, basis_functions, basis_matrix, knot_domain

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TensorSurface:
    """Control net (rows along v, columns along u) and the two knot vectors."""

    degree_u: int
    degree_v: int
    knots_u: KnotVector
    knots_v: KnotVector
    control_net: np.ndarray

    def __post_init__(self):
        net = np.asarray(self.control_net, dtype=float)
        if net.ndim != 3 or net.shape[2] != 3:
            raise PreconditionError(f"control net must have shape (rows, cols, 3), got {net.shape}")
        if not np.all(np.isfinite(net)):
            raise DomainError("control net entries must be finite")
        rows, cols = net.shape[:2]
        if rows != len(self.knots_v) - self.degree_v - 1:
            raise PreconditionError(f"{rows} net rows do not match {len(self.knots_v)} v-knots of degree {self.degree_v}")
        if cols != len(self.knots_u) - self.degree_u - 1:
            raise PreconditionError(f"{cols} net columns do not match {len(self.knots_u)} u-knots of degree {self.degree_u}")
        net.setflags(write=False)
        self.control_net = net

    @property
    def domain_u(self) -> Tuple[float, float]:
        return knot_domain(self.knots_u, self.degree_u)

    @property
    def domain_v(self) -> Tuple[float, float]:
        return knot_domain(self.knots_v, self.degree_v)


@dataclass(eq=False)
class QuadMesh:
    """Grid of res_v x res_u vertices, row-major in v then u, with quad faces."""

    vertices: np.ndarray = field(repr=False)
    quads: np.ndarray = field(repr=False)
    res_u: int
    res_v: int
    degenerate: bool = False

    def triangles(self) -> np.ndarray:
        return np.concatenate([self.quads[:, [0, 1, 2]], self.quads[:, [0, 2, 3]]], axis=0)


def make_sections_compatible(sections: Sequence[SectionFit]) -> List[SectionFit]:
    """Refit every section under the elementwise mean of their knot vectors."""
    if not sections:
        raise PreconditionError("no sections to make compatible")
    first = sections[0].curve
    for fit in sections[1:]:
        curve = fit.curve
        if curve.degree != first.degree:
            raise PreconditionError(f"section degrees differ: {first.degree} vs {curve.degree}")
        if curve.num_control != first.num_control:
            raise PreconditionError(f"section control counts differ: {first.num_control} vs {curve.num_control}")
        if curve.closed != first.closed:
            raise PreconditionError("cannot mix open and closed sections")

    common = average_knot_vectors([fit.curve.knots for fit in sections])
    if all(fit.curve.knots == common for fit in sections):
        return list(sections)

    degree = first.degree
    periodic = first.closed
    num_unique = len(unique_control_points(first))
    compatible = []
    for fit in sections:
        problem = FitProblem(fit.data_points, fit.parameters, degree, common, num_unique, periodic=periodic)
        solution = solve_least_squares(problem)
        points = solution.control_points
        if periodic:
            points = np.vstack([points, points[:degree]])
        curve = BSplineCurve(degree=degree, knots=common, control_points=points, closed=periodic)
        logger.debug(
            "section %s refit: residual %.3e -> %.3e", fit.section_id, fit.residual_rms, solution.residual_rms
        )
        compatible.append(replace(fit, curve=curve, residual_rms=solution.residual_rms))
    return compatible


def section_parameters(sections: Sequence[BSplineCurve]) -> np.ndarray:
    """Chord-length v-parameters over the centroids of the sections' control points."""
    centroids = np.array([unique_control_points(s).mean(axis=0) for s in sections])
    return parameterize_chord_length(centroids)


def loft(
    sections: Sequence[BSplineCurve],
    degree_v: int,
    num_control_v: Optional[int] = None,
    interpolate: bool = False,
) -> TensorSurface:
    """Skin compatible sections with a second curve family along the stacking direction.

    Column k of the control net is the degree_v fit of the k-th control
    points of all sections. By default the fit interpolates when there are
    exactly degree_v + 1 sections and approximates with
    max(degree_v + 1, ceil(S / 2)) control points otherwise.
    """
    count = len(sections)
    if count < degree_v + 1:
        raise PreconditionError(f"lofting degree {degree_v} needs at least {degree_v + 1} sections, got {count}")
    first = sections[0]
    for s in sections[1:]:
        if s.degree != first.degree or s.num_control != first.num_control or s.knots != first.knots:
            raise PreconditionError("sections are not compatible (degree, control count and knots must match)")

    if interpolate or count == degree_v + 1:
        rows = count
    elif num_control_v is not None:
        rows = num_control_v
    else:
        rows = max(degree_v + 1, math.ceil(count / 2))
    if not degree_v + 1 <= rows <= count:
        raise PreconditionError(f"num_control_v must lie in [{degree_v + 1}, {count}], got {rows}")

    v_params = section_parameters(sections)
    knots_v = averaged_knots(v_params, degree_v, rows)
    cols = first.num_control
    columns = np.stack([s.control_points for s in sections])
    problem = FitProblem(columns.reshape(count, cols * 3), v_params, degree_v, knots_v, rows)
    solution = solve_least_squares(problem)
    logger.debug("lofted %d sections into a %dx%d net, column residual %.3e", count, rows, cols, solution.residual_rms)
    net = solution.control_points.reshape(rows, cols, 3)
    return TensorSurface(
        degree_u=first.degree, degree_v=degree_v, knots_u=first.knots, knots_v=knots_v, control_net=net
    )


def _check_uv(surface: TensorSurface, u: float, v: float) -> None:
    lo_u, hi_u = surface.domain_u
    lo_v, hi_v = surface.domain_v
    if not (lo_u <= u <= hi_u and lo_v <= v <= hi_v):
        raise DomainError(f"(u, v) = ({u}, {v}) outside [{lo_u}, {hi_u}] x [{lo_v}, {hi_v}]")


def basis_weights(surface: TensorSurface, u: float, v: float) -> np.ndarray:
    """Products basis_v(v) * basis_u(u) for every net entry, shape (rows, cols)."""
    _check_uv(surface, u, v)
    bu = basis_functions(surface.knots_u, surface.degree_u, u, CLOSED_RIGHT)
    bv = basis_functions(surface.knots_v, surface.degree_v, v, CLOSED_RIGHT)
    return np.outer(bv, bu)


def evaluate_surface(surface: TensorSurface, u: float, v: float) -> np.ndarray:
    weights = basis_weights(surface, u, v)
    return np.einsum("rc,rcx->x", weights, surface.control_net)


def tessellate(surface: TensorSurface, res_u: int, res_v: int) -> QuadMesh:
    """Evaluate the surface on a res_v x res_u parameter grid with quad connectivity."""
    if res_u < 2 or res_v < 2:
        raise PreconditionError(f"tessellation needs at least 2x2 vertices, got {res_u}x{res_v}")
    lo_u, hi_u = surface.domain_u
    lo_v, hi_v = surface.domain_v
    us = np.linspace(lo_u, hi_u, res_u)
    vs = np.linspace(lo_v, hi_v, res_v)
    us[-1], vs[-1] = hi_u, hi_v
    bu = basis_matrix(surface.knots_u, surface.degree_u, us, CLOSED_RIGHT)
    bv = basis_matrix(surface.knots_v, surface.degree_v, vs, CLOSED_RIGHT)
    grid = np.einsum("vr,rcx,uc->vux", bv, surface.control_net, bu)
    vertices = grid.reshape(res_v * res_u, 3)

    index = np.arange(res_v * res_u).reshape(res_v, res_u)
    quads = np.stack(
        [index[:-1, :-1].ravel(), index[:-1, 1:].ravel(), index[1:, 1:].ravel(), index[1:, :-1].ravel()], axis=1
    )
    degenerate = bool(np.all(np.ptp(vertices, axis=0) == 0.0))
    if degenerate:
        logger.warning("⚠️ Tessellation is degenerate: all %d vertices coincide", len(vertices))
    return QuadMesh(vertices=vertices, quads=quads, res_u=res_u, res_v=res_v, degenerate=degenerate)


def twist_metric(sections: Sequence[SectionFit]) -> float:
    """Mean absolute angle (radians) between seam points of adjacent sections.

    The seam of a section is its first data point, measured around the
    section's centroid in the xy-plane.
    """
    if len(sections) < 2:
        return 0.0
    angles = []
    for fit in sections:
        xy = fit.data_points[:, :2]
        center = xy.mean(axis=0)
        seam = xy[0] - center
        angles.append(math.atan2(seam[1], seam[0]))
    offsets = np.diff(angles)
    offsets = (offsets + math.pi) % (2 * math.pi) - math.pi
    return float(np.mean(np.abs(offsets)))
