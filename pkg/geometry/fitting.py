"""
Least-squares B-spline fitting.

The collocation system CV = NB . N is solved for the control points N by
a QR factorization of NB, which is mathematically the normal-equations
solution (NB^T NB)^-1 NB^T CV without forming the inverse.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from config.settings import RANK_TOLERANCE
from geometry.curve import BSplineCurve, as_points, closed_curve
from geometry.errors import DomainError, PreconditionError, RankDeficiencyError
from geometry.splinecore import CLOSED_RIGHT, KnotVector, basis_matrix, knot_domain, make_clamped_knots

logger = logging.getLogger(__name__)

Parameterization = Literal["chord", "uniform"]
KnotPlacement = Literal["averaged", "uniform"]


def _as_data(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise DomainError("data points must be a finite (m, d) array")
    return arr


@dataclass(eq=False)
class FitProblem:
    """Data points, their parameters and the spline space to fit them in.

    With ``periodic`` set, ``knots`` describe the wrapped closed curve
    (num_control + degree control points) and the wrapped basis columns are
    folded onto the num_control unique control points.
    """

    data_points: np.ndarray
    parameters: np.ndarray
    degree: int
    knots: KnotVector
    num_control: int
    periodic: bool = False

    def __post_init__(self):
        self.data_points = _as_data(self.data_points)
        self.parameters = np.asarray(self.parameters, dtype=float).reshape(-1)
        m = len(self.data_points)
        if len(self.parameters) != m:
            raise PreconditionError(f"{m} data points but {len(self.parameters)} parameters")
        if self.num_control < self.degree + 1:
            raise PreconditionError(
                f"need at least {self.degree + 1} control points for degree {self.degree}, got {self.num_control}"
            )
        if m < self.num_control:
            raise RankDeficiencyError(
                f"{m} data points cannot determine {self.num_control} control points",
                rank=m,
                required=self.num_control,
            )
        if np.any(np.diff(self.parameters) < 0):
            raise PreconditionError("parameters must be nondecreasing")
        expected = self.spline_controls + self.degree + 1
        if len(self.knots) != expected:
            raise PreconditionError(f"expected {expected} knots, got {len(self.knots)}")
        lo, hi = self.domain
        if self.parameters[0] < lo or self.parameters[-1] > hi:
            raise DomainError(
                f"parameters [{self.parameters[0]}, {self.parameters[-1]}] outside knot domain [{lo}, {hi}]"
            )

    @property
    def spline_controls(self) -> int:
        return self.num_control + self.degree if self.periodic else self.num_control

    @property
    def domain(self) -> Tuple[float, float]:
        return knot_domain(self.knots, self.degree)


@dataclass(eq=False)
class ControlSolution:
    control_points: np.ndarray
    residual_rms: float


@dataclass(eq=False)
class SectionFit:
    """A fitted cross-section together with the data it was fitted to."""

    curve: BSplineCurve
    data_points: np.ndarray = field(repr=False)
    parameters: np.ndarray = field(repr=False)
    residual_rms: float
    section_id: str = ""
    slice_index: int = 0


def parameterize_chord_length(points, domain: Tuple[float, float] = (0.0, 1.0), closed: bool = False) -> np.ndarray:
    """Cumulative chord lengths mapped affinely onto the domain.

    Open point sets span [lo, hi]. Closed ones include the chord back to the
    first point, so their parameters lie in [lo, hi).
    """
    pts = _as_data(points)
    if len(pts) < 2:
        raise PreconditionError(f"parameterization needs at least 2 points, got {len(pts)}")
    lo, hi = domain
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if closed:
        chords = np.append(chords, np.linalg.norm(pts[0] - pts[-1]))
    total = chords.sum()
    if total == 0.0:
        logger.debug("all points coincide, falling back to uniform parameters")
        return parameterize_uniform(pts, domain, closed)
    cumulative = np.concatenate([[0.0], np.cumsum(chords)])
    params = lo + (hi - lo) * cumulative / total
    if closed:
        return params[:-1]
    params[-1] = hi
    return params


def parameterize_uniform(points, domain: Tuple[float, float] = (0.0, 1.0), closed: bool = False) -> np.ndarray:
    pts = _as_data(points)
    if len(pts) < 2:
        raise PreconditionError(f"parameterization needs at least 2 points, got {len(pts)}")
    lo, hi = domain
    if closed:
        return lo + (hi - lo) * np.arange(len(pts)) / len(pts)
    params = np.linspace(lo, hi, len(pts))
    params[-1] = hi
    return params


def averaged_knots(parameters: Sequence[float], degree: int, num_control: int) -> KnotVector:
    """Clamped knots whose interior knots average the data parameters.

    Square systems use the interpolation rule (mean of ``degree``
    consecutive parameters); otherwise interior knots interpolate the
    parameter sequence at evenly spaced fractional indices, so every knot
    span receives data.
    """
    u = np.asarray(parameters, dtype=float)
    m = len(u)
    if num_control < degree + 1:
        raise PreconditionError(f"need at least {degree + 1} control points, got {num_control}")
    if m < num_control:
        raise RankDeficiencyError(
            f"{m} parameters cannot determine {num_control} control points", rank=m, required=num_control
        )
    interior_count = num_control - degree - 1
    if m == num_control and degree > 0:
        interior = [u[j : j + degree].mean() for j in range(1, interior_count + 1)]
    else:
        d = m / (num_control - degree)
        interior = []
        for j in range(1, interior_count + 1):
            i = int(j * d)
            alpha = j * d - i
            interior.append((1.0 - alpha) * u[i - 1] + alpha * u[i])
    values = [u[0]] * (degree + 1) + list(interior) + [u[-1]] * (degree + 1)
    return KnotVector.of(values)


def uniform_knots(domain: Tuple[float, float], degree: int, num_control: int) -> KnotVector:
    """Clamped uniform knots rescaled to the domain."""
    lo, hi = domain
    base = make_clamped_knots(num_control, degree + 1).as_array()
    return KnotVector.of(lo + (hi - lo) * base / base[-1])


def periodic_knots(parameters: Sequence[float], degree: int, num_control: int, period: Tuple[float, float] = (0.0, 1.0)) -> KnotVector:
    """Knots of a wrapped closed curve with num_control unique control points.

    One period [lo, hi] is split into num_control spans at parameter
    quantiles; the knots are then extended periodically by ``degree`` on
    each side, giving num_control + 2 * degree + 1 values.
    """
    lo, hi = period
    u = np.append(np.asarray(parameters, dtype=float), hi)
    m = len(u) - 1
    if m < num_control:
        raise RankDeficiencyError(
            f"{m} parameters cannot determine {num_control} control points", rank=m, required=num_control
        )
    positions = np.arange(num_control + 1) * m / num_control
    base = np.interp(positions, np.arange(m + 1), u)
    base[0], base[-1] = lo, hi
    width = hi - lo
    before = base[num_control - degree : num_control] - width
    after = base[1 : degree + 1] + width
    return KnotVector.of(np.concatenate([before, base, after]))


def build_collocation(problem: FitProblem) -> np.ndarray:
    """Collocation matrix NB with entry (i, k) = BS_k(parameters[i])."""
    lo, hi = problem.domain
    if problem.parameters.min() < lo or problem.parameters.max() > hi:
        raise DomainError(f"parameters outside knot domain [{lo}, {hi}]")
    matrix = basis_matrix(problem.knots, problem.degree, problem.parameters, CLOSED_RIGHT)
    if problem.periodic:
        folded = matrix[:, : problem.num_control].copy()
        folded[:, : problem.degree] += matrix[:, problem.num_control :]
        return folded
    return matrix


def solve_least_squares(problem: FitProblem, rank_tolerance: float = RANK_TOLERANCE) -> ControlSolution:
    """Control points minimizing the squared residual of every coordinate."""
    A = build_collocation(problem)
    singular = linalg.svdvals(A)
    rank = int(np.sum(singular > rank_tolerance * singular[0])) if singular[0] > 0 else 0
    if rank < problem.num_control:
        raise RankDeficiencyError(
            f"collocation matrix has rank {rank}, {problem.num_control} control points need full column rank "
            f"({problem.num_control - rank} deficient)",
            rank=rank,
            required=problem.num_control,
        )
    Q, R = linalg.qr(A, mode="economic")
    control = linalg.solve_triangular(R, Q.T @ problem.data_points)
    residual = A @ control - problem.data_points
    rms = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    return ControlSolution(control_points=control, residual_rms=rms)


def average_knot_vectors(knot_vectors: Sequence[KnotVector]) -> KnotVector:
    """Elementwise mean of equally long knot vectors."""
    if not knot_vectors:
        raise PreconditionError("need at least one knot vector to average")
    lengths = {len(k) for k in knot_vectors}
    if len(lengths) != 1:
        raise PreconditionError(f"knot vectors have mismatched lengths {sorted(lengths)}")
    if all(k == knot_vectors[0] for k in knot_vectors[1:]):
        return knot_vectors[0]
    return KnotVector.of(np.mean([k.as_array() for k in knot_vectors], axis=0))


def align_seam(points) -> np.ndarray:
    """Counter-clockwise contour starting at the point nearest the positive-x ray from its centroid."""
    pts = _as_data(points)
    xy = pts[:, :2]
    nxt = np.roll(xy, -1, axis=0)
    signed_area = 0.5 * np.sum(xy[:, 0] * nxt[:, 1] - nxt[:, 0] * xy[:, 1])
    if signed_area < 0:
        pts = pts[::-1]
        xy = pts[:, :2]
    centroid = xy.mean(axis=0)
    angles = np.abs(np.arctan2(xy[:, 1] - centroid[1], xy[:, 0] - centroid[0]))
    return np.roll(pts, -int(np.argmin(angles)), axis=0)


def fit_points(
    points,
    degree: int,
    num_control: int,
    closed: bool = False,
    parameterization: Parameterization = "chord",
    knot_placement: KnotPlacement = "averaged",
    parameters: Optional[Sequence[float]] = None,
    knots: Optional[KnotVector] = None,
) -> SectionFit:
    """Fit a curve of the given degree with num_control (unique) control points.

    Explicit ``parameters`` override the parameterization; explicit
    ``knots`` override knot placement.
    """
    pts = as_points(points)
    if parameters is not None:
        params = np.asarray(parameters, dtype=float)
    elif parameterization == "chord":
        params = parameterize_chord_length(pts, closed=closed)
    elif parameterization == "uniform":
        params = parameterize_uniform(pts, closed=closed)
    else:
        raise PreconditionError(f"unknown parameterization {parameterization!r}")

    if knots is None:
        if closed:
            knots = periodic_knots(params, degree, num_control)
        elif knot_placement == "averaged":
            knots = averaged_knots(params, degree, num_control)
        elif knot_placement == "uniform":
            knots = uniform_knots((params[0], params[-1]), degree, num_control)
        else:
            raise PreconditionError(f"unknown knot placement {knot_placement!r}")

    problem = FitProblem(pts, params, degree, knots, num_control, periodic=closed)
    solution = solve_least_squares(problem)
    if closed:
        curve = closed_curve(solution.control_points, degree, knots)
    else:
        curve = BSplineCurve(degree=degree, knots=knots, control_points=solution.control_points)
    return SectionFit(curve=curve, data_points=pts, parameters=params, residual_rms=solution.residual_rms)
