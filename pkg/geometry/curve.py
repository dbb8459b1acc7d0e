"""
B-spline curves: point evaluation, curve-set sampling and the geometric
property checks (convex hull, repeated-point interpolation).
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config.settings import HULL_TOLERANCE, INTERPOLATION_TOLERANCE
from geometry import hull
from geometry.errors import DomainError, PreconditionError
from geometry.splinecore import (
    CLOSED_RIGHT,
    BasisIndex,
    EvaluationCounter,
    KnotVector,
    basis,
    basis_matrix,
    knot_domain,
    make_integer_knots,
)

logger = logging.getLogger(__name__)


class ControlPoint(NamedTuple):
    x: float
    y: float
    z: float


def as_points(points, dims: int = 3) -> np.ndarray:
    """Coerce a point sequence to a float array of shape (m, dims); 2D input gets z = 0."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] not in (2, dims):
        raise PreconditionError(f"expected points of dimension 2 or {dims}, got shape {arr.shape}")
    if arr.shape[1] == 2 and dims == 3:
        arr = np.column_stack([arr, np.zeros(len(arr))])
    if not np.all(np.isfinite(arr)):
        raise DomainError("point coordinates must be finite")
    return arr


@dataclass(eq=False)
class BSplineCurve:
    """Degree, knots and ordered control points of a B-spline curve."""

    degree: int
    knots: KnotVector
    control_points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        if self.degree < 0:
            raise PreconditionError(f"degree must be non-negative, got {self.degree}")
        if not isinstance(self.knots, KnotVector):
            self.knots = KnotVector.of(self.knots)
        points = as_points(self.control_points)
        points.setflags(write=False)
        self.control_points = points
        n, count = self.degree, len(points)
        if count < n + 1:
            raise PreconditionError(f"a degree-{n} curve needs at least {n + 1} control points, got {count}")
        if len(self.knots) != count + n + 1:
            raise PreconditionError(
                f"expected {count + n + 1} knots for {count} control points of degree {n}, got {len(self.knots)}"
            )
        lo, hi = self.domain
        if not lo < hi:
            raise PreconditionError(f"curve domain [{lo}, {hi}] is empty")

    @property
    def num_control(self) -> int:
        return len(self.control_points)

    @property
    def domain(self) -> Tuple[float, float]:
        return knot_domain(self.knots, self.degree)


@dataclass(eq=False)
class CurveSet:
    """Sampled curve points with their parameters."""

    parameters: np.ndarray
    points: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.parameters)

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return [(float(t), *map(float, p)) for t, p in zip(self.parameters, self.points)]


def _check_in_domain(curve: BSplineCurve, ts: float) -> float:
    ts = float(ts)
    lo, hi = curve.domain
    if not np.isfinite(ts) or ts < lo or ts > hi:
        raise DomainError(f"parameter {ts} outside curve domain [{lo}, {hi}]")
    return ts


def evaluate(curve: BSplineCurve, ts: float, counter: Optional[EvaluationCounter] = None) -> np.ndarray:
    """Point on the curve: sum over all control points of BS_k^n(ts) * cp_k."""
    ts = _check_in_domain(curve, ts)
    point = np.zeros(curve.control_points.shape[1])
    for k in range(curve.num_control):
        weight = basis(curve.knots, BasisIndex(k, curve.degree), ts, CLOSED_RIGHT, counter)
        point += weight * curve.control_points[k]
    return point


def sample_parameters(curve: BSplineCurve, count: int) -> np.ndarray:
    if count < 2:
        raise PreconditionError(f"sampling needs at least 2 points, got {count}")
    lo, hi = curve.domain
    step = (hi - lo) / (count - 1)
    params = lo + np.arange(count) * step
    params[-1] = hi
    return params


def sample(curve: BSplineCurve, count: int, counter: Optional[EvaluationCounter] = None) -> CurveSet:
    """The curve set: ``count`` points at equal parameter steps over the domain.

    Every sample combines all N basis functions, so a full sampling costs
    count * N basis evaluations.
    """
    params = sample_parameters(curve, count)
    weights = basis_matrix(curve.knots, curve.degree, params, CLOSED_RIGHT, counter)
    points = np.zeros((count, curve.control_points.shape[1]))
    for k in range(curve.num_control):
        points += weights[:, k : k + 1] * curve.control_points[k]
    return CurveSet(parameters=params, points=points)


def convex_hull_contains(curve: BSplineCurve, pts: CurveSet, tol: float = HULL_TOLERANCE) -> bool:
    """True when every sample lies inside or on the 2D hull of the control points."""
    z = curve.control_points[:, 2]
    if np.ptp(z) > tol:
        raise PreconditionError("convex hull test needs a planar curve with constant z")
    if len(pts) == 0:
        return True
    if np.any(np.abs(pts.points[:, 2] - z[0]) > tol):
        return False
    return bool(np.all(hull.contains(curve.control_points[:, :2], pts.points[:, :2], tol)))


def _runs(points: np.ndarray) -> List[Tuple[int, int]]:
    runs = []
    start = 0
    for i in range(1, len(points) + 1):
        if i == len(points) or not np.array_equal(points[i], points[start]):
            runs.append((start, i - start))
            start = i
    return runs


def multiplicity_interpolation_check(
    curve: BSplineCurve, tol: float = INTERPOLATION_TOLERANCE
) -> List[Tuple[ControlPoint, float]]:
    """Runs of at least ``degree`` identical adjacent control points and a parameter where the curve hits them.

    Only knots and span midpoints whose active basis functions all belong
    to the run are scanned.
    """
    n = curve.degree
    lo, hi = curve.domain
    knots = curve.knots
    found = []
    for start, length in _runs(curve.control_points):
        if length < max(n, 1):
            continue
        point = curve.control_points[start]
        candidates = []
        for j in range(start + n, start + length + 1):
            if j < len(knots):
                candidates.append(knots[j])
            if j < start + length and j + 1 < len(knots):
                candidates.append(0.5 * (knots[j] + knots[j + 1]))
        for ts in candidates:
            if not lo <= ts <= hi:
                continue
            if np.linalg.norm(evaluate(curve, ts) - point) <= tol:
                found.append((ControlPoint(*map(float, point)), float(ts)))
                break
        else:
            logger.debug("run of %d copies at index %d is not interpolated", length, start)
    return found


def closed_curve(points: Sequence, degree: int, knots: Optional[KnotVector] = None) -> BSplineCurve:
    """Closed curve from unique control points, wrapping the first ``degree`` of them.

    Without explicit knots the curve uses integer knots, i.e. the uniform
    periodic B-spline.
    """
    unique = as_points(points)
    if len(unique) < max(degree, 2):
        raise PreconditionError(f"closed curve of degree {degree} needs at least {max(degree, 2)} points")
    wrapped = np.vstack([unique, unique[:degree]])
    if knots is None:
        knots = make_integer_knots(len(wrapped) + degree + 1)
    return BSplineCurve(degree=degree, knots=knots, control_points=wrapped, closed=True)


def unique_control_points(curve: BSplineCurve) -> np.ndarray:
    """Control points without the wrapped copies of a closed curve."""
    if curve.closed:
        return curve.control_points[: curve.num_control - curve.degree]
    return curve.control_points


def curve_from_spec(spec) -> BSplineCurve:
    """Build a curve from a validated ``CurveSpec``."""
    return BSplineCurve(
        degree=spec.degree,
        knots=KnotVector.of(spec.knots),
        control_points=np.asarray(spec.control_points, dtype=float),
        closed=spec.closed,
    )
