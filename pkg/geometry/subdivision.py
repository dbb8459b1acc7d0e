"""
Stationary subdivision of control polygons.

A refinement mask a_0..a_m (divided by ``scale``) defines the bi-infinite
subdivision matrix whose column j holds the mask at rows 2j..2j+m. Applying
the matrix to a polygon doubles its point count; repeated application
converges to the uniform B-spline of degree m - 1 on the original points.
"""

import logging
from dataclasses import dataclass
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from config.settings import LIMIT_CURVE_SAMPLES
from geometry.curve import BSplineCurve, as_points, closed_curve, sample
from geometry.errors import PreconditionError
from geometry.splinecore import BasisIndex, basis, make_integer_knots

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefinementMask:
    coefficients: Tuple[float, ...]
    scale: float

    def __post_init__(self):
        coefficients = tuple(float(c) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coefficients)
        if len(coefficients) < 2:
            raise PreconditionError("refinement mask needs at least 2 coefficients")
        even = sum(coefficients[0::2]) / self.scale
        odd = sum(coefficients[1::2]) / self.scale
        if even != 1.0 or odd != 1.0:
            raise PreconditionError(
                f"mask is not affine invariant: even sum {even}, odd sum {odd} (both must be 1)"
            )

    @classmethod
    def from_degree(cls, n: int) -> "RefinementMask":
        """Binomial mask C(n+1, j) / 2^n of the degree-n uniform B-spline."""
        if n < 0:
            raise PreconditionError(f"mask degree must be non-negative, got {n}")
        return cls(tuple(comb(n + 1, j) for j in range(n + 2)), float(2**n))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 2

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.coefficients) / self.scale


LINEAR_MASK = RefinementMask((1, 2, 1), 2.0)
CHAIKIN_MASK = RefinementMask((1, 3, 3, 1), 4.0)
CUBIC_MASK = RefinementMask((1, 4, 6, 4, 1), 8.0)

MASKS = {"linear": LINEAR_MASK, "chaikin": CHAIKIN_MASK, "cubic": CUBIC_MASK}


@dataclass(eq=False)
class ControlPolygon:
    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        self.points = as_points(self.points)
        if len(self.points) < 2:
            raise PreconditionError(f"control polygon needs at least 2 points, got {len(self.points)}")

    def __len__(self) -> int:
        return len(self.points)


def two_scale_eval(n: int, ts: float) -> Tuple[float, float]:
    """Both sides of the two-scale relation for BS_0^n.

    lhs = BS_0^n(ts); rhs = 2^-n * sum_j C(n+1, j) * BS_0^n(2ts - j).
    """
    if n not in (0, 1, 2, 3):
        raise PreconditionError(f"two-scale evaluation supports degrees 0..3, got {n}")
    knots = make_integer_knots(n + 2)
    idx = BasisIndex(0, n)
    lhs = basis(knots, idx, ts)
    rhs = sum(comb(n + 1, j) * basis(knots, idx, 2 * ts - j) for j in range(n + 2)) / 2**n
    return lhs, rhs


def _shift(mask: RefinementMask) -> int:
    # aligns output row 0 with the vertex point of input point 0
    return (mask.degree + 1) // 2


def minimum_points(mask: RefinementMask, closed: bool) -> int:
    return 2 if closed else len(mask.coefficients) - 1


def subdivision_matrix(num_points: int, mask: RefinementMask, closed: bool) -> np.ndarray:
    """Finite section of the subdivision matrix for a polygon of num_points points.

    Closed polygons index cyclically and give 2 * num_points rows. Open
    polygons keep only rows whose stencil lies inside the polygon and pin
    the two end points, giving 2 * num_points - 1 rows for odd-length masks.
    """
    if num_points < minimum_points(mask, closed):
        raise PreconditionError(
            f"{'closed' if closed else 'open'} polygon needs at least "
            f"{minimum_points(mask, closed)} points for this mask, got {num_points}"
        )
    a = mask.weights
    m = len(a) - 1
    shift = _shift(mask)
    rows = []
    for r in range(2 * num_points):
        row = np.zeros(num_points)
        R = r + shift
        inside = True
        for j in range((R - m + 1) // 2, R // 2 + 1):
            if not closed and not 0 <= j < num_points:
                inside = False
                break
            row[j % num_points] += a[R - 2 * j]
        if inside:
            rows.append(row)
    if closed:
        return np.array(rows)

    first = np.zeros(num_points)
    first[0] = 1.0
    last = np.zeros(num_points)
    last[-1] = 1.0
    if not rows or not np.array_equal(rows[0], first):
        rows.insert(0, first)
    if not np.array_equal(rows[-1], last):
        rows.append(last)
    return np.array(rows)


def subdivide_once(poly: ControlPolygon, mask: RefinementMask = CUBIC_MASK) -> ControlPolygon:
    """One application of the subdivision matrix."""
    S = subdivision_matrix(len(poly), mask, poly.closed)
    return ControlPolygon(points=S @ poly.points, closed=poly.closed)


def subdivide_to_depth(poly: ControlPolygon, mask: RefinementMask = CUBIC_MASK, depth: int = 1) -> ControlPolygon:
    if depth < 0:
        raise PreconditionError(f"depth must be non-negative, got {depth}")
    for _ in range(depth):
        poly = subdivide_once(poly, mask)
    return poly


def limit_curve(poly: ControlPolygon, mask: RefinementMask = CUBIC_MASK) -> BSplineCurve:
    """Uniform B-spline of the mask's degree on the polygon's points over integer knots."""
    n = mask.degree
    if poly.closed:
        return closed_curve(poly.points, n)
    if len(poly) < n + 1:
        raise PreconditionError(f"limit curve of degree {n} needs at least {n + 1} points")
    return BSplineCurve(degree=n, knots=make_integer_knots(len(poly) + n + 1), control_points=poly.points)


def _distance_to_polyline(queries: np.ndarray, dense: np.ndarray, closed: bool) -> np.ndarray:
    tree = cKDTree(dense)
    _, nearest = tree.query(queries)
    count = len(dense)
    best = np.full(len(queries), np.inf)
    for offset in (-1, 0):
        a_idx = nearest + offset
        b_idx = a_idx + 1
        if closed:
            a_idx %= count
            b_idx %= count
        valid = (a_idx >= 0) & (b_idx < count)
        a = dense[np.clip(a_idx, 0, count - 1)]
        b = dense[np.clip(b_idx, 0, count - 1)]
        ab = b - a
        length_sq = np.einsum("ij,ij->i", ab, ab)
        t = np.where(length_sq > 0, np.einsum("ij,ij->i", queries - a, ab) / np.where(length_sq > 0, length_sq, 1.0), 0.0)
        foot = a + np.clip(t, 0.0, 1.0)[:, None] * ab
        dist = np.linalg.norm(queries - foot, axis=1)
        best = np.where(valid, np.minimum(best, dist), best)
    return best


def convergence_report(
    poly: ControlPolygon,
    mask: RefinementMask = CUBIC_MASK,
    depths: Sequence[int] = (1, 2, 3, 4, 5, 6),
    samples: int = LIMIT_CURVE_SAMPLES,
) -> List[Tuple[int, float]]:
    """Max distance from each refined polygon to the limit curve.

    The limit curve is densely sampled (at least 10000 points) and the
    distance is taken to the resulting polyline.
    """
    if not poly.closed:
        raise PreconditionError("convergence report needs a closed polygon")
    depths = list(depths)
    if depths != sorted(depths):
        raise PreconditionError(f"depths must be sorted ascending, got {depths}")
    dense = sample(limit_curve(poly, mask), max(samples, LIMIT_CURVE_SAMPLES)).points

    report = []
    current: Optional[ControlPolygon] = poly
    level = 0
    for depth in depths:
        current = subdivide_to_depth(current, mask, depth - level)
        level = depth
        distance = float(_distance_to_polyline(current.points, dense, closed=True).max())
        logger.debug("depth %d: max distance %.3e over %d points", depth, distance, len(current))
        report.append((depth, distance))
    return report
