"""
Knot vectors and B-spline basis functions.

The recursive basis follows the Cox-de Boor recurrence; a zero denominator
(repeated knots) makes the corresponding term vanish. Degree-0 basis
functions are indicators of half-open spans [t_k, t_k+1); with
``right_end_closed`` the last nonempty span also contains its right end so
that partition of unity holds on the closed curve domain.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from geometry.errors import DomainError, PreconditionError


@dataclass(frozen=True)
class KnotVector:
    """Nondecreasing parameter values marking polynomial segment joins."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) < 2:
            raise PreconditionError(f"knot vector needs at least 2 values, got {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise DomainError("knot vector values must be finite")
        for i in range(len(values) - 1):
            if values[i] > values[i + 1]:
                raise PreconditionError(
                    f"knot vector must be nondecreasing: values[{i}]={values[i]} > values[{i + 1}]={values[i + 1]}"
                )

    @classmethod
    def of(cls, values: Iterable[float]) -> "KnotVector":
        return cls(tuple(values))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index):
        return self.values[index]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def last_nonempty_span(self) -> int:
        """Index k of the last span [t_k, t_k+1) with positive length, -1 if none."""
        for k in range(len(self.values) - 2, -1, -1):
            if self.values[k] < self.values[k + 1]:
                return k
        return -1


@dataclass(frozen=True)
class BasisIndex:
    """Segment index k and degree n of a basis function BS_k^n."""

    k: int
    n: int

    def check(self, knots: KnotVector) -> None:
        if self.k < 0 or self.n < 0:
            raise PreconditionError(f"basis index must be non-negative, got k={self.k}, n={self.n}")
        if self.k + self.n + 1 >= len(knots):
            raise PreconditionError(
                f"basis index k={self.k}, n={self.n} out of range for {len(knots)} knots"
            )


@dataclass(frozen=True)
class BasisConvention:
    """Endpoint convention for degree-0 basis functions."""

    right_end_closed: bool = False


HALF_OPEN = BasisConvention(right_end_closed=False)
CLOSED_RIGHT = BasisConvention(right_end_closed=True)


class EvaluationCounter:
    """Counts basis-function evaluations for cost accounting."""

    def __init__(self):
        self.count = 0

    def record(self, evaluations: int = 1) -> None:
        self.count += evaluations


def _check_finite(ts: float) -> float:
    ts = float(ts)
    if not math.isfinite(ts):
        raise DomainError(f"parameter must be finite, got {ts}")
    return ts


def unit_step(ts: float) -> float:
    """The strict unit step: 1 for ts > 0, 0 otherwise."""
    ts = _check_finite(ts)
    return 1.0 if ts > 0 else 0.0


def _span_indicator(values: Sequence[float], k: int, ts: float, closed_span: int) -> float:
    lo, hi = values[k], values[k + 1]
    if lo == hi:
        return 0.0
    if lo <= ts < hi:
        return 1.0
    if k == closed_span and ts == hi:
        return 1.0
    return 0.0


def _closed_span(knots: KnotVector, conv: BasisConvention) -> int:
    return knots.last_nonempty_span if conv.right_end_closed else -1


def basis_degree0(knots: KnotVector, k: int, ts: float, conv: BasisConvention = HALF_OPEN) -> float:
    """Indicator of the k-th knot span."""
    if k < 0 or k + 1 >= len(knots):
        raise PreconditionError(f"span index {k} out of range for {len(knots)} knots")
    ts = _check_finite(ts)
    return _span_indicator(knots.values, k, ts, _closed_span(knots, conv))


def _triangle(values: Sequence[float], first: int, count: int, n: int, ts: float, closed_span: int) -> List[float]:
    """Degree-n basis values for indices first..first+count-1.

    Builds the Cox-de Boor triangle bottom-up, so each (k, degree) pair is
    computed exactly once.
    """
    row = [_span_indicator(values, j, ts, closed_span) for j in range(first, first + count + n)]
    for d in range(1, n + 1):
        nxt = []
        for i in range(len(row) - 1):
            k = first + i
            left = 0.0
            right = 0.0
            den_left = values[k + d] - values[k]
            if den_left != 0.0:
                left = (ts - values[k]) / den_left * row[i]
            den_right = values[k + d + 1] - values[k + 1]
            if den_right != 0.0:
                right = (values[k + d + 1] - ts) / den_right * row[i + 1]
            nxt.append(left + right)
        row = nxt
    return row


def basis(
    knots: KnotVector,
    idx: BasisIndex,
    ts: float,
    conv: BasisConvention = HALF_OPEN,
    counter: Optional[EvaluationCounter] = None,
) -> float:
    """Value of BS_k^n(ts) by the Cox-de Boor recursion."""
    idx.check(knots)
    ts = _check_finite(ts)
    value = _triangle(knots.values, idx.k, 1, idx.n, ts, _closed_span(knots, conv))[0]
    if counter is not None:
        counter.record(1)
    return value


def basis_functions(
    knots: KnotVector,
    degree: int,
    ts: float,
    conv: BasisConvention = HALF_OPEN,
    counter: Optional[EvaluationCounter] = None,
) -> np.ndarray:
    """All len(knots) - degree - 1 basis values of the given degree at ts."""
    count = len(knots) - degree - 1
    if degree < 0 or count < 1:
        raise PreconditionError(f"degree {degree} leaves no basis functions on {len(knots)} knots")
    ts = _check_finite(ts)
    values = _triangle(knots.values, 0, count, degree, ts, _closed_span(knots, conv))
    if counter is not None:
        counter.record(len(values))
    return np.asarray(values)


def basis_matrix(
    knots: KnotVector,
    degree: int,
    ts: Sequence[float],
    conv: BasisConvention = HALF_OPEN,
    counter: Optional[EvaluationCounter] = None,
) -> np.ndarray:
    """Basis values for many parameters at once, shape (len(ts), N).

    Entry (i, k) is computed with the same operations, in the same order, as
    ``basis(knots, BasisIndex(k, degree), ts[i], conv)``.
    """
    count = len(knots) - degree - 1
    if degree < 0 or count < 1:
        raise PreconditionError(f"degree {degree} leaves no basis functions on {len(knots)} knots")
    t = np.asarray(ts, dtype=float).reshape(-1)
    if not np.all(np.isfinite(t)):
        raise DomainError("parameters must be finite")
    values = knots.as_array()
    lo = values[:-1][:, None]
    hi = values[1:][:, None]
    row = ((lo <= t) & (t < hi)).astype(float)
    closed_span = _closed_span(knots, conv)
    if closed_span >= 0:
        row[closed_span] = np.where(t == values[closed_span + 1], 1.0, row[closed_span])
    for d in range(1, degree + 1):
        m = row.shape[0] - 1
        k = np.arange(m)
        den_left = values[k + d] - values[k]
        den_right = values[k + d + 1] - values[k + 1]
        nxt = np.zeros((m, t.size))
        for i in range(m):
            left = 0.0
            right = 0.0
            if den_left[i] != 0.0:
                left = (t - values[i]) / den_left[i] * row[i]
            if den_right[i] != 0.0:
                right = (values[i + d + 1] - t) / den_right[i] * row[i + 1]
            nxt[i] = left + right
        row = nxt
    if counter is not None:
        for column in row:
            counter.record(column.size)
    return row.T.copy()


def uniform_basis_closed_form(n: int, ts: float) -> float:
    """BS_0^n(ts) on integer knots from the explicit blending polynomials, n in {1, 2, 3}."""
    if n not in (1, 2, 3):
        raise PreconditionError(f"closed forms exist for degrees 1, 2, 3; got {n}")
    ts = _check_finite(ts)
    if ts < 0 or ts >= n + 1:
        return 0.0
    span = int(math.floor(ts))
    t = ts
    if n == 1:
        return t if span == 0 else 2 - t
    if n == 2:
        if span == 0:
            return 0.5 * t * t
        if span == 1:
            return 0.5 * (t * (2 - t) + (3 - t) * (t - 1))
        return 0.5 * (3 - t) ** 2
    if span == 0:
        return t**3 / 6
    if span == 1:
        return (t * t * (2 - t) + t * (t - 1) * (3 - t) + (t - 1) ** 2 * (4 - t)) / 6
    if span == 2:
        return (t * (3 - t) ** 2 + (t - 1) * (3 - t) * (4 - t) + (t - 2) * (4 - t) ** 2) / 6
    return (4 - t) ** 3 / 6


def make_clamped_knots(num_control: int, order: int) -> KnotVector:
    """Clamped uniform knot vector of length num_control + order.

    The first and last ``order`` values repeat; interior values step by one.
    (4, 4) gives {0,0,0,0,1,1,1,1}.
    """
    if order < 1:
        raise PreconditionError(f"order must be at least 1, got {order}")
    if num_control < order:
        raise PreconditionError(f"need num_control >= order, got {num_control} < {order}")
    spans = num_control - order + 1
    values = [0.0] * order + [float(i) for i in range(1, spans)] + [float(spans)] * order
    return KnotVector(tuple(values))


def make_integer_knots(count: int) -> KnotVector:
    """Knots {0, 1, ..., count-1}."""
    if count < 2:
        raise PreconditionError(f"integer knot vector needs count >= 2, got {count}")
    return KnotVector(tuple(float(i) for i in range(count)))


def knot_domain(knots: KnotVector, degree: int) -> Tuple[float, float]:
    """Curve domain [t_n, t_N] for a degree-n spline over these knots."""
    num_control = len(knots) - degree - 1
    if degree < 0 or num_control < degree + 1:
        raise PreconditionError(
            f"{len(knots)} knots cannot carry a degree-{degree} spline with at least {degree + 1} control points"
        )
    return knots[degree], knots[num_control]


def greville_abscissae(knots: KnotVector, degree: int) -> np.ndarray:
    """Averages of ``degree`` consecutive knots, one per control point."""
    num_control = len(knots) - degree - 1
    if num_control < 1:
        raise PreconditionError(f"degree {degree} leaves no basis functions on {len(knots)} knots")
    values = knots.as_array()
    if degree == 0:
        return 0.5 * (values[:-1] + values[1:])
    return np.array([values[i + 1 : i + degree + 1].mean() for i in range(num_control)])
