import numpy as np
import pytest

from geometry.curve import BSplineCurve
from geometry.splinecore import make_clamped_knots


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def clamped_cubic():
    """Four-point clamped cubic, i.e. a single Bezier segment on [0, 1]."""
    points = [[0.0, 0.0, 0.0], [1.0, 2.0, 0.0], [3.0, 2.0, 0.0], [4.0, 0.0, 0.0]]
    return BSplineCurve(degree=3, knots=make_clamped_knots(4, 4), control_points=points)


def circle_points(count, radius=1.0, center=(0.0, 0.0), phase=0.0, z=None):
    angles = phase + 2 * np.pi * np.arange(count) / count
    xy = np.column_stack([center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles)])
    if z is None:
        return xy
    return np.column_stack([xy, np.full(count, z)])
