"""
Pydantic models for the JSON documents read and written by the CLI.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, RootModel, field_validator, model_validator

from geometry.curve import BSplineCurve


def _check_point_dims(points: List[List[float]], allowed=(2, 3)) -> List[List[float]]:
    for i, p in enumerate(points):
        if len(p) not in allowed:
            raise ValueError(f"point {i} has {len(p)} coordinates, expected one of {allowed}")
    return points


def _check_uniform_dims(points: List[List[float]]) -> List[List[float]]:
    dims = {len(p) for p in points}
    if len(dims) > 1:
        raise ValueError(f"points mix dimensions {sorted(dims)}")
    return points


class CurveSpec(BaseModel):
    """A B-spline curve: degree, knot vector and control points."""

    model_config = ConfigDict(extra="forbid")

    degree: int = Field(ge=0)
    knots: List[float] = Field(min_length=2)
    control_points: List[List[float]] = Field(min_length=1)
    closed: bool = False

    @field_validator("control_points")
    @classmethod
    def _points(cls, v):
        return _check_uniform_dims(_check_point_dims(v))

    @field_validator("knots")
    @classmethod
    def _nondecreasing(cls, v):
        for i in range(1, len(v)):
            if v[i] < v[i - 1]:
                raise ValueError(f"knots must be nondecreasing, knot {i} = {v[i]} follows {v[i - 1]}")
        return v

    @model_validator(mode="after")
    def _knot_count(self):
        expected = len(self.control_points) + self.degree + 1
        if len(self.knots) != expected:
            raise ValueError(
                f"{len(self.control_points)} control points of degree {self.degree} need {expected} knots, "
                f"got {len(self.knots)}"
            )
        return self

    @classmethod
    def from_curve(cls, curve: BSplineCurve) -> "CurveSpec":
        return cls(
            degree=curve.degree,
            knots=list(curve.knots.values),
            control_points=curve.control_points.tolist(),
            closed=curve.closed,
        )


class PolygonSpec(BaseModel):
    """Control polygon for subdivision."""

    points: List[List[float]] = Field(min_length=1)
    closed: bool = True

    @field_validator("points")
    @classmethod
    def _points(cls, v):
        return _check_uniform_dims(_check_point_dims(v))


class PointSetSpec(BaseModel):
    """Data points for fitting, optionally with their parameters."""

    points: List[List[float]] = Field(min_length=1)
    ts: Optional[List[float]] = None

    @field_validator("points")
    @classmethod
    def _points(cls, v):
        return _check_uniform_dims(_check_point_dims(v))

    @model_validator(mode="after")
    def _parameter_count(self):
        if self.ts is not None and len(self.ts) != len(self.points):
            raise ValueError(f"{len(self.points)} points but {len(self.ts)} parameters")
        return self


class ContourRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    id: str
    slice_index: int = Field(alias="slice", ge=0)
    points: List[List[float]]

    @field_validator("points")
    @classmethod
    def _points(cls, v):
        return _check_point_dims(v, allowed=(2,))


class ContourDataset(RootModel[List[ContourRecord]]):
    @model_validator(mode="after")
    def _unique_ids(self):
        seen = set()
        for record in self.root:
            if record.id in seen:
                raise ValueError(f"duplicate contour id {record.id!r}")
            seen.add(record.id)
        return self


class LabelSet(BaseModel):
    """Ground-truth labels of a phantom dataset."""

    kind: str
    exemplar_id: str
    roi: Dict[str, bool]
    family: Dict[str, str]
