"""
File readers and atomic writers for the CLI formats.

CSV files use shortest round-trip float text and LF line endings; OBJ
files list ``v`` lines then 1-based ``f`` faces. Every writer goes
through ``atomic_write`` so an interrupted run never leaves a partial
output file behind.
"""

import csv
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from geometry.errors import ParseError
from utils.schemas import PointSetSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Model = TypeVar("Model", bound=BaseModel)


def _fmt(value: float) -> str:
    return repr(float(value))


def atomic_write(path: PathLike, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s (%d bytes)", path, len(text))
    return path


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def write_curve_set_csv(path: PathLike, parameters, points) -> Path:
    rows = ([_fmt(t), *map(_fmt, p)] for t, p in zip(parameters, np.asarray(points)))
    return atomic_write(path, _csv_text(("ts", "x", "y", "z"), rows))


def write_points_csv(path: PathLike, points) -> Path:
    rows = (list(map(_fmt, p)) for p in np.asarray(points))
    return atomic_write(path, _csv_text(("x", "y", "z"), rows))


def write_fit_report_csv(path: PathLike, fits: Iterable[Tuple[str, int, float]]) -> Path:
    rows = ([section_id, str(num_control), _fmt(rms)] for section_id, num_control, rms in fits)
    return atomic_write(path, _csv_text(("section_id", "num_control", "residual_rms"), rows))


def write_classification_csv(path: PathLike, rows: Iterable[Tuple[str, int, bool, float]]) -> Path:
    text_rows = ([cid, str(slice_index), "true" if is_roi else "false", _fmt(distance)]
                 for cid, slice_index, is_roi, distance in rows)
    return atomic_write(path, _csv_text(("id", "slice", "is_roi", "distance"), text_rows))


def write_feature_sweep_csv(path: PathLike, scores: Iterable[Tuple[Sequence[str], float]]) -> Path:
    """One row per feature subset; names are joined with '+'."""
    rows = (["+".join(names), _fmt(accuracy)] for names, accuracy in scores)
    return atomic_write(path, _csv_text(("features", "accuracy"), rows))


def write_obj(path: PathLike, vertices, faces, comment: Optional[str] = None) -> Path:
    """ASCII OBJ with ``v`` lines followed by 1-based ``f`` lines."""
    lines = [f"# {comment}"] if comment else []
    lines.extend("v " + " ".join(map(_fmt, v)) for v in np.asarray(vertices))
    lines.extend("f " + " ".join(str(int(i) + 1) for i in face) for face in np.asarray(faces))
    return atomic_write(path, "\n".join(lines) + "\n")


def read_obj_vertices(path: PathLike) -> np.ndarray:
    vertices = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.startswith("v "):
                vertices.append([float(x) for x in line.split()[1:4]])
    return np.array(vertices)


def load_json(path: PathLike, model: Type[Model]) -> Model:
    """Read and validate a JSON document; any failure becomes a ParseError."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "document"
        raise ParseError(f"{path}: invalid {model.__name__} at {where}: {first.get('msg')}") from e


def dump_json(path: PathLike, model: BaseModel) -> Path:
    return atomic_write(path, model.model_dump_json(indent=2, by_alias=True) + "\n")


def dump_plain_json(path: PathLike, payload: dict) -> Path:
    return atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_points_csv(path: PathLike) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Points (and parameters, when a ``ts`` column is present) from a CSV file.

    The header must be ``x,y,z`` or ``ts,x,y,z``; ``x,y`` gives planar points.
    """
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = [h.strip() for h in next(reader, [])]
            body: List[List[str]] = [row for row in reader if row]
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e

    has_ts = bool(header) and header[0] == "ts"
    coords = header[1:] if has_ts else header
    if coords not in (["x", "y", "z"], ["x", "y"]):
        raise ParseError(f"{path}: expected header x,y,z or ts,x,y,z, got {','.join(header) or 'nothing'}")
    width = len(header)
    try:
        values = np.array([[float(v) for v in row] for row in body], dtype=float)
    except ValueError as e:
        raise ParseError(f"{path}: non-numeric value: {e}") from e
    if values.size == 0 or values.ndim != 2 or values.shape[1] != width:
        raise ParseError(f"{path}: every row needs {width} values")
    if has_ts:
        return values[:, 1:], values[:, 0]
    return values, None


def read_point_file(path: PathLike) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """CSV or JSON (``{"points": ..., "ts": ...}``) point file."""
    if Path(path).suffix.lower() == ".json":
        spec = load_json(path, PointSetSpec)
        ts = None if spec.ts is None else np.asarray(spec.ts, dtype=float)
        return np.asarray(spec.points, dtype=float), ts
    return read_points_csv(path)
