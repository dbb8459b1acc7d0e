# main.py

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from config.settings import (
    APP_DESCRIPTION,
    APP_NAME,
    DEFAULT_DEGREE,
    DEFAULT_DEGREE_V,
    DEFAULT_FEATURES,
    DEFAULT_K,
    DEFAULT_NUM_CONTROL,
    DEFAULT_RES_U,
    DEFAULT_RES_V,
    DEFAULT_SAMPLE_COUNT,
    DEFAULT_SEED,
    get_log_level,
    validate_environment,
)
from geometry.curve import curve_from_spec, evaluate, sample
from geometry.errors import BSplineError, ParseError, PreconditionError
from geometry.fitting import fit_points
from geometry.subdivision import MASKS, ControlPolygon, convergence_report, subdivide_to_depth
from services.phantom_service import PHANTOM_KINDS, PhantomService
from services.reconstruction_service import ReconstructionService, contours_from_dataset
from utils.file_io import (
    dump_json,
    dump_plain_json,
    load_json,
    read_point_file,
    read_points_csv,
    write_classification_csv,
    write_curve_set_csv,
    write_feature_sweep_csv,
    write_fit_report_csv,
    write_obj,
    write_points_csv,
)
from utils.schemas import ContourDataset, CurveSpec, LabelSet, PolygonSpec

logger = logging.getLogger(APP_NAME)


@dataclass(frozen=True)
class RunConfig:
    """Command name, paths and the numeric options shared across commands."""

    command: str
    out: Optional[Path] = None
    degree: Optional[int] = None
    num_control: Optional[int] = None
    count: Optional[int] = None
    depth: Optional[int] = None
    k: Optional[int] = None
    seed: Optional[int] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        out = getattr(args, "out", None)
        return cls(
            command=args.command,
            out=Path(out) if out else None,
            **{name: getattr(args, name, None) for name in ("degree", "num_control", "count", "depth", "k", "seed")},
        )

    def validate(self) -> None:
        if self.degree is not None and self.degree < 0:
            raise PreconditionError(f"--degree must be non-negative, got {self.degree}")
        if self.num_control is not None and self.degree is not None and self.num_control < self.degree + 1:
            raise PreconditionError(f"--num-control must be at least degree + 1 = {self.degree + 1}")
        if self.count is not None and self.count < 2:
            raise PreconditionError(f"--count must be at least 2, got {self.count}")
        if self.depth is not None and self.depth < 0:
            raise PreconditionError(f"--depth must be non-negative, got {self.depth}")
        if self.k is not None and self.k < 1:
            raise PreconditionError(f"--k must be at least 1, got {self.k}")
        if self.out is not None:
            directory = self.out.parent
            while not directory.exists() and directory != directory.parent:
                directory = directory.parent
            if not os.access(directory, os.W_OK):
                raise PreconditionError(f"output directory {self.out.parent} is not writable")


# --- HELPER FUNCTIONS ---
def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    """Single stderr handler; --verbose and --quiet override BSPLINE_LOG_LEVEL."""
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    else:
        level = getattr(logging, get_log_level())
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def labels_path(dataset_path: Path) -> Path:
    """Ground-truth sidecar written next to a phantom dataset."""
    return dataset_path.with_suffix(".labels.json")


def load_curve(path: str):
    return curve_from_spec(load_json(path, CurveSpec))


def load_polygon(path: str, force_open: bool) -> ControlPolygon:
    if Path(path).suffix.lower() == ".json":
        spec = load_json(path, PolygonSpec)
        return ControlPolygon(points=np.asarray(spec.points, dtype=float), closed=spec.closed and not force_open)
    points, _ = read_points_csv(path)
    return ControlPolygon(points=points, closed=not force_open)


# --- COMMANDS ---
def cmd_eval(args: argparse.Namespace) -> int:
    curve = load_curve(args.curve)
    point = evaluate(curve, args.ts)
    print(" ".join(repr(float(c)) for c in point))
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    curve = load_curve(args.curve)
    curve_set = sample(curve, args.count)
    write_curve_set_csv(args.out, curve_set.parameters, curve_set.points)
    logger.info("✅ Wrote %d samples to %s", len(curve_set), args.out)
    return 0


def cmd_subdivide(args: argparse.Namespace) -> int:
    polygon = load_polygon(args.polygon, args.open)
    mask = MASKS[args.mask]
    refined = subdivide_to_depth(polygon, mask, args.depth)
    write_points_csv(args.out, refined.points)
    logger.info("✅ Subdivided %d points to %d at depth %d", len(polygon), len(refined), args.depth)
    if args.report:
        if args.depth < 1:
            raise PreconditionError("--report needs --depth of at least 1")
        print("depth,max_distance")
        for depth, distance in convergence_report(polygon, mask, range(1, args.depth + 1)):
            print(f"{depth},{distance!r}")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    points, ts = read_point_file(args.points)
    fit = fit_points(
        points,
        args.degree,
        args.num_control,
        closed=args.closed,
        parameterization=args.parameterization,
        knot_placement=args.knot_placement,
        parameters=ts,
    )
    dump_json(args.out, CurveSpec.from_curve(fit.curve))
    print(f"residual_rms {fit.residual_rms!r}", file=sys.stderr)
    logger.info("✅ Fitted %d points with %d control points", len(points), args.num_control)
    return 0


def cmd_reconstruct(args: argparse.Namespace) -> int:
    contours_path = Path(args.contours)
    dataset = load_json(contours_path, ContourDataset)
    sidecar = labels_path(contours_path)
    labels = load_json(sidecar, LabelSet) if sidecar.exists() else None
    roi_id = args.roi_id
    if roi_id is None:
        if labels is None:
            raise PreconditionError("--roi-id is required when the dataset has no labels sidecar")
        roi_id = labels.exemplar_id
        logger.info("Using RoI exemplar %s from %s", roi_id, sidecar)
    if args.sweep_features and labels is None:
        raise PreconditionError("--sweep-features needs the ground-truth labels sidecar")

    service = ReconstructionService(
        degree=args.degree,
        num_control=args.num_control,
        degree_v=args.degree_v,
        k=args.k,
        seed=args.seed,
        features=args.features,
        res_u=args.res_u,
        res_v=args.res_v,
    )
    contours = contours_from_dataset(dataset)
    out = Path(args.out)
    stem = out.parent / out.stem
    if args.sweep_features:
        scores = service.sweep_features(contours, roi_id, labels.roi, max_size=args.sweep_max_size)
        write_feature_sweep_csv(f"{stem}_features.csv", [(s.features, s.accuracy) for s in scores])
    result = service.reconstruct(contours, roi_id)

    faces = result.mesh.triangles() if args.triangulate else result.mesh.quads
    write_obj(out, result.mesh.vertices, faces, comment=f"{APP_NAME} reconstruct {contours_path.name}")
    write_classification_csv(
        f"{stem}_classification.csv",
        [(r.id, r.slice_index, r.is_roi, r.distance) for r in result.classifications],
    )
    write_fit_report_csv(f"{stem}_fits.csv", result.fit_rows)
    rows, cols = result.surface.control_net.shape[:2]
    dump_plain_json(
        f"{stem}_summary.json",
        {
            "contours": len(result.classifications),
            "roi_contours": sum(r.is_roi for r in result.classifications),
            "roi_slices": result.roi_slices,
            "k": args.k,
            "seed": args.seed,
            "features": list(args.features),
            "inertia": result.model.inertia,
            "control_net": [rows, cols],
            "vertices": len(result.mesh.vertices),
            "faces": len(faces),
            "degenerate": result.mesh.degenerate,
            "twist_degrees": math.degrees(result.twist),
        },
    )
    print(f"twist_degrees {math.degrees(result.twist)!r}", file=sys.stderr)
    logger.info("✅ Wrote mesh %s (%d vertices, %d faces)", out, len(result.mesh.vertices), len(faces))
    return 0


def cmd_phantom(args: argparse.Namespace) -> int:
    service = PhantomService(
        slices=args.slices, points=args.points, radius=args.radius, noise=args.noise, seed=args.seed
    )
    dataset, labels = service.generate(args.kind)
    out = Path(args.out)
    dump_json(out, dataset)
    dump_json(labels_path(out), labels)
    logger.info("✅ Wrote %s and %s", out, labels_path(out))
    return 0


# --- PARSER ---
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="log debug detail")
    verbosity.add_argument("--quiet", action="store_true", help="log warnings and errors only")

    parser = argparse.ArgumentParser(prog=APP_NAME, description=APP_DESCRIPTION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate a curve at one parameter")
    p.add_argument("curve", help="curve-spec JSON")
    p.add_argument("ts", type=float, help="curve parameter")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("sample", parents=[common], help="sample a curve at equal parameter steps")
    p.add_argument("curve", help="curve-spec JSON")
    p.add_argument("--count", type=int, default=DEFAULT_SAMPLE_COUNT)
    p.add_argument("--out", required=True, help="output CSV (ts,x,y,z)")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("subdivide", parents=[common], help="refine a control polygon")
    p.add_argument("polygon", help="polygon JSON or x,y,z CSV")
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--mask", choices=sorted(MASKS), default="cubic")
    p.add_argument("--open", action="store_true", help="treat the polygon as open")
    p.add_argument("--report", action="store_true", help="print the convergence table for depths 1..depth")
    p.add_argument("--out", required=True, help="output CSV (x,y,z)")
    p.set_defaults(handler=cmd_subdivide)

    p = sub.add_parser("fit", parents=[common], help="least-squares curve through points")
    p.add_argument("points", help="CSV (x,y,z or ts,x,y,z) or JSON point file")
    p.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
    p.add_argument("--num-control", type=int, default=DEFAULT_NUM_CONTROL)
    p.add_argument("--closed", action="store_true", help="fit a closed curve")
    p.add_argument("--parameterization", choices=("chord", "uniform"), default="chord")
    p.add_argument("--knot-placement", choices=("averaged", "uniform"), default="averaged")
    p.add_argument("--out", required=True, help="output curve-spec JSON")
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("reconstruct", parents=[common], help="classify contours and loft the RoI surface")
    p.add_argument("contours", help="contour dataset JSON")
    p.add_argument("--roi-id", help="id of a contour known to belong to the RoI")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--degree", type=int, default=DEFAULT_DEGREE)
    p.add_argument("--num-control", type=int, default=DEFAULT_NUM_CONTROL)
    p.add_argument("--degree-v", type=int, default=DEFAULT_DEGREE_V)
    p.add_argument("--res-u", type=int, default=DEFAULT_RES_U)
    p.add_argument("--res-v", type=int, default=DEFAULT_RES_V)
    p.add_argument("--features", nargs="+", default=list(DEFAULT_FEATURES))
    p.add_argument("--triangulate", action="store_true", help="write triangles instead of quads")
    p.add_argument(
        "--sweep-features",
        action="store_true",
        help="score RoI accuracy of every feature subset against the labels sidecar into <stem>_features.csv",
    )
    p.add_argument("--sweep-max-size", type=int, default=None, help="largest feature subset to score")
    p.add_argument("--out", required=True, help="output OBJ mesh")
    p.set_defaults(handler=cmd_reconstruct)

    p = sub.add_parser("phantom", parents=[common], help="generate a synthetic contour dataset")
    p.add_argument("kind", choices=PHANTOM_KINDS)
    p.add_argument("--slices", type=int, default=10)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=1e-3, help="Gaussian noise as a fraction of the radius")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True, help="output contour dataset JSON")
    p.set_defaults(handler=cmd_phantom)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ParseError.exit_code if e.code else 0

    configure_logging(args.verbose, args.quiet)
    if not validate_environment():
        logger.warning("⚠️ Continuing with default settings for invalid environment variables")

    try:
        config = RunConfig.from_args(args)
        config.validate()
        logger.debug("running %s", config)
        return args.handler(args)
    except BSplineError as e:
        logger.error("❌ %s", e)
        return e.exit_code
    except OSError as e:
        logger.error("❌ %s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
