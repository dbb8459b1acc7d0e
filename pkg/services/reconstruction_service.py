# services/reconstruction_service.py
import logging
import math
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import (
    DEFAULT_DEGREE,
    DEFAULT_DEGREE_V,
    DEFAULT_FEATURES,
    DEFAULT_K,
    DEFAULT_NUM_CONTROL,
    DEFAULT_RES_U,
    DEFAULT_RES_V,
    DEFAULT_SEED,
    KMEANS_N_INIT,
    get_slice_spacing,
)
from geometry.contours import (
    FEATURE_NAMES,
    Classification,
    ClusterModel,
    Contour,
    FeatureVector,
    classify_features,
    classify_roi,
    extract_features,
    fit_cluster_model,
    select_roi_cluster,
)
from geometry.errors import PipelineInsufficiencyError, PreconditionError
from geometry.fitting import SectionFit, align_seam, fit_points
from geometry.surface import QuadMesh, TensorSurface, loft, make_sections_compatible, tessellate, twist_metric
from utils.parallel import parallel_map
from utils.schemas import ContourDataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassificationRow:
    id: str
    slice_index: int
    is_roi: bool
    distance: float


@dataclass(eq=False)
class ReconstructionResult:
    mesh: QuadMesh
    surface: TensorSurface
    model: ClusterModel
    classifications: List[ClassificationRow]
    sections: List[SectionFit] = field(repr=False)
    twist: float

    @property
    def fit_rows(self) -> List[Tuple[str, int, float]]:
        return [(s.section_id, s.curve.num_control - s.curve.degree, s.residual_rms) for s in self.sections]

    @property
    def roi_slices(self) -> List[int]:
        return [s.slice_index for s in self.sections]


@dataclass(frozen=True)
class FeatureScore:
    features: Tuple[str, ...]
    accuracy: float


def contours_from_dataset(dataset: ContourDataset) -> List[Contour]:
    return [Contour(id=r.id, slice_index=r.slice_index, points=np.asarray(r.points, dtype=float)) for r in dataset.root]


class ReconstructionService:
    """
    Rebuilds an RoI surface from a stack of planar contours:
    features -> k-means -> RoI classification -> per-slice closed fits ->
    knot compatibility -> loft -> tessellation.
    """

    def __init__(
        self,
        degree: int = DEFAULT_DEGREE,
        num_control: int = DEFAULT_NUM_CONTROL,
        degree_v: int = DEFAULT_DEGREE_V,
        k: int = DEFAULT_K,
        seed: int = DEFAULT_SEED,
        features: Sequence[str] = DEFAULT_FEATURES,
        res_u: int = DEFAULT_RES_U,
        res_v: int = DEFAULT_RES_V,
        slice_spacing: Optional[float] = None,
        n_init: int = KMEANS_N_INIT,
    ):
        self.degree = degree
        self.num_control = num_control
        self.degree_v = degree_v
        self.k = k
        self.seed = seed
        self.features = tuple(features)
        self.res_u = res_u
        self.res_v = res_v
        self.slice_spacing = get_slice_spacing() if slice_spacing is None else slice_spacing
        self.n_init = n_init

    def classify(
        self, contours: Sequence[Contour], exemplar_id: str
    ) -> Tuple[ClusterModel, List[Classification]]:
        """Cluster every contour and label the cluster nearest the exemplar as RoI."""
        by_id: Dict[str, Contour] = {c.id: c for c in contours}
        if exemplar_id not in by_id:
            raise PreconditionError(f"RoI exemplar {exemplar_id!r} is not in the dataset")
        features = parallel_map(extract_features, contours)
        model = fit_cluster_model(features, self.k, self.seed, self.features, n_init=self.n_init)
        model = select_roi_cluster(model, by_id[exemplar_id])
        results = parallel_map(partial(classify_roi, model), contours)
        roi_count = sum(r.is_roi for r in results)
        logger.info(
            "✅ Classified %d contours into %d clusters; %d fall in the RoI cluster %d",
            len(contours), self.k, roi_count, model.roi_cluster,
        )
        return model, results

    def sweep_features(
        self,
        contours: Sequence[Contour],
        exemplar_id: str,
        truth: Dict[str, bool],
        candidates: Sequence[str] = FEATURE_NAMES,
        max_size: Optional[int] = None,
    ) -> List[FeatureScore]:
        """RoI classification accuracy against ground truth for every subset of the candidate features.

        Scores are sorted best first; equal accuracies keep the smaller subset
        first, then enumeration order. Subsets with a constant dimension are
        skipped.
        """
        by_id: Dict[str, Contour] = {c.id: c for c in contours}
        if exemplar_id not in by_id:
            raise PreconditionError(f"RoI exemplar {exemplar_id!r} is not in the dataset")
        missing = [c.id for c in contours if c.id not in truth]
        if missing:
            raise PreconditionError(f"{len(missing)} contours have no ground-truth label, e.g. {missing[0]!r}")
        unknown = [n for n in candidates if n not in FEATURE_NAMES]
        if unknown:
            raise PreconditionError(f"unknown features {unknown}; choose from {list(FEATURE_NAMES)}")
        if self.k > len(contours):
            raise PreconditionError(f"k = {self.k} exceeds the {len(contours)} contours")
        max_size = len(candidates) if max_size is None else max_size
        if not 1 <= max_size <= len(candidates):
            raise PreconditionError(f"subset size must be in [1, {len(candidates)}], got {max_size}")

        features = parallel_map(extract_features, contours)
        subsets = [s for size in range(1, max_size + 1) for s in combinations(candidates, size)]
        scores = parallel_map(partial(self._score_subset, contours, features, by_id[exemplar_id], truth), subsets)
        ranked = sorted(
            (s for s in scores if s is not None), key=lambda s: (-s.accuracy, len(s.features))
        )
        if ranked:
            logger.info(
                "✅ Scored %d feature subsets; best %s at %.3f accuracy",
                len(ranked), "+".join(ranked[0].features), ranked[0].accuracy,
            )
        return ranked

    def _score_subset(
        self,
        contours: Sequence[Contour],
        features: Sequence[FeatureVector],
        exemplar: Contour,
        truth: Dict[str, bool],
        subset: Tuple[str, ...],
    ) -> Optional[FeatureScore]:
        try:
            model = fit_cluster_model(features, self.k, self.seed, subset, n_init=self.n_init)
        except PreconditionError as e:
            logger.warning("⚠️ Skipping features %s: %s", "+".join(subset), e)
            return None
        model = select_roi_cluster(model, exemplar)
        correct = sum(classify_features(model, f).is_roi == truth[c.id] for c, f in zip(contours, features))
        return FeatureScore(features=subset, accuracy=correct / len(contours))

    def _roi_per_slice(self, contours: Sequence[Contour], results: Sequence[Classification]) -> List[Contour]:
        chosen: Dict[int, Tuple[float, Contour]] = {}
        for contour, result in zip(contours, results):
            if not result.is_roi:
                continue
            best = chosen.get(contour.slice_index)
            if best is None or result.distance < best[0]:
                chosen[contour.slice_index] = (result.distance, contour)
        return [chosen[s][1] for s in sorted(chosen)]

    def _fit_section(self, contour: Contour) -> SectionFit:
        xy = align_seam(contour.points)
        z = np.full((len(xy), 1), contour.slice_index * self.slice_spacing)
        fit = fit_points(np.hstack([xy, z]), self.degree, self.num_control, closed=True)
        fit.section_id = contour.id
        fit.slice_index = contour.slice_index
        return fit

    def reconstruct(self, contours: Sequence[Contour], exemplar_id: str) -> ReconstructionResult:
        model, results = self.classify(contours, exemplar_id)
        rows = [
            ClassificationRow(c.id, c.slice_index, r.is_roi, r.distance) for c, r in zip(contours, results)
        ]

        selected = self._roi_per_slice(contours, results)
        if len(selected) < self.degree_v + 1:
            raise PipelineInsufficiencyError(
                f"RoI contours found on {len(selected)} slices; lofting degree {self.degree_v} "
                f"needs at least {self.degree_v + 1}"
            )

        sections = parallel_map(self._fit_section, selected)
        worst = max(sections, key=lambda s: s.residual_rms)
        logger.info(
            "✅ Fitted %d sections with %d control points (worst residual %.3e on %s)",
            len(sections), self.num_control, worst.residual_rms, worst.section_id,
        )
        sections = make_sections_compatible(sections)
        surface = loft([s.curve for s in sections], self.degree_v)
        mesh = tessellate(surface, self.res_u, self.res_v)
        twist = twist_metric(sections)
        logger.info(
            "✅ Lofted a %dx%d control net; seam twist %.2f degrees",
            surface.control_net.shape[0], surface.control_net.shape[1], math.degrees(twist),
        )
        return ReconstructionResult(
            mesh=mesh, surface=surface, model=model, classifications=rows, sections=sections, twist=twist
        )
