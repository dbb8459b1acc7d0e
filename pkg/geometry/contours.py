"""
Contour descriptors and RoI classification.

Region moments of a closed polygon are integrated edge by edge with
Green's theorem, reduced to central moments and combined into the seven
Hu invariants. Centroid plus (log-mapped) Hu values form the feature
vectors that k-means clusters after z-score normalization.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config.settings import HU_LOG_EPSILON, KMEANS_MAX_ITER, KMEANS_N_INIT, KMEANS_TOL
from geometry.errors import DegenerateContourError, PreconditionError

logger = logging.getLogger(__name__)

FEATURE_NAMES = ("cx", "cy", "hu1", "hu2", "hu3", "hu4", "hu5", "hu6", "hu7")


@dataclass(eq=False)
class Contour:
    id: str
    slice_index: int
    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise PreconditionError(f"contour {self.id!r}: points must have shape (m, 2), got {pts.shape}")
        if len(pts) < 3:
            raise DegenerateContourError(f"contour {self.id!r}: needs at least 3 points, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise DegenerateContourError(f"contour {self.id!r}: coordinates must be finite")
        self.points = pts


@dataclass(frozen=True)
class ContourMoments:
    """Area, centroid and central moments mu_pq (p + q <= 3) of a polygon region."""

    area: float
    centroid: Tuple[float, float]
    central: Dict[Tuple[int, int], float]


def contour_moments(c: Contour) -> ContourMoments:
    """Region moments of the polygon interior via edge integrals.

    Raw moments are accumulated relative to the vertex mean, which keeps
    the central moments free of large-offset cancellation. Clockwise
    contours are flipped so the area is positive.
    """
    origin = c.points.mean(axis=0)
    x0, y0 = (c.points - origin).T
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    cross = x0 * y1 - x1 * y0

    m00 = cross.sum() / 2
    m10 = ((x0 + x1) * cross).sum() / 6
    m01 = ((y0 + y1) * cross).sum() / 6
    m20 = ((x0 * x0 + x0 * x1 + x1 * x1) * cross).sum() / 12
    m02 = ((y0 * y0 + y0 * y1 + y1 * y1) * cross).sum() / 12
    m11 = ((x0 * y1 + 2 * x0 * y0 + 2 * x1 * y1 + x1 * y0) * cross).sum() / 24
    m30 = ((x0**3 + x0 * x0 * x1 + x0 * x1 * x1 + x1**3) * cross).sum() / 20
    m03 = ((y0**3 + y0 * y0 * y1 + y0 * y1 * y1 + y1**3) * cross).sum() / 20
    m21 = ((x0 * x0 * (3 * y0 + y1) + 2 * x0 * x1 * (y0 + y1) + x1 * x1 * (y0 + 3 * y1)) * cross).sum() / 60
    m12 = ((y0 * y0 * (3 * x0 + x1) + 2 * y0 * y1 * (x0 + x1) + y1 * y1 * (x0 + 3 * x1)) * cross).sum() / 60

    scale = max(float(np.abs(c.points - origin).max()), 1e-300)
    if abs(m00) <= 1e-12 * scale * scale:
        raise DegenerateContourError(f"contour {c.id!r} encloses zero area")
    if m00 < 0:
        m00, m10, m01, m20, m02, m11, m30, m03, m21, m12 = (
            -m for m in (m00, m10, m01, m20, m02, m11, m30, m03, m21, m12)
        )

    xc, yc = m10 / m00, m01 / m00
    central = {
        (0, 0): m00,
        (1, 0): 0.0,
        (0, 1): 0.0,
        (2, 0): m20 - xc * m10,
        (0, 2): m02 - yc * m01,
        (1, 1): m11 - xc * m01,
        (3, 0): m30 - 3 * xc * m20 + 2 * xc * xc * m10,
        (0, 3): m03 - 3 * yc * m02 + 2 * yc * yc * m01,
        (2, 1): m21 - 2 * xc * m11 - yc * m20 + 2 * xc * xc * m01,
        (1, 2): m12 - 2 * yc * m11 - xc * m02 + 2 * yc * yc * m10,
    }
    centroid = (float(xc + origin[0]), float(yc + origin[1]))
    return ContourMoments(area=float(m00), centroid=centroid, central=central)


def hu_moments(moments: ContourMoments) -> np.ndarray:
    """The seven Hu invariants of normalized central moments."""
    mu = moments.central
    m00 = mu[(0, 0)]
    if not m00 > 0:
        raise DegenerateContourError("Hu moments need positive area")

    def eta(p, q):
        return mu[(p, q)] / m00 ** (1 + (p + q) / 2)

    n20, n02, n11 = eta(2, 0), eta(0, 2), eta(1, 1)
    n30, n03, n21, n12 = eta(3, 0), eta(0, 3), eta(2, 1), eta(1, 2)

    a = n30 + n12
    b = n21 + n03
    c = n30 - 3 * n12
    d = 3 * n21 - n03
    return np.array(
        [
            n20 + n02,
            (n20 - n02) ** 2 + 4 * n11**2,
            c**2 + d**2,
            a**2 + b**2,
            c * a * (a**2 - 3 * b**2) + d * b * (3 * a**2 - b**2),
            (n20 - n02) * (a**2 - b**2) + 4 * n11 * a * b,
            d * a * (a**2 - 3 * b**2) - c * b * (3 * a**2 - b**2),
        ]
    )


def log_map(values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.log10(np.abs(values) + HU_LOG_EPSILON)


@dataclass(frozen=True)
class FeatureVector:
    cx: float
    cy: float
    hu: Tuple[float, ...]

    def as_dict(self) -> Dict[str, float]:
        values = {"cx": self.cx, "cy": self.cy}
        values.update({f"hu{i + 1}": h for i, h in enumerate(self.hu)})
        return values

    def select(self, names: Sequence[str]) -> np.ndarray:
        values = self.as_dict()
        unknown = [n for n in names if n not in values]
        if unknown:
            raise PreconditionError(f"unknown features {unknown}; choose from {list(FEATURE_NAMES)}")
        return np.array([values[n] for n in names])


def extract_features(c: Contour) -> FeatureVector:
    moments = contour_moments(c)
    hu = log_map(hu_moments(moments))
    return FeatureVector(cx=moments.centroid[0], cy=moments.centroid[1], hu=tuple(float(h) for h in hu))


@dataclass(frozen=True)
class Normalization:
    """Per-dimension z-score parameters."""

    mean: Tuple[float, ...]
    std: Tuple[float, ...]

    @classmethod
    def fit(cls, features) -> "Normalization":
        X = np.atleast_2d(np.asarray(features, dtype=float))
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        tiny = 1e-12 * np.maximum(1.0, np.abs(mean))
        constant = np.flatnonzero(std <= tiny)
        if constant.size:
            raise PreconditionError(f"feature dimensions {constant.tolist()} are constant and cannot be normalized")
        return cls(tuple(mean.tolist()), tuple(std.tolist()))

    def normalize(self, features) -> np.ndarray:
        return (np.asarray(features, dtype=float) - np.asarray(self.mean)) / np.asarray(self.std)

    def denormalize(self, features) -> np.ndarray:
        return np.asarray(features, dtype=float) * np.asarray(self.std) + np.asarray(self.mean)


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray = field(repr=False)
    normalization: Optional[Normalization]
    feature_names: Tuple[str, ...] = ()
    roi_cluster: Optional[int] = None
    labels: np.ndarray = field(default=None, repr=False)
    inertia: float = 0.0
    inertia_history: Tuple[float, ...] = ()
    iterations: int = 0


class Classification(NamedTuple):
    is_roi: bool
    distance: float
    cluster: int


def _sq_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    chosen = [int(rng.integers(0, n))]
    closest = _sq_distances(X, X[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = next(i for i in range(n) if i not in chosen)
        chosen.append(idx)
        closest = np.minimum(closest, _sq_distances(X, X[[idx]])[:, 0])
    return X[chosen].copy()


def _lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float):
    history = []
    labels = np.zeros(len(X), dtype=int)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        dist = _sq_distances(X, centroids)
        labels = np.argmin(dist, axis=1)
        history.append(float(dist[np.arange(len(X)), labels].sum()))
        updated = centroids.copy()
        counts = np.bincount(labels, minlength=len(centroids))
        for j in range(len(centroids)):
            if counts[j]:
                updated[j] = X[labels == j].mean(axis=0)
        for j in np.flatnonzero(counts == 0):
            # re-seed empty clusters at the point farthest from its centroid
            own = _sq_distances(X, updated)[np.arange(len(X)), labels]
            far = int(np.argmax(own))
            updated[j] = X[far]
            labels[far] = j
        shift = float(np.max(np.linalg.norm(updated - centroids, axis=1)))
        centroids = updated
        if shift < tol:
            break
    dist = _sq_distances(X, centroids)
    labels = np.argmin(dist, axis=1)
    inertia = float(dist[np.arange(len(X)), labels].sum())
    history.append(inertia)
    return centroids, labels, inertia, history, iterations


def kmeans(
    features,
    k: int,
    seed: int,
    normalization: Optional[Normalization] = None,
    feature_names: Sequence[str] = (),
    n_init: int = KMEANS_N_INIT,
    max_iter: int = KMEANS_MAX_ITER,
    tol: float = KMEANS_TOL,
) -> ClusterModel:
    """Lloyd's algorithm from seeded k-means++ starts; the lowest-inertia run wins."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if k < 1:
        raise PreconditionError(f"k must be at least 1, got {k}")
    if k > len(X):
        raise PreconditionError(f"k={k} exceeds the number of feature vectors ({len(X)})")
    if len(X) > 1 and np.any(X.std(axis=0) == 0):
        raise PreconditionError("feature dimensions with zero variance cannot be clustered")

    rng = np.random.default_rng(seed)
    best = None
    for run in range(max(1, n_init)):
        start = _kmeans_plusplus(X, k, rng)
        result = _lloyd(X, start, max_iter, tol)
        logger.debug("k-means run %d: inertia %.6g after %d iterations", run, result[2], result[4])
        if best is None or result[2] < best[2]:
            best = result
    centroids, labels, inertia, history, iterations = best
    centroids.setflags(write=False)
    labels.setflags(write=False)
    return ClusterModel(
        k=k,
        centroids=centroids,
        normalization=normalization,
        feature_names=tuple(feature_names),
        labels=labels,
        inertia=inertia,
        inertia_history=tuple(history),
        iterations=iterations,
    )


def fit_cluster_model(
    features: Sequence[FeatureVector], k: int, seed: int, feature_names: Sequence[str], n_init: int = KMEANS_N_INIT
) -> ClusterModel:
    """Normalize the selected feature subset and cluster it."""
    X = np.array([f.select(feature_names) for f in features])
    normalization = Normalization.fit(X)
    return kmeans(normalization.normalize(X), k, seed, normalization, feature_names, n_init=n_init)


def _nearest(model: ClusterModel, vector: np.ndarray) -> Tuple[int, float]:
    distances = np.linalg.norm(model.centroids - vector, axis=1)
    cluster = int(np.argmin(distances))
    return cluster, float(distances[cluster])


def _normalized(model: ClusterModel, features: FeatureVector) -> np.ndarray:
    vector = features.select(model.feature_names)
    return model.normalization.normalize(vector) if model.normalization else vector


def select_roi_cluster(model: ClusterModel, exemplar: Contour) -> ClusterModel:
    """Model whose RoI cluster is the one nearest to a labeled exemplar contour."""
    cluster, _ = _nearest(model, _normalized(model, extract_features(exemplar)))
    return replace(model, roi_cluster=cluster)


def classify_features(model: ClusterModel, features: FeatureVector) -> Classification:
    """Nearest centroid by Euclidean distance; ties go to the lower cluster index."""
    if model.roi_cluster is None:
        raise PreconditionError("cluster model has no RoI cluster selected")
    cluster, distance = _nearest(model, _normalized(model, features))
    return Classification(is_roi=cluster == model.roi_cluster, distance=distance, cluster=cluster)


def classify_roi(model: ClusterModel, c: Contour) -> Classification:
    return classify_features(model, extract_features(c))
