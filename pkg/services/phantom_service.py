# services/phantom_service.py
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from config.settings import DEFAULT_SEED
from geometry.errors import PreconditionError
from utils.schemas import ContourDataset, ContourRecord, LabelSet

logger = logging.getLogger(__name__)

PHANTOM_KINDS = ("cylinder", "ellipsoid-stack", "lung-like+distractors")


@dataclass(frozen=True)
class _Family:
    name: str
    center: Tuple[float, float]
    axes: Tuple[float, float]
    roi: bool
    tapered: bool = False


# Axial layout in units of the phantom radius.
_LUNG_FAMILIES = (
    _Family("right-lung", (-2.0, 0.0), (1.0, 1.6), roi=True, tapered=True),
    _Family("left-lung", (2.0, 0.0), (0.9, 1.5), roi=False, tapered=True),
    _Family("aorta", (0.5, -0.8), (0.32, 0.27), roi=False),
    _Family("spine", (0.0, -2.4), (0.55, 0.4), roi=False),
)


class PhantomService:
    """
    Builds synthetic contour datasets with known ground truth, standing in
    for segmented CT slices.
    """

    def __init__(
        self,
        slices: int = 10,
        points: int = 64,
        radius: float = 1.0,
        noise: float = 1e-3,
        seed: int = DEFAULT_SEED,
    ):
        if slices < 1:
            raise PreconditionError(f"slices must be at least 1, got {slices}")
        if points < 3:
            raise PreconditionError(f"contours need at least 3 points, got {points}")
        if not radius > 0 or not math.isfinite(radius):
            raise PreconditionError(f"radius must be a positive number, got {radius}")
        if noise < 0 or not math.isfinite(noise):
            raise PreconditionError(f"noise must be non-negative, got {noise}")
        self.slices = slices
        self.points = points
        self.radius = radius
        self.noise = noise
        self.seed = seed
        self._builders: Dict[str, Callable[[np.random.Generator], List[Tuple[ContourRecord, str, bool]]]] = {
            "cylinder": self._cylinder,
            "ellipsoid-stack": self._ellipsoid_stack,
            "lung-like+distractors": self._lung_like,
        }

    def generate(self, kind: str) -> Tuple[ContourDataset, LabelSet]:
        """Contours of the requested kind plus their labels; identical for identical settings."""
        if kind not in self._builders:
            raise PreconditionError(f"unknown phantom kind {kind!r}; choose from {', '.join(PHANTOM_KINDS)}")
        rng = np.random.default_rng(self.seed)
        entries = self._builders[kind](rng)
        dataset = ContourDataset([record for record, _, _ in entries])
        exemplar = next(record for record, _, roi in entries if roi and record.slice_index == self.slices // 2)
        labels = LabelSet(
            kind=kind,
            exemplar_id=exemplar.id,
            roi={record.id: roi for record, _, roi in entries},
            family={record.id: family for record, family, _ in entries},
        )
        logger.info("✅ Generated %s phantom: %d contours over %d slices", kind, len(entries), self.slices)
        return dataset, labels

    def _ellipse(
        self, rng: np.random.Generator, center: Tuple[float, float], axes: Tuple[float, float]
    ) -> List[List[float]]:
        phase = rng.uniform(0.0, 2.0 * math.pi)
        angles = phase + 2.0 * math.pi * np.arange(self.points) / self.points
        xy = np.column_stack([center[0] + axes[0] * np.cos(angles), center[1] + axes[1] * np.sin(angles)])
        if self.noise > 0:
            xy = xy + rng.normal(0.0, self.noise * self.radius, size=xy.shape)
        return xy.tolist()

    def _cylinder(self, rng):
        r = self.radius
        return [
            (ContourRecord(id=f"cylinder-{s:03d}", slice=s, points=self._ellipse(rng, (0.0, 0.0), (r, r))), "cylinder", True)
            for s in range(self.slices)
        ]

    def _ellipsoid_stack(self, rng):
        entries = []
        for s in range(self.slices):
            # poles are cut off so the smallest section keeps 40% of the radius
            z = (s + 0.5) / self.slices * 2.0 - 1.0
            scale = max(math.sqrt(1.0 - z * z), 0.4) * self.radius
            points = self._ellipse(rng, (0.0, 0.0), (1.2 * scale, scale))
            entries.append((ContourRecord(id=f"ellipsoid-{s:03d}", slice=s, points=points), "ellipsoid", True))
        return entries

    def _lung_like(self, rng):
        r = self.radius
        entries = []
        for s in range(self.slices):
            taper = 0.6 + 0.4 * math.sin(math.pi * (s + 0.5) / self.slices)
            drift = 0.05 * math.sin(2.0 * math.pi * s / max(self.slices, 1))
            for family in _LUNG_FAMILIES:
                scale = taper if family.tapered else 1.0
                center = ((family.center[0] + drift) * r, family.center[1] * r)
                axes = (family.axes[0] * scale * r, family.axes[1] * scale * r)
                record = ContourRecord(id=f"{family.name}-{s:03d}", slice=s, points=self._ellipse(rng, center, axes))
                entries.append((record, family.name, family.roi))
        return entries
