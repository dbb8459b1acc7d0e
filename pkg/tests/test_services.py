import numpy as np
import pytest

from geometry.errors import PipelineInsufficiencyError, PreconditionError
from services.phantom_service import PhantomService
from services.reconstruction_service import ReconstructionService, contours_from_dataset


@pytest.fixture(scope="module")
def lung_phantom():
    return PhantomService(slices=50, points=64, seed=5).generate("lung-like+distractors")


class TestPhantomService:
    def test_cylinder_construction(self):
        dataset, labels = PhantomService(slices=10, points=64).generate("cylinder")
        assert len(dataset.root) == 10
        assert all(len(r.points) == 64 for r in dataset.root)
        assert all(labels.roi.values())
        assert labels.exemplar_id in labels.roi

    def test_same_seed_same_dataset(self):
        a, _ = PhantomService(seed=3).generate("ellipsoid-stack")
        b, _ = PhantomService(seed=3).generate("ellipsoid-stack")
        c, _ = PhantomService(seed=4).generate("ellipsoid-stack")
        assert a.model_dump_json() == b.model_dump_json()
        assert a.model_dump_json() != c.model_dump_json()

    def test_lung_families(self, lung_phantom):
        dataset, labels = lung_phantom
        assert len(dataset.root) == 200
        assert set(labels.family.values()) == {"right-lung", "left-lung", "aorta", "spine"}
        assert sum(labels.roi.values()) == 50
        assert labels.family[labels.exemplar_id] == "right-lung"

    @pytest.mark.parametrize(
        "kwargs", [{"slices": 0}, {"points": 2}, {"radius": -1.0}, {"noise": -0.1}]
    )
    def test_bad_parameters(self, kwargs):
        with pytest.raises(PreconditionError):
            PhantomService(**kwargs)

    def test_unknown_kind(self):
        with pytest.raises(PreconditionError):
            PhantomService().generate("torus")


class TestReconstructionService:
    def test_cylinder_surface_within_tolerance(self):
        radius = 2.0
        dataset, labels = PhantomService(slices=10, points=64, radius=radius).generate("cylinder")
        service = ReconstructionService(k=1, slice_spacing=1.0, res_u=48, res_v=24)
        result = service.reconstruct(contours_from_dataset(dataset), labels.exemplar_id)

        radii = np.linalg.norm(result.mesh.vertices[:, :2], axis=1)
        assert np.sqrt(np.mean((radii - radius) ** 2)) <= 1e-2 * radius
        assert result.mesh.vertices[:, 2].min() == pytest.approx(0.0, abs=1e-6)
        assert result.mesh.vertices[:, 2].max() == pytest.approx(9.0, abs=1e-6)
        assert result.roi_slices == list(range(10))
        assert len(result.fit_rows) == 10
        assert all(n == 16 for _, n, _ in result.fit_rows)

    def test_classification_accuracy_on_lung_phantom(self, lung_phantom):
        dataset, labels = lung_phantom
        contours = contours_from_dataset(dataset)
        _, results = ReconstructionService(k=4, seed=0).classify(contours, labels.exemplar_id)
        correct = sum(r.is_roi == labels.roi[c.id] for c, r in zip(contours, results))
        assert correct / len(contours) >= 0.95

    def test_feature_sweep_scores_every_subset(self, lung_phantom):
        dataset, labels = lung_phantom
        contours = contours_from_dataset(dataset)
        scores = ReconstructionService(k=4, seed=0).sweep_features(
            contours, labels.exemplar_id, labels.roi, candidates=("cx", "cy", "hu1", "hu2")
        )
        assert len(scores) == 15
        accuracies = [s.accuracy for s in scores]
        assert accuracies == sorted(accuracies, reverse=True)
        by_subset = {s.features: s.accuracy for s in scores}
        assert by_subset[("cx", "cy", "hu2")] >= 0.95

    def test_feature_sweep_needs_labels_for_every_contour(self, lung_phantom):
        dataset, labels = lung_phantom
        contours = contours_from_dataset(dataset)
        partial_truth = dict(list(labels.roi.items())[:10])
        with pytest.raises(PreconditionError, match="ground-truth"):
            ReconstructionService(k=4).sweep_features(contours, labels.exemplar_id, partial_truth)

    def test_feature_sweep_rejects_unknown_features(self, lung_phantom):
        dataset, labels = lung_phantom
        with pytest.raises(PreconditionError, match="hu9"):
            ReconstructionService(k=4).sweep_features(
                contours_from_dataset(dataset), labels.exemplar_id, labels.roi, candidates=("cx", "hu9")
            )

    def test_lung_reconstruction_uses_roi_slices(self, lung_phantom):
        dataset, labels = lung_phantom
        result = ReconstructionService(k=4, seed=0, res_u=16, res_v=16).reconstruct(
            contours_from_dataset(dataset), labels.exemplar_id
        )
        assert all(s.section_id.startswith("right-lung") for s in result.sections)
        assert result.mesh.vertices[:, 0].max() < 0.0

    def test_reconstruction_is_deterministic(self):
        dataset, labels = PhantomService(slices=8).generate("ellipsoid-stack")
        service = ReconstructionService(k=1, res_u=12, res_v=12)
        a = service.reconstruct(contours_from_dataset(dataset), labels.exemplar_id)
        b = service.reconstruct(contours_from_dataset(dataset), labels.exemplar_id)
        np.testing.assert_array_equal(a.mesh.vertices, b.mesh.vertices)

    def test_too_few_roi_slices(self):
        dataset, labels = PhantomService(slices=3).generate("cylinder")
        with pytest.raises(PipelineInsufficiencyError):
            ReconstructionService(k=1).reconstruct(contours_from_dataset(dataset), labels.exemplar_id)

    def test_unknown_exemplar(self):
        dataset, _ = PhantomService(slices=5).generate("cylinder")
        with pytest.raises(PreconditionError, match="exemplar"):
            ReconstructionService(k=1).reconstruct(contours_from_dataset(dataset), "missing")
