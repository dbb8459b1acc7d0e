import json

import numpy as np
import pytest

from main import main
from utils.file_io import read_obj_vertices, read_points_csv


@pytest.fixture
def curve_file(tmp_path):
    path = tmp_path / "curve.json"
    spec = {
        "degree": 3,
        "knots": [0, 0, 0, 0, 1, 1, 1, 1],
        "control_points": [[0, 0, 0], [1, 2, 0], [3, 2, 0], [4, 0, 0]],
    }
    path.write_text(json.dumps(spec))
    return path


def stdout_floats(capsys):
    return [float(v) for v in capsys.readouterr().out.split()]


class TestEvalAndSample:
    def test_eval_at_start(self, curve_file, capsys):
        assert main(["eval", str(curve_file), "0"]) == 0
        assert stdout_floats(capsys) == [0.0, 0.0, 0.0]

    def test_eval_out_of_domain(self, curve_file):
        assert main(["eval", str(curve_file), "1.5"]) == 3

    def test_malformed_curve_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"degree": 3, "knots": [0, 1]')
        assert main(["eval", str(path), "0.5"]) == 2

    def test_mixed_dimension_control_points(self, tmp_path):
        path = tmp_path / "mixed.json"
        path.write_text(json.dumps({"degree": 1, "knots": [0, 0, 1, 1], "control_points": [[0, 0], [1, 0, 0]]}))
        assert main(["eval", str(path), "0.5"]) == 2

    def test_decreasing_knots(self, tmp_path):
        path = tmp_path / "decreasing.json"
        path.write_text(json.dumps({"degree": 1, "knots": [0, 0, 1, 0.5], "control_points": [[0, 0], [1, 0]]}))
        assert main(["eval", str(path), "0.5"]) == 2

    def test_bad_arguments(self, curve_file):
        assert main(["eval", str(curve_file), "not-a-number"]) == 2
        assert main(["explode"]) == 2

    def test_sample_rows_match_eval(self, curve_file, tmp_path, capsys):
        out = tmp_path / "s.csv"
        assert main(["sample", str(curve_file), "--count", "20", "--out", str(out)]) == 0
        points, ts = read_points_csv(out)
        assert len(points) == 20
        capsys.readouterr()
        for t, p in zip(ts[::5], points[::5]):
            main(["eval", str(curve_file), repr(float(t))])
            assert stdout_floats(capsys) == list(p)

    def test_sample_is_reproducible(self, curve_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["sample", str(curve_file), "--count", "37", "--out", str(a)])
        main(["sample", str(curve_file), "--count", "37", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestSubdivide:
    def test_closed_square_depth_three(self, tmp_path, capsys):
        polygon = tmp_path / "square.json"
        polygon.write_text(json.dumps({"points": [[0, 0], [1, 0], [1, 1], [0, 1]], "closed": True}))
        out = tmp_path / "refined.csv"
        assert main(["subdivide", str(polygon), "--depth", "3", "--report", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 33
        table = capsys.readouterr().out.splitlines()
        assert table[0] == "depth,max_distance"
        assert len(table) == 4

    def test_mixed_dimension_polygon(self, tmp_path):
        polygon = tmp_path / "mixed.json"
        polygon.write_text(json.dumps({"points": [[0, 0], [1, 0, 0], [1, 1]]}))
        assert main(["subdivide", str(polygon), "--out", str(tmp_path / "o.csv")]) == 2

    def test_too_few_points(self, tmp_path):
        polygon = tmp_path / "line.csv"
        polygon.write_text("x,y,z\n0,0,0\n1,0,0\n2,1,0\n")
        assert main(["subdivide", str(polygon), "--open", "--out", str(tmp_path / "o.csv")]) == 3


class TestFit:
    def test_round_trip_from_sampled_curve(self, curve_file, tmp_path, capsys):
        samples = tmp_path / "s.csv"
        main(["sample", str(curve_file), "--count", "20", "--out", str(samples)])
        fitted = tmp_path / "fit.json"
        capsys.readouterr()
        assert main(["fit", str(samples), "--degree", "3", "--num-control", "4", "--out", str(fitted)]) == 0
        residual = float(capsys.readouterr().err.split("residual_rms")[1].split()[0])
        assert residual <= 1e-10
        spec = json.loads(fitted.read_text())
        np.testing.assert_allclose(spec["control_points"], [[0, 0, 0], [1, 2, 0], [3, 2, 0], [4, 0, 0]], atol=1e-8)

    def test_fewer_points_than_control_points(self, tmp_path):
        points = tmp_path / "p.csv"
        points.write_text("x,y,z\n0,0,0\n1,1,0\n2,0,0\n")
        assert main(["fit", str(points), "--num-control", "5", "--out", str(tmp_path / "f.json")]) == 4

    def test_mixed_dimension_points(self, tmp_path):
        points = tmp_path / "mixed.json"
        points.write_text(json.dumps({"points": [[0, 0], [1, 1, 0], [2, 0], [3, 1], [4, 0]]}))
        assert main(["fit", str(points), "--num-control", "4", "--out", str(tmp_path / "f.json")]) == 2

    def test_constant_points(self, tmp_path):
        points = tmp_path / "p.json"
        points.write_text(json.dumps({"points": [[1, 2, 3]] * 10}))
        out = tmp_path / "f.json"
        assert main(["fit", str(points), "--num-control", "4", "--out", str(out)]) == 0
        np.testing.assert_allclose(json.loads(out.read_text())["control_points"], [[1, 2, 3]] * 4, atol=1e-12)


class TestPhantomAndReconstruct:
    def test_phantom_is_reproducible(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert main(["phantom", "cylinder", "--slices", "10", "--points", "64", "--seed", "9", "--out", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert len(json.loads(a.read_text())) == 10
        labels = json.loads((tmp_path / "a.labels.json").read_text())
        assert all(labels["roi"].values())

    def test_cylinder_reconstruction(self, tmp_path):
        contours = tmp_path / "cyl.json"
        main(["phantom", "cylinder", "--radius", "3", "--out", str(contours)])
        mesh = tmp_path / "cyl.obj"
        args = ["reconstruct", str(contours), "--k", "1", "--res-u", "32", "--res-v", "16", "--out", str(mesh)]
        assert main(args) == 0

        radii = np.linalg.norm(read_obj_vertices(mesh)[:, :2], axis=1)
        assert np.sqrt(np.mean((radii - 3.0) ** 2)) <= 1e-2 * 3.0
        assert (tmp_path / "cyl_classification.csv").read_text().startswith("id,slice,is_roi,distance\n")
        assert len((tmp_path / "cyl_fits.csv").read_text().splitlines()) == 11
        summary = json.loads((tmp_path / "cyl_summary.json").read_text())
        assert summary["roi_contours"] == 10
        assert summary["faces"] == 31 * 15

        first = mesh.read_bytes()
        assert main(args) == 0
        assert mesh.read_bytes() == first

    def test_feature_sweep_csv(self, tmp_path):
        contours = tmp_path / "lungs.json"
        main(["phantom", "lung-like+distractors", "--slices", "20", "--seed", "2", "--out", str(contours)])
        args = ["reconstruct", str(contours), "--res-u", "8", "--res-v", "8", "--out", str(tmp_path / "lungs.obj")]
        assert main(args + ["--sweep-features", "--sweep-max-size", "1"]) == 0
        lines = (tmp_path / "lungs_features.csv").read_text().splitlines()
        assert lines[0] == "features,accuracy"
        assert sorted(line.split(",")[0] for line in lines[1:]) == sorted(
            ["cx", "cy", "hu1", "hu2", "hu3", "hu4", "hu5", "hu6", "hu7"]
        )
        assert all(0.0 <= float(line.split(",")[1]) <= 1.0 for line in lines[1:])

    def test_feature_sweep_needs_sidecar(self, tmp_path):
        contours = tmp_path / "plain.json"
        main(["phantom", "cylinder", "--out", str(contours)])
        (tmp_path / "plain.labels.json").unlink()
        args = ["reconstruct", str(contours), "--roi-id", "cylinder-000", "--k", "1", "--sweep-features"]
        assert main(args + ["--out", str(tmp_path / "m.obj")]) == 3

    def test_reconstruct_needs_enough_slices(self, tmp_path):
        contours = tmp_path / "short.json"
        main(["phantom", "cylinder", "--slices", "3", "--out", str(contours)])
        assert main(["reconstruct", str(contours), "--k", "1", "--out", str(tmp_path / "m.obj")]) == 5

    def test_reconstruct_needs_exemplar(self, tmp_path):
        contours = tmp_path / "plain.json"
        contours.write_text(json.dumps([{"id": "a", "slice": 0, "points": [[0, 0], [1, 0], [0, 1]]}]))
        assert main(["reconstruct", str(contours), "--out", str(tmp_path / "m.obj")]) == 3


class TestRunConfig:
    @pytest.mark.parametrize(
        "argv",
        [
            ["sample", "c.json", "--count", "1", "--out", "s.csv"],
            ["fit", "p.csv", "--degree", "3", "--num-control", "2", "--out", "f.json"],
            ["subdivide", "p.json", "--depth", "-1", "--out", "o.csv"],
            ["reconstruct", "d.json", "--k", "0", "--out", "m.obj"],
        ],
    )
    def test_out_of_range_options(self, tmp_path, argv):
        argv = [str(tmp_path / a) if a.endswith((".json", ".csv", ".obj")) else a for a in argv]
        assert main(argv) == 3
