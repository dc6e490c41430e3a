import json

import numpy as np
import pytest

from boxvel import io as bio
from boxvel.cli import main
from boxvel.exceptions import DataError
from boxvel.experiment import reference_prior
from boxvel.geometry import DEFAULT_CAMERA
from boxvel.synth import GenConfig, generate_dataset


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Camera, reference prior and a small labeled dataset on disk."""
    d = tmp_path_factory.mktemp("cli")
    cam = DEFAULT_CAMERA
    bio.save_camera(cam, d / "camera.json")
    reference_prior(cam).save(d / "ref_prior.json")
    samples, _ = generate_dataset(cam, reference_prior(cam), GenConfig(n_samples=120, seed=42))
    bio.write_tracks_jsonl(d / "annotations.jsonl", samples)
    return d


def run(*args):
    return main([str(a) for a in args])


class TestIo:
    def test_camera_round_trip(self, workdir):
        cam = bio.load_camera(workdir / "camera.json")
        assert cam == DEFAULT_CAMERA

    def test_tracks_round_trip(self, workdir):
        records = bio.read_tracks_jsonl(workdir / "annotations.jsonl")
        assert len(records) == 120
        sid, s = records[0]
        assert sid == "0"
        assert s.velocity is not None and s.distance > 0

    def test_malformed_line_cites_line_number(self, tmp_path, workdir):
        bad = tmp_path / "bad.jsonl"
        lines = (workdir / "annotations.jsonl").read_text().splitlines()
        lines[2] = "{not json"
        bad.write_text("\n".join(lines))
        with pytest.raises(DataError, match=":3:"):
            bio.read_tracks_jsonl(bad)

    def test_missing_file(self):
        with pytest.raises(DataError, match="no/such"):
            bio.read_tracks_jsonl("no/such/file.jsonl")


class TestPipeline:
    def test_full_pipeline(self, workdir, capsys):
        d = workdir
        assert run("fit-priors", d / "annotations.jsonl", d / "camera.json",
                   "-o", d / "priors.json") == 0
        assert run("generate", d / "priors.json", d / "camera.json",
                   "-o", d / "train.jsonl", "-n", 80, "--seed", 1,
                   "--noise-sigma-xy", 2, "--noise-sigma-wh", 1) == 0
        assert (d / "train.jsonl.manifest.json").exists()
        assert run("train", d / "train.jsonl", "-o", d / "model.json",
                   "--epochs", 3, "--seed", 0, "--smooth-sigma", 5) == 0
        assert (d / "model.json.loss.csv").read_text().startswith("epoch,loss")
        assert run("predict", d / "annotations.jsonl", d / "model.json",
                   "-o", d / "preds.jsonl") == 0
        assert run("baseline", d / "annotations.jsonl", d / "camera.json",
                   "-o", d / "base.jsonl") == 0
        assert run("eval", d / "preds.jsonl", d / "annotations.jsonl",
                   "-o", d / "report.json", "--csv", d / "report.csv") == 0
        report = json.loads((d / "report.json").read_text())
        assert set(report["per_bucket"]) == {"near", "medium", "far"}
        # noiseless tracks: the geometric baseline is near-exact
        capsys.readouterr()
        assert run("eval", d / "base.jsonl", d / "annotations.jsonl") == 0
        out = capsys.readouterr().out
        assert "overall" in out

    def test_baseline_near_exact_on_clean_tracks(self, workdir):
        d = workdir
        run("baseline", d / "annotations.jsonl", d / "camera.json", "-o", d / "b2.jsonl")
        preds = bio.read_preds_jsonl(d / "b2.jsonl")
        for sid, s in bio.read_tracks_jsonl(d / "annotations.jsonl"):
            assert preds[sid].Vx == pytest.approx(s.velocity.Vx, abs=1e-6)
            assert preds[sid].Vz == pytest.approx(s.velocity.Vz, abs=1e-6)

    def test_generate_deterministic(self, workdir, tmp_path):
        d = workdir
        out1, out2 = tmp_path / "g1.jsonl", tmp_path / "g2.jsonl"
        for out in (out1, out2):
            assert run("generate", d / "ref_prior.json", d / "camera.json",
                       "-o", out, "-n", 40, "--seed", 7) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_export_stats(self, workdir, tmp_path):
        d = workdir
        prefix = tmp_path / "stats"
        assert run("export-stats", d / "annotations.jsonl", d / "camera.json",
                   "-o", prefix) == 0
        boxes = (tmp_path / "stats_boxes.csv").read_text().splitlines()
        assert boxes[0] == "id,frame,x,y,w,h,Z"
        assert len(boxes) == 1 + 120 * 40
        vels = (tmp_path / "stats_velocities.csv").read_text().splitlines()
        assert vels[0] == "id,Vx,Vz,distance"
        assert len(vels) == 1 + 120

    def test_export_stats_empty_dataset(self, workdir, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert run("export-stats", empty, workdir / "camera.json",
                   "-o", tmp_path / "e") == 0
        assert (tmp_path / "e_boxes.csv").read_text().strip() == "id,frame,x,y,w,h,Z"


class TestErrorPaths:
    def test_missing_file_exit_2_names_path(self, workdir, capsys):
        code = run("fit-priors", workdir / "nope.jsonl", workdir / "camera.json",
                   "-o", workdir / "x.json")
        assert code == 2
        assert "nope.jsonl" in capsys.readouterr().err

    def test_malformed_line_exit_2_cites_line(self, workdir, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        lines = (workdir / "annotations.jsonl").read_text().splitlines()[:10]
        lines[4] = '{"id": "x"}'
        bad.write_text("\n".join(lines))
        code = run("fit-priors", bad, workdir / "camera.json", "-o", tmp_path / "p.json")
        assert code == 2
        assert ":5:" in capsys.readouterr().err

    def test_generate_n_zero_usage_error(self, workdir, tmp_path):
        code = run("generate", workdir / "ref_prior.json", workdir / "camera.json",
                   "-o", tmp_path / "x.jsonl", "-n", 0, "--seed", 1)
        assert code == 1

    def test_unknown_subcommand_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run("frobnicate")
        assert exc.value.code == 1

    def test_numeric_failure_exit_3(self, workdir, tmp_path):
        code = run("train", workdir / "annotations.jsonl", "-o", tmp_path / "m.json",
                   "--epochs", 3, "--seed", 0, "--optimizer", "sgd", "--lr", "1e18")
        assert code == 3

    def test_predict_skips_bad_records(self, workdir, tmp_path, capsys):
        d = workdir
        run("train", d / "train.jsonl", "-o", tmp_path / "m.json",
            "--epochs", 1, "--seed", 0)
        bad = tmp_path / "mixed.jsonl"
        lines = (d / "annotations.jsonl").read_text().splitlines()[:5]
        lines.insert(2, '{"id": "broken", "fps": 20}')
        bad.write_text("\n".join(lines))
        code = run("predict", bad, tmp_path / "m.json", "-o", tmp_path / "p.jsonl")
        assert code == 0
        preds = bio.read_preds_jsonl(tmp_path / "p.jsonl")
        assert len(preds) == 5
        assert "failures" in capsys.readouterr().out

    @pytest.mark.parametrize("sub", ["fit-priors", "generate", "train", "predict",
                                     "baseline", "eval", "export-stats"])
    def test_help_available(self, sub, capsys):
        with pytest.raises(SystemExit) as exc:
            run(sub, "--help")
        assert exc.value.code == 0
        assert "usage" in capsys.readouterr().out
