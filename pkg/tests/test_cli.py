import json
import shutil

import numpy as np
import pytest

from gaitindex.autoencoder import load_model
from gaitindex.cli import main
from gaitindex.config import CONFIG_ENV, load_config
from gaitindex.gait_index import read_scores
from gaitindex.pipeline import read_exported_weights

TINY = {
    "seed": 3,
    "synth": {"subjects": 3, "train_subjects": 2, "frames": 60},
    "train": {"epochs": 2, "hidden_dim": 6, "batch_size": 8},
    "jobs": 1,
}


def write_config(tmp_path, **extra):
    cfg = json.loads(json.dumps(TINY))
    cfg["paths"] = {k: str(tmp_path / v) for k, v in
                    (("dataset_dir", "data"), ("model_dir", "models"), ("output_dir", "out"))}
    for k, v in extra.items():
        cfg[k] = v
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path


def run_all(cfg_path):
    for cmd in ("synth", "train", "score", "eval", "export-weights"):
        assert main([cmd, "-c", str(cfg_path)]) == 0, cmd


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny")
    path = write_config(root)
    run_all(path)
    return root, path


def test_pipeline_layout(tiny_run):
    root, _ = tiny_run
    for variant in ("plain", "dropout"):
        for a in "XYZ":
            assert (root / "models" / variant / f"model_{a}.json").exists()
            assert len((root / "models" / variant / f"loss_{a}.csv").read_text().splitlines()) == 3
        assert (root / "out" / "scores" / variant / "segments.csv").exists()
    report = json.loads((root / "out" / "report.json").read_text())
    seg = [r["index"] for r in report["rows"] if r["granularity"] == "per-segment"]
    seq = [r["index"] for r in report["rows"] if r["granularity"] == "per-sequence"]
    assert seg == ["x-axis", "y-axis", "z-axis", "non-weighted", "weighted", "weighted+dropout"]
    assert seq == ["non-weighted", "weighted", "weighted+dropout"]
    assert report["operating_point"] == "eer_threshold"


def test_scores_cover_test_split(tiny_run):
    root, _ = tiny_run
    seqs = read_scores(root / "out" / "scores" / "plain" / "sequences.csv")
    assert len(seqs["sequence_id"]) == 9  # one held-out subject, 9 conditions
    segs = read_scores(root / "out" / "scores" / "plain" / "segments.csv")
    assert len(segs["sequence_id"]) == 9 * 5  # 60 frames / T=12


def test_export_weights(tiny_run):
    root, _ = tiny_run
    path = root / "out" / "weights" / "plain_X.csv"
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["gate", "unit", "w0"] and len(lines[0].split(",")) == 2 + 17
    assert len(lines) == 1 + 4 * 6
    back = read_exported_weights(path)
    model = load_model(root / "models" / "plain" / "model_X.json")
    for name, arr in back.items():
        assert np.array_equal(arr, model.encoder.arrays()[name])


def test_init_bounds(tiny_run, tmp_path):
    root, path = tiny_run
    cfg = write_config(tmp_path, train={"epochs": 1, "hidden_dim": 6, "learning_rate": 1e-300})
    # a vanishing learning rate leaves the initial weights in place
    assert main(["synth", "-c", str(cfg)]) == 0
    assert main(["train", "-c", str(cfg), "--set", "dropout_variant_keep=null"]) == 0
    m = load_model(tmp_path / "models" / "plain" / "model_Y.json")
    bound = 1 / np.sqrt(6)
    assert np.abs(m.encoder.Wx).max() <= bound and np.abs(m.decoder.Wh).max() <= bound
    assert np.allclose(m.encoder.arrays()["b_f"], 1.0) and np.allclose(m.encoder.peep, 0.0)


def test_rerun_is_byte_identical(tiny_run, tmp_path):
    root, _ = tiny_run
    run_all(write_config(tmp_path))
    for rel in ("models/plain/model_Z.json", "models/dropout/fusion.json",
                "out/scores/dropout/segments.csv", "out/report.json"):
        assert (root / rel).read_bytes() == (tmp_path / rel).read_bytes(), rel


def test_eval_prints_table(tiny_run, capsys):
    _, path = tiny_run
    assert main(["eval", "-c", str(path), "--roc-points"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("# positive class: abnormal")
    assert len(out) == 2 + 9


def test_fixed_threshold(tiny_run, capsys):
    root, path = tiny_run
    assert main(["eval", "-c", str(path), "--threshold", "1e9"]) == 0
    report = json.loads((root / "out" / "report.json").read_text())
    assert report["operating_point"] == "fixed"
    assert all(r["sensitivity"] == 0 for r in report["rows"])
    assert main(["eval", "-c", str(path)]) == 0  # restore the default report


def test_include_train(tmp_path):
    cfg = write_config(tmp_path, dropout_variant_keep=None)
    for cmd in ("synth", "train"):
        assert main([cmd, "-c", str(cfg)]) == 0
    assert main(["score", "-c", str(cfg), "--include-train"]) == 0
    seqs = read_scores(tmp_path / "out" / "scores" / "plain" / "sequences.csv")
    assert len(seqs["sequence_id"]) == 9 + 2 * 9
    assert not (tmp_path / "out" / "scores" / "dropout").exists()


def test_segments_per_long_sequence(tmp_path):
    cfg = write_config(tmp_path, dropout_variant_keep=None,
                       synth={"subjects": 2, "train_subjects": 1, "frames": 1200, "styles": {}})
    for cmd in ("synth", "train"):
        assert main([cmd, "-c", str(cfg), "--set", "train.epochs=1"]) == 0
    assert main(["score", "-c", str(cfg)]) == 0
    segs = read_scores(tmp_path / "out" / "scores" / "plain" / "segments.csv")
    assert len(segs["sequence_id"]) == 100


def test_frames_shorter_than_window(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["synth", "-c", str(cfg), "--set", "synth.frames=11"]) == 1
    err = capsys.readouterr().err
    assert "synth" in err and "T=12" in err


def test_missing_models(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["synth", "-c", str(cfg)]) == 0
    assert main(["score", "-c", str(cfg)]) == 1
    assert "score" in capsys.readouterr().err
    assert main(["export-weights", "-c", str(cfg)]) == 1


def test_partial_model_set(tiny_run, tmp_path, capsys):
    root, _ = tiny_run
    shutil.copytree(root / "models", tmp_path / "models")
    (tmp_path / "models" / "plain" / "model_Y.json").unlink()
    cfg = write_config(tmp_path)
    shutil.copytree(root / "data", tmp_path / "data")
    assert main(["score", "-c", str(cfg)]) == 1
    assert "model_Y.json" in capsys.readouterr().err


def test_empty_score_file(tiny_run, tmp_path, capsys):
    root, _ = tiny_run
    shutil.copytree(root / "models", tmp_path / "models")
    sdir = tmp_path / "out" / "scores" / "plain"
    sdir.mkdir(parents=True)
    header = (root / "out" / "scores" / "plain" / "segments.csv").read_text().splitlines()[0]
    (sdir / "segments.csv").write_text(header + "\n")
    cfg = write_config(tmp_path, dropout_variant_keep=None)
    shutil.rmtree(tmp_path / "models" / "dropout")
    assert main(["eval", "-c", str(cfg)]) == 1
    assert "no scores" in capsys.readouterr().err


def test_no_normal_training_data(tmp_path, capsys):
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "a.csv").write_text(",".join(["0"] * 75) + "\n")
    (tmp_path / "data" / "manifest.json").write_text(json.dumps({"sequences": [
        {"path": "a.csv", "subject": "s1", "label": "abnormal", "split": "train"}]}))
    cfg = write_config(tmp_path)
    assert main(["train", "-c", str(cfg)]) == 1
    assert "empty training set" in capsys.readouterr().err


def test_config_errors(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["show-config", "-c", str(cfg), "--set", "train.epoch=3"]) == 2
    assert "unknown config key(s) in train: epoch" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"trian": {}}))
    assert main(["show-config", "-c", str(bad)]) == 2
    assert "trian" in capsys.readouterr().err
    assert main(["show-config", "-c", str(tmp_path / "missing.json")]) == 2


def test_flags_override_file_and_env(tmp_path, monkeypatch, capsys):
    cfg = write_config(tmp_path)
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    assert load_config().synth.frames == 60
    assert main(["show-config", "--seed", "9", "--set", "train.epochs=7"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["seed"] == 9 and shown["train"]["epochs"] == 7 and shown["synth"]["frames"] == 60


def test_defaults():
    cfg = load_config(None, [])
    assert (cfg.window.T, cfg.window.stride) == (12, 6)
    assert cfg.train.hidden_dim == 256 and cfg.train.epochs == 100 and cfg.train.batch_size == 32
    assert cfg.train.learning_rate == 1e-3
