import json

import numpy as np
import pytest
from click.testing import CliRunner

from eyescreen import DEFAULT_REFRACTION_MODEL, one_hot, save_png
from eyescreen.cli import main
from eyescreen.reports import validate


@pytest.fixture()
def runner():
    return CliRunner()


def make_eye_corpus(runner, tmp_path, count=3, seed=5, noise=8.0):
    config = tmp_path / "eye.json"
    config.write_text(json.dumps({
        "kind": "eye", "count": count, "seed": seed, "noise_sigma": noise}))
    out = tmp_path / "corpus"
    result = runner.invoke(main, ["synth", "--config", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def test_synth_and_locate_corpus(runner, tmp_path):
    corpus = make_eye_corpus(runner, tmp_path)
    out = tmp_path / "loc"
    result = runner.invoke(main, ["locate", "--corpus", str(corpus), "--out", str(out)])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "locate_summary.json").read_text())
    validate("locate_summary", summary)
    assert summary["n_failed"] == 0
    assert summary["ede"]["mean"] <= 2.8
    records = [json.loads(line) for line in (out / "locate_records.jsonl").read_text().splitlines()]
    assert len(records) == 3
    for rec in records:
        validate("pupil_record", rec)
        assert rec["ok"]


def test_locate_overlay_flag(runner, tmp_path):
    corpus = make_eye_corpus(runner, tmp_path, count=2)
    out = tmp_path / "loc"
    result = runner.invoke(main, ["locate", "--corpus", str(corpus),
                                  "--out", str(out), "--overlay"])
    assert result.exit_code == 0, result.output
    overlays = sorted((out / "overlays").glob("*.png"))
    assert len(overlays) == 2


def test_locate_missing_file_nonzero_exit(runner, tmp_path):
    out = tmp_path / "loc"
    result = runner.invoke(main, ["locate", str(tmp_path / "missing.png"), "--out", str(out)])
    assert result.exit_code != 0
    assert "missing.png" in result.output


def test_locate_flag_overrides_config_file(runner, tmp_path):
    corpus = make_eye_corpus(runner, tmp_path, count=1)
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"canny_high_quantile": 0.7}))
    out = tmp_path / "loc"
    result = runner.invoke(main, [
        "locate", "--corpus", str(corpus), "--out", str(out),
        "--config", str(cfg), "--canny-high-quantile", "0.97"])
    assert result.exit_code == 0, result.output
    summary = json.loads((out / "locate_summary.json").read_text())
    assert summary["config"]["high_quantile"] == 0.97


def test_ring_fit_calibration_and_measurement(runner, tmp_path):
    pairs = [[d, DEFAULT_REFRACTION_MODEL.forward(d)] for d in (-6.0, -5.0, -4.0, -3.0)]
    pairs_path = tmp_path / "pairs.json"
    pairs_path.write_text(json.dumps(pairs))
    out = tmp_path / "fit"
    result = runner.invoke(main, ["ring-fit", "--fit", str(pairs_path),
                                  "--out", str(out), "--feature-scale", "10"])
    assert result.exit_code == 0, result.output
    model = json.loads((out / "model.json").read_text())
    validate("refraction_model", model)
    assert abs(model["slope"] - 0.1136) <= 1e-9
    assert abs(model["intercept"] - 24.4738) <= 1e-9

    config = tmp_path / "ring.json"
    config.write_text(json.dumps({
        "kind": "ring", "count": 2, "seed": 3, "noise_sigma": 4.0,
        "diopters": [-4.75, -1.0], "feature_scale": 10.0}))
    corpus = tmp_path / "rings"
    assert runner.invoke(main, ["synth", "--config", str(config),
                                "--out", str(corpus)]).exit_code == 0
    meas = tmp_path / "meas"
    result = runner.invoke(main, ["ring-fit", "--corpus", str(corpus),
                                  "--model", str(out / "model.json"), "--out", str(meas)])
    assert result.exit_code == 0, result.output
    summary = json.loads((meas / "ring_summary.json").read_text())
    assert summary["n_failed"] == 0
    assert summary["diopter_abs_error"]["max"] <= 0.25
    for line in (meas / "ring_records.jsonl").read_text().splitlines():
        validate("ring_record", json.loads(line))


def test_ring_fit_requires_model_or_fit(runner, tmp_path):
    result = runner.invoke(main, ["ring-fit", "--out", str(tmp_path)])
    assert result.exit_code != 0
    assert "--model" in result.output or "--fit" in result.output


def test_losses_command_perfect_prediction(runner, tmp_path):
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 4, (8, 8))
    truth = one_hot(labels, 4)
    (tmp_path / "pred.json").write_text(json.dumps({"values": truth.tolist()}))
    (tmp_path / "mask.json").write_text(json.dumps({"labels": labels.tolist()}))
    out = tmp_path / "loss"
    result = runner.invoke(main, [
        "losses", "--pred", str(tmp_path / "pred.json"),
        "--truth", str(tmp_path / "mask.json"),
        "--epoch", "0", "--total-epochs", "150", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "loss_report.json").read_text())
    validate("loss_report", report)
    assert report["total"] <= 1e-5
    assert report["lambda"] == [1.0, 10.0, 1.0, 0.0]


def test_losses_gradcheck_passes(runner, tmp_path):
    rng = np.random.default_rng(1)
    labels = rng.integers(0, 4, (6, 6))
    pred = rng.uniform(0.1, 1.0, (6, 6, 4))
    pred /= pred.sum(axis=2, keepdims=True)
    (tmp_path / "pred.json").write_text(json.dumps({"values": pred.tolist()}))
    (tmp_path / "mask.json").write_text(json.dumps({"labels": labels.tolist()}))
    out = tmp_path / "loss"
    result = runner.invoke(main, [
        "losses", "--pred", str(tmp_path / "pred.json"),
        "--truth", str(tmp_path / "mask.json"), "--gradcheck", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "loss_report.json").read_text())
    assert report["gradcheck"]["pass"]
    assert report["gradcheck"]["max_rel_error"] <= 1e-4


def test_losses_shape_mismatch_hard_error(runner, tmp_path):
    (tmp_path / "pred.json").write_text(json.dumps(
        {"values": np.full((2, 2, 4), 0.25).tolist()}))
    (tmp_path / "mask.json").write_text(json.dumps({"labels": [[0, 1, 2]]}))
    result = runner.invoke(main, [
        "losses", "--pred", str(tmp_path / "pred.json"),
        "--truth", str(tmp_path / "mask.json"), "--out", str(tmp_path / "o")])
    assert result.exit_code != 0
    assert "mismatch" in result.output


def test_quality_constant_image(runner, tmp_path):
    save_png(np.full((16, 16), 70.0), tmp_path / "c.png")
    out = tmp_path / "q"
    result = runner.invoke(main, ["quality", str(tmp_path / "c.png"), "--out", str(out)])
    assert result.exit_code == 0, result.output
    rec = json.loads((out / "quality_records.jsonl").read_text().splitlines()[0])
    validate("quality_report", rec)
    assert rec["brightness"] == 70.0
    assert rec["rms_contrast"] == 0.0
    assert rec["snr_db"] == "undefined"
    csv_lines = (out / "quality_summary.csv").read_text().splitlines()
    assert csv_lines[0].startswith("path,brightness")
    assert len(csv_lines) == 2


def test_segeval_identical_masks(runner, tmp_path):
    labels = np.arange(16).reshape(4, 4) % 4
    (tmp_path / "m.json").write_text(json.dumps({"labels": labels.tolist()}))
    out = tmp_path / "s"
    result = runner.invoke(main, [
        "segeval", "--pred", str(tmp_path / "m.json"),
        "--truth", str(tmp_path / "m.json"), "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "segeval.json").read_text())
    validate("segeval_report", report)
    assert report["f1"] == 1.0 and report["miou"] == 1.0


def test_segeval_reads_png_masks(runner, tmp_path):
    corpus = make_eye_corpus(runner, tmp_path, count=1, noise=0.0)
    mask = next((corpus / "masks").glob("*.png"))
    out = tmp_path / "s"
    result = runner.invoke(main, [
        "segeval", "--pred", str(mask), "--truth", str(mask), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert json.loads((out / "segeval.json").read_text())["miou"] == 1.0


def test_synth_regeneration_byte_identical(runner, tmp_path):
    corpus = make_eye_corpus(runner, tmp_path, count=2, seed=77)
    out2 = tmp_path / "regen"
    result = runner.invoke(main, ["synth", "--from-manifest",
                                  str(corpus / "manifest.jsonl"), "--out", str(out2)])
    assert result.exit_code == 0, result.output
    for img in sorted((corpus / "images").glob("*.png")):
        assert img.read_bytes() == (out2 / "images" / img.name).read_bytes()


def test_synth_requires_exactly_one_source(runner, tmp_path):
    result = runner.invoke(main, ["synth", "--out", str(tmp_path / "x")])
    assert result.exit_code != 0


def test_locate_mm_per_px_and_preprocess_metadata(runner, tmp_path):
    corpus = make_eye_corpus(runner, tmp_path, count=1)
    out = tmp_path / "loc"
    result = runner.invoke(main, [
        "locate", "--corpus", str(corpus), "--out", str(out),
        "--mm-per-px", "0.1", "--gamma", "0.9", "--equalize"])
    assert result.exit_code == 0, result.output
    rec = json.loads((out / "locate_records.jsonl").read_text().splitlines()[0])
    assert rec["estimate"]["radius_mm"] == pytest.approx(
        0.1 * rec["estimate"]["radius_px"])
    summary = json.loads((out / "locate_summary.json").read_text())
    assert summary["config"]["preprocess"] == {"gamma": 0.9, "equalize": True}
    assert summary["config"]["mm_per_px"] == 0.1


def test_losses_export_sdm(runner, tmp_path):
    labels = np.zeros((8, 8), dtype=int)
    labels[2:6, 2:6] = 2
    pred = one_hot(labels, 4)
    (tmp_path / "pred.json").write_text(json.dumps({"values": pred.tolist()}))
    (tmp_path / "mask.json").write_text(json.dumps({"labels": labels.tolist()}))
    out = tmp_path / "loss"
    result = runner.invoke(main, [
        "losses", "--pred", str(tmp_path / "pred.json"),
        "--truth", str(tmp_path / "mask.json"), "--export-sdm", "--out", str(out)])
    assert result.exit_code == 0, result.output
    grids = sorted(out.glob("sdm_class*.npy"))
    assert [g.name for g in grids] == ["sdm_class0.npy", "sdm_class2.npy"]
    grid = np.load(grids[0])
    assert grid.dtype == np.float32 and grid.shape == (8, 8)
