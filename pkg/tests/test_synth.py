import math

import numpy as np
import pytest

from eyescreen import (
    ParameterError,
    SynthEyeSpec,
    SynthRingSpec,
    load_manifest,
    locate_pupil,
    regenerate_from_manifest,
    synth_corpus,
    synth_eye,
    synth_ring,
)
from eyescreen.synth import CLASS_BACKGROUND, CLASS_IRIS, CLASS_PUPIL, CLASS_SCLERA


def test_synth_eye_deterministic():
    spec = SynthEyeSpec(noise_sigma=6.0, seed=123)
    a, _ = synth_eye(spec)
    b, _ = synth_eye(spec)
    assert np.array_equal(a, b)


def test_synth_eye_noiseless_locate_within_one_px():
    spec = SynthEyeSpec(cx=150.0, cy=170.0, pupil_radius=30.0, iris_radius=60.0, seed=0)
    img, truth = synth_eye(spec)
    est = locate_pupil(img)
    assert math.hypot(est.cx - truth.cx, est.cy - truth.cy) <= 1.0


def test_synth_eye_truth_mask_areas():
    spec = SynthEyeSpec(cx=160.0, cy=160.0, pupil_radius=28.0, iris_radius=56.0, seed=1)
    _, truth = synth_eye(spec)
    yy, xx = np.mgrid[0:spec.height, 0:spec.width]
    d = np.hypot(xx - spec.cx, yy - spec.cy)
    assert truth.pupil_area == int(np.count_nonzero(d <= spec.pupil_radius))
    assert set(np.unique(truth.labels)) == {CLASS_BACKGROUND, CLASS_SCLERA, CLASS_PUPIL, CLASS_IRIS}
    # rasterized boundary ring tolerance: area within the +-1 px annulus
    r = spec.pupil_radius
    assert abs(truth.pupil_area - math.pi * r * r) <= 2.0 * math.pi * r + 4


def test_synth_eye_validation():
    with pytest.raises(ParameterError):
        SynthEyeSpec(pupil_radius=50.0, iris_radius=40.0)
    with pytest.raises(ParameterError):
        SynthEyeSpec(levels={"pupil": -1.0, "iris": 100.0, "sclera": 200.0, "background": 50.0})


def test_synth_ring_truth_diameter_matches_forward_model():
    spec = SynthRingSpec(diopters=0.0, feature_scale=10.0, seed=2)
    _, truth = synth_ring(spec)
    assert truth.mean_diameter_px == pytest.approx(244.738, abs=1e-9)
    assert truth.feature_units == pytest.approx(24.4738, abs=1e-12)


def test_synth_ring_deterministic():
    spec = SynthRingSpec(diopters=-4.0, noise_sigma=8.0, seed=9, feature_scale=10.0)
    a, _ = synth_ring(spec)
    b, _ = synth_ring(spec)
    assert np.array_equal(a, b)


def test_synth_ring_elliptical_truth_mean_radius():
    spec = SynthRingSpec(diopters=-3.0, feature_scale=10.0, eccentricity=0.4,
                         rotation=0.7, seed=3)
    _, truth = synth_ring(spec)
    a, b = truth.geometry.a, truth.geometry.b
    t = np.linspace(0, 2 * np.pi, 100000, endpoint=False)
    mean_r = float((a * b / np.hypot(b * np.cos(t), a * np.sin(t))).mean())
    assert 2.0 * mean_r == pytest.approx(truth.mean_diameter_px, rel=1e-6)
    assert b / a == pytest.approx(math.sqrt(1 - 0.4 ** 2), rel=1e-9)


def test_synth_ring_must_fit_frame():
    with pytest.raises(ParameterError):
        SynthRingSpec(width=128, height=128, diopters=0.0, feature_scale=10.0)


def test_corpus_generation_and_regeneration(tmp_path):
    config = {"kind": "eye", "count": 4, "seed": 31, "noise_sigma": 5.0,
              "pupil_radius": [25.0, 40.0]}
    out1 = tmp_path / "one"
    summary = synth_corpus(config, out1)
    assert summary["count"] == 4
    records = load_manifest(out1 / "manifest.jsonl")
    assert len(records) == 4
    for rec in records:
        assert (out1 / rec["path"]).is_file()
        assert (out1 / rec["mask_path"]).is_file()
        assert 25.0 <= rec["truth"]["radius_px"] <= 40.0

    # regeneration from the manifest is byte-identical
    out2 = tmp_path / "two"
    regen = regenerate_from_manifest(out1 / "manifest.jsonl", out2)
    assert regen["manifest_sha256"] == summary["manifest_sha256"]
    for rec in records:
        assert (out1 / rec["path"]).read_bytes() == (out2 / rec["path"]).read_bytes()


def test_corpus_same_seed_identical(tmp_path):
    config = {"kind": "ring", "count": 3, "seed": 8, "noise_sigma": 8.0,
              "diopters": [-5.25, -4.75, 0.0], "feature_scale": 10.0}
    s1 = synth_corpus(config, tmp_path / "a")
    s2 = synth_corpus(config, tmp_path / "b")
    assert s1["manifest_sha256"] == s2["manifest_sha256"]
    for rec in load_manifest(tmp_path / "a" / "manifest.jsonl"):
        assert ((tmp_path / "a" / rec["path"]).read_bytes()
                == (tmp_path / "b" / rec["path"]).read_bytes())


def test_corpus_truth_is_exact_not_measured(tmp_path):
    config = {"kind": "ring", "count": 2, "seed": 4, "diopters": [-5.25, -1.0],
              "feature_scale": 10.0}
    synth_corpus(config, tmp_path / "c")
    for rec in load_manifest(tmp_path / "c" / "manifest.jsonl"):
        d = rec["truth"]["diopters"]
        assert rec["truth"]["feature"] == pytest.approx(0.1136 * d + 24.4738, abs=1e-12)
