import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from eyescreen import (
    DEFAULT_REFRACTION_MODEL,
    InsufficientSignalError,
    ModelError,
    ParameterError,
    RaySample,
    RefractionModel,
    RegionNotFoundError,
    RingGeometry,
    SynthRingSpec,
    fit_ellipse,
    fit_refraction_model,
    load_model,
    measure_refraction,
    moments_centroid,
    otsu_threshold,
    radial_scan,
    refraction_from_feature,
    ring_feature,
    save_model,
    synth_ring,
)

FWHM_SIGMA3 = 2.0 * 3.0 * math.sqrt(2.0 * math.log(2.0))  # ~7.0645


def ring_image(radius=100.0, size=320, cross_sigma=3.0, peak=220.0,
               background=0.0, brightness_factor=None):
    yy, xx = np.mgrid[0:size, 0:size]
    cx = cy = (size - 1) / 2.0
    r = np.hypot(xx - cx, yy - cy)
    img = background + (peak - background) * np.exp(
        -((r - radius) ** 2) / (2.0 * cross_sigma ** 2))
    if brightness_factor is not None:
        phi = np.arctan2(yy - cy, xx - cx)
        img = img * np.where(np.cos(phi) < 0, brightness_factor, 1.0)
    return np.clip(img, 0.0, 255.0), (cx, cy)


def ellipse_points(a, b, rot=0.0, cx=0.0, cy=0.0, n=360):
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.column_stack([
        cx + a * np.cos(t) * np.cos(rot) - b * np.sin(t) * np.sin(rot),
        cy + a * np.cos(t) * np.sin(rot) + b * np.sin(t) * np.cos(rot),
    ])


# --- centroid seed ------------------------------------------------------------

def test_moments_centroid_single_pixel():
    img = np.zeros((32, 32))
    img[20, 10] = 200.0
    assert moments_centroid(img, 50.0) == (10.0, 20.0)


def test_moments_centroid_symmetric_ring():
    img, (cx, cy) = ring_image(radius=40.0, size=128)
    mx, my = moments_centroid(img, otsu_threshold(img))
    assert math.hypot(mx - cx, my - cy) < 0.1


def test_moments_centroid_two_pixel_midpoint():
    img = np.zeros((8, 16))
    img[0, 0] = img[0, 10] = 100.0
    assert moments_centroid(img, 10.0) == (5.0, 0.0)


def test_moments_centroid_no_foreground():
    with pytest.raises(RegionNotFoundError):
        moments_centroid(np.zeros((8, 8)), 10.0)


# --- radial scan ---------------------------------------------------------------

def test_radial_scan_ideal_ring():
    img, (cx, cy) = ring_image()
    samples = radial_scan(img, (cx, cy))
    assert len(samples) == 360
    radii = [math.hypot(s.peak_point[0] - cx, s.peak_point[1] - cy) for s in samples]
    assert max(abs(r - 100.0) for r in radii) <= 0.5
    widths = np.array([s.width for s in samples])
    assert np.abs(widths - FWHM_SIGMA3).max() <= 0.1 * FWHM_SIGMA3


def test_radial_scan_uniform_image_insufficient():
    with pytest.raises(InsufficientSignalError) as err:
        radial_scan(np.full((64, 64), 120.0), (31.5, 31.5))
    assert err.value.stage == "radial_scan"


def test_radial_scan_angular_brightness_variation():
    # one side at half brightness: per-ray adaptive threshold keeps widths
    img, (cx, cy) = ring_image(brightness_factor=0.5)
    samples = radial_scan(img, (cx, cy))
    assert len(samples) == 360
    widths = np.array([s.width for s in samples])
    assert np.abs(widths - FWHM_SIGMA3).max() <= 0.1 * FWHM_SIGMA3


def test_radial_scan_validates_inputs():
    img, _ = ring_image(size=64, radius=20.0)
    with pytest.raises(ParameterError):
        radial_scan(img, (31.5, 31.5), n_rays=4)
    with pytest.raises(ParameterError):
        radial_scan(img, (-5.0, 10.0))


# --- ellipse fitting -------------------------------------------------------------

def test_fit_circle_exact():
    geom = fit_ellipse(ellipse_points(10.0, 10.0))
    assert geom.a == pytest.approx(10.0, abs=1e-6)
    assert geom.b == pytest.approx(10.0, abs=1e-6)
    assert geom.cx == pytest.approx(0.0, abs=1e-6)
    assert geom.cy == pytest.approx(0.0, abs=1e-6)
    assert geom.rotation == 0.0  # coincident foci: rotation by convention


def test_fit_axis_aligned_ellipse_exact():
    geom = fit_ellipse(ellipse_points(20.0, 10.0))
    assert geom.a == pytest.approx(20.0, abs=1e-6)
    assert geom.b == pytest.approx(10.0, abs=1e-6)
    assert geom.cx == pytest.approx(0.0, abs=1e-6)
    assert geom.cy == pytest.approx(0.0, abs=1e-6)
    assert geom.rotation == pytest.approx(0.0, abs=1e-6)
    assert geom.fit_residual <= 1e-8


def test_fit_rotated_ellipse_exact():
    geom = fit_ellipse(ellipse_points(20.0, 10.0, rot=0.6, cx=5.0, cy=-3.0))
    assert geom.a == pytest.approx(20.0, abs=1e-6)
    assert geom.b == pytest.approx(10.0, abs=1e-6)
    assert geom.cx == pytest.approx(5.0, abs=1e-6)
    assert geom.cy == pytest.approx(-3.0, abs=1e-6)
    assert geom.rotation == pytest.approx(0.6, abs=1e-6)


def test_fit_noisy_ellipse_monte_carlo():
    # isotropic displacement noise, 0.5 px standard deviation of the offset
    pts0 = ellipse_points(20.0, 10.0)
    sigma = 0.5 / math.sqrt(2.0)
    for seed in range(50):
        rng = np.random.default_rng(seed)
        geom = fit_ellipse(pts0 + rng.normal(0.0, sigma, pts0.shape))
        assert abs(geom.a - 20.0) / 20.0 <= 0.01
        assert abs(geom.b - 10.0) / 10.0 <= 0.01
        assert math.hypot(geom.cx, geom.cy) <= 0.5


def test_refined_residual_never_exceeds_seed():
    pts0 = ellipse_points(20.0, 10.0, rot=1.1, cx=2.0, cy=7.0)
    for seed in range(25):
        rng = np.random.default_rng(seed)
        pts = pts0 + rng.normal(0.0, 0.5, pts0.shape)
        seeded = fit_ellipse(pts, refine=False)
        refined = fit_ellipse(pts, refine=True)
        assert refined.fit_residual <= seeded.fit_residual + 1e-12


def test_fit_rejects_insufficient_or_collinear():
    with pytest.raises(ParameterError):
        fit_ellipse(ellipse_points(5.0, 3.0)[:4])
    line = np.column_stack([np.arange(10.0), 2.0 * np.arange(10.0) + 1.0])
    with pytest.raises(ParameterError):
        fit_ellipse(line)


def test_constrained_fit_yields_ellipse_even_on_non_elliptical_scatter():
    # the algebraic constraint forces an ellipse solution; non-elliptical
    # scatter yields a (poor) ellipse rather than a failure
    t = np.linspace(-1.0, 1.0, 50)
    pts = np.concatenate([
        np.column_stack([np.cosh(t), np.sinh(t)]),
        np.column_stack([-np.cosh(t), np.sinh(t)]),
    ])
    geom = fit_ellipse(pts, refine=False)
    assert geom.a >= geom.b > 0.0
    assert 0.0 <= geom.rotation < math.pi


# --- ring feature -----------------------------------------------------------------

def circle_samples(radius, cx=0.0, cy=0.0, n=360):
    t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return tuple(RaySample(angle=a, peak_point=(cx + radius * math.cos(a),
                                                cy + radius * math.sin(a)),
                           width=7.0) for a in t)


def test_ring_feature_circle_diameter():
    geom = RingGeometry(0.0, 0.0, 100.0, 100.0, 0.0, circle_samples(100.0))
    assert ring_feature(geom, 1.0) == pytest.approx(200.0, rel=1e-12)


def test_ring_feature_px_per_unit_scale():
    geom = RingGeometry(0.0, 0.0, 100.0, 100.0, 0.0, circle_samples(100.0))
    assert ring_feature(geom, 10.0) == pytest.approx(20.0, rel=1e-12)


def test_ring_feature_ellipse_matches_quadrature():
    a, b = 20.0, 10.0
    t = np.linspace(0.0, 2.0 * np.pi, 360, endpoint=False)
    r = a * b / np.hypot(b * np.cos(t), a * np.sin(t))
    samples = tuple(RaySample(angle=float(p), peak_point=(float(rr * np.cos(p)), float(rr * np.sin(p))),
                              width=5.0) for p, rr in zip(t, r))
    geom = RingGeometry(0.0, 0.0, a, b, 0.0, samples)
    mean_r, _ = quad(lambda x: a * b / math.hypot(b * math.cos(x), a * math.sin(x)),
                     0.0, 2.0 * math.pi, limit=200)
    assert ring_feature(geom) == pytest.approx(2.0 * mean_r / (2.0 * math.pi), rel=1e-9)


def test_ring_feature_translation_invariant():
    g0 = RingGeometry(0.0, 0.0, 50.0, 50.0, 0.0, circle_samples(50.0))
    g1 = RingGeometry(30.0, -12.0, 50.0, 50.0, 0.0, circle_samples(50.0, cx=30.0, cy=-12.0))
    assert ring_feature(g0) == pytest.approx(ring_feature(g1), rel=1e-12)


def test_ring_feature_requires_samples():
    with pytest.raises(ParameterError):
        ring_feature(RingGeometry(0.0, 0.0, 10.0, 10.0, 0.0))


# --- linear model --------------------------------------------------------------------

def test_refraction_from_feature_intercept_is_zero_diopters():
    assert refraction_from_feature(24.4738, DEFAULT_REFRACTION_MODEL) == pytest.approx(0.0, abs=1e-9)


def test_refraction_from_feature_calibration_eyes():
    assert refraction_from_feature(23.8774, DEFAULT_REFRACTION_MODEL) == pytest.approx(-5.25, abs=1e-9)
    assert refraction_from_feature(23.9342, DEFAULT_REFRACTION_MODEL) == pytest.approx(-4.75, abs=1e-9)


def test_refraction_forward_inverse_identity():
    model = RefractionModel(slope=-0.37, intercept=12.5)
    for d in (-6.0, -1.25, 0.0, 3.5):
        assert refraction_from_feature(model.forward(d), model) == pytest.approx(d, abs=1e-12)


def test_refraction_zero_slope_rejected():
    with pytest.raises(ModelError):
        refraction_from_feature(10.0, RefractionModel(slope=0.0, intercept=1.0))


def test_fit_refraction_model_exact_recovery():
    pairs = [(d, DEFAULT_REFRACTION_MODEL.forward(d)) for d in (-6.0, -5.0, -4.0, -3.0)]
    model = fit_refraction_model(pairs)
    assert model.slope == pytest.approx(0.1136, abs=1e-9)
    assert model.intercept == pytest.approx(24.4738, abs=1e-9)
    assert model.r2 == pytest.approx(1.0)


def test_fit_refraction_model_two_points_interpolates():
    model = fit_refraction_model([(-2.0, 5.0), (2.0, 9.0)])
    assert model.slope == pytest.approx(1.0)
    assert model.intercept == pytest.approx(7.0)


def test_fit_refraction_model_balanced_perturbation():
    base = [(-2.0, 5.0), (-1.0, 6.0), (1.0, 8.0), (2.0, 9.0)]
    ref = fit_refraction_model(base)
    # +delta on the symmetric pair shifts the intercept only
    shifted = [(d, r + (0.3 if abs(d) == 2.0 else 0.0)) for d, r in base]
    got = fit_refraction_model(shifted)
    assert got.slope == pytest.approx(ref.slope, abs=1e-12)
    assert got.intercept == pytest.approx(ref.intercept + 0.15, abs=1e-12)


def test_fit_refraction_model_degenerate_rejected():
    with pytest.raises(ParameterError):
        fit_refraction_model([(1.0, 2.0)])
    with pytest.raises(ParameterError):
        fit_refraction_model([(1.0, 2.0), (1.0, 3.0)])


def test_model_file_round_trip(tmp_path):
    model = fit_refraction_model(
        [(d, DEFAULT_REFRACTION_MODEL.forward(d)) for d in (-6.0, -3.0, 0.0)],
        feature_scale=10.0)
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.slope == model.slope
    assert loaded.intercept == model.intercept
    assert loaded.feature_scale == 10.0
    with pytest.raises(ModelError):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"intercept": 1.0}))
        load_model(bad)


# --- full measurement -----------------------------------------------------------------

MEASURE_MODEL = RefractionModel(slope=0.1136, intercept=24.4738, feature_scale=10.0)
DIOPTER_SET = (-6.0, -5.25, -4.75, -3.0, -1.0, 0.0)


def test_measure_refraction_round_trip_noiseless():
    for d in DIOPTER_SET:
        spec = SynthRingSpec(diopters=d, feature_scale=10.0, seed=5)
        img, _ = synth_ring(spec)
        result = measure_refraction(img, MEASURE_MODEL)
        assert abs(result.diopters - d) <= 0.25


def test_measure_refraction_round_trip_noisy():
    for d in DIOPTER_SET:
        spec = SynthRingSpec(diopters=d, feature_scale=10.0, noise_sigma=8.0, seed=17)
        img, _ = synth_ring(spec)
        result = measure_refraction(img, MEASURE_MODEL)
        assert abs(result.diopters - d) <= 0.5


def test_measure_refraction_blank_image_names_stage():
    with pytest.raises(InsufficientSignalError) as err:
        measure_refraction(np.zeros((64, 64)), MEASURE_MODEL)
    assert err.value.stage == "radial_scan"


def test_measure_refraction_diagnostics():
    spec = SynthRingSpec(diopters=-3.0, feature_scale=10.0, seed=1)
    img, _ = synth_ring(spec)
    result = measure_refraction(img, MEASURE_MODEL)
    assert result.diagnostics["n_valid_rays"] >= 180
    assert result.diagnostics["fit_residual"] < 1.0
    assert not result.diagnostics["seed_fallback"]
