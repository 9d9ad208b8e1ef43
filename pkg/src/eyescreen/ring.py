"""Photorefraction ring analysis.

A retinal-reflection ring image is reduced to a scalar feature R (the mean
ring diameter at the intensity peak locus) which maps linearly to diopters.
Stages: Gaussian denoising, Otsu binarization for an intensity-weighted
centroid seed, radial ray scanning with per-ray adaptive thresholds,
ellipse fitting (direct algebraic conic seed refined by Gauss-Newton on
the sum-of-focal-distances residual), feature extraction, and the linear
model inversion.

The default model constants are the device calibration of the
ring-diameter-to-diopter map; they also drive the synthetic ring
generator, closing the round-trip used in validation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    FitFailureError,
    InsufficientSignalError,
    ModelError,
    ParameterError,
    RegionNotFoundError,
)
from .image import as_image
from .preprocess import gaussian_blur


@dataclass(frozen=True)
class RaySample:
    """One ray's intersection with the ring.

    peak_point is the intensity-weighted centroid of the above-threshold
    band (x, y px); width is the band extent at the adaptive threshold.
    """

    angle: float
    peak_point: tuple[float, float]
    width: float


@dataclass
class RingGeometry:
    """Fitted ellipse (a >= b, rotation in [0, pi)) plus ray samples."""

    cx: float
    cy: float
    a: float
    b: float
    rotation: float
    samples: tuple[RaySample, ...] = ()
    fit_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "cx": self.cx,
            "cy": self.cy,
            "a": self.a,
            "b": self.b,
            "rotation": self.rotation,
            "rms_residual": self.fit_residual,
            "n_valid_rays": len(self.samples),
        }


@dataclass(frozen=True)
class RefractionModel:
    """Linear map R(D) = slope * D + intercept between diopters and the
    ring feature; feature_scale records the px-per-unit convention the
    feature was produced under."""

    slope: float
    intercept: float
    feature_scale: float = 1.0
    r2: float | None = None
    fitted_on: tuple = ()

    def forward(self, diopters: float) -> float:
        return self.slope * diopters + self.intercept

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "feature_scale": self.feature_scale,
            "r2": self.r2,
            "fitted_on": [list(p) for p in self.fitted_on],
        }


# device calibration of the diameter-to-diopter map; also the forward
# model for synthetic rings
DEFAULT_REFRACTION_MODEL = RefractionModel(slope=0.1136, intercept=24.4738)


@dataclass(frozen=True)
class RingScanConfig:
    """Tunables of the measurement pipeline."""

    blur_sigma: float = 2.0
    n_rays: int = 360
    step: float = 0.5
    peak_fraction: float = 0.5
    tail_fraction: float = 0.2
    refine: bool = True

    def __post_init__(self):
        if self.blur_sigma < 0:
            raise ParameterError("blur_sigma must be >= 0")
        if self.n_rays < 8:
            raise ParameterError("n_rays must be >= 8")
        if self.step <= 0:
            raise ParameterError("step must be positive")
        if not 0.0 < self.peak_fraction < 1.0:
            raise ParameterError("peak_fraction must be in (0, 1)")


def otsu_threshold(img) -> float:
    """Otsu's threshold over the 256-bin histogram of rounded intensities."""
    img = as_image(img)
    counts = np.bincount(np.clip(np.rint(img), 0, 255).astype(np.intp).ravel(), minlength=256)
    total = counts.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(counts)
    w1 = total - w0
    mass0 = np.cumsum(counts * levels)
    total_mass = mass0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = mass0 / w0
        mu1 = (total_mass - mass0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between[~np.isfinite(between)] = -1.0
    return float(np.argmax(between))


def moments_centroid(img, binarize_threshold: float) -> tuple[float, float]:
    """Intensity-weighted centroid (m10/m00, m01/m00) over above-threshold
    pixels."""
    img = as_image(img)
    ys, xs = np.nonzero(img > binarize_threshold)
    if xs.size == 0:
        raise RegionNotFoundError(
            f"no pixel above threshold {binarize_threshold}", stage="moments_centroid"
        )
    w = img[ys, xs]
    m00 = w.sum()
    return float((xs * w).sum() / m00), float((ys * w).sum() / m00)


def _ray_limit(cx: float, cy: float, dx: float, dy: float, w: int, h: int) -> float:
    """Distance from (cx, cy) to the frame boundary along (dx, dy)."""
    t = math.inf
    if dx > 1e-12:
        t = min(t, (w - 1 - cx) / dx)
    elif dx < -1e-12:
        t = min(t, -cx / dx)
    if dy > 1e-12:
        t = min(t, (h - 1 - cy) / dy)
    elif dy < -1e-12:
        t = min(t, -cy / dy)
    return t


def radial_scan(img, center: tuple[float, float], n_rays: int = 360,
                step: float = 0.5, peak_fraction: float = 0.5,
                tail_fraction: float = 0.2) -> list[RaySample]:
    """Scan rays from `center`, locating the ring crossing on each.

    Per ray the bilinear-sampled profile's global maximum is found; the
    contiguous band with intensity >= peak_fraction * peak gives the width
    (band edges interpolated linearly between samples) and the weighted
    intensity centroid gives the peak point. Rays whose peak does not rise
    above the noise floor (mean + 2 std of the profile away from the peak)
    are dropped; fewer than n_rays / 2 valid rays is an error.
    """
    img = as_image(img)
    if n_rays < 8:
        raise ParameterError(f"n_rays must be >= 8, got {n_rays}")
    h, w = img.shape
    cx, cy = float(center[0]), float(center[1])
    if not (0 <= cx <= w - 1 and 0 <= cy <= h - 1):
        raise ParameterError(f"center {center} outside the image")

    samples: list[RaySample] = []
    for k in range(n_rays):
        phi = 2.0 * math.pi * k / n_rays
        dx, dy = math.cos(phi), math.sin(phi)
        t_max = _ray_limit(cx, cy, dx, dy, w, h)
        if not math.isfinite(t_max) or t_max < 4 * step:
            continue
        ts = np.arange(0.0, t_max + 1e-9, step)
        profile = ndimage.map_coordinates(
            img, np.stack([cy + ts * dy, cx + ts * dx]), order=1, mode="nearest"
        )
        ipk = int(np.argmax(profile))
        peak = float(profile[ipk])

        tails = np.abs(ts - ts[ipk]) > tail_fraction * ts[-1]
        if np.count_nonzero(tails) < 4:
            continue
        floor = float(profile[tails].mean() + 2.0 * profile[tails].std())
        # the margin absorbs bilinear-interpolation rounding on flat profiles
        if peak <= floor + 1e-9 * max(1.0, peak):
            continue

        thr = peak_fraction * peak
        lo = ipk
        while lo > 0 and profile[lo - 1] >= thr:
            lo -= 1
        hi = ipk
        while hi < len(profile) - 1 and profile[hi + 1] >= thr:
            hi += 1

        t_left = ts[lo]
        if lo > 0 and profile[lo] > profile[lo - 1]:
            t_left = ts[lo - 1] + step * (thr - profile[lo - 1]) / (profile[lo] - profile[lo - 1])
        t_right = ts[hi]
        if hi < len(profile) - 1 and profile[hi] > profile[hi + 1]:
            t_right = ts[hi] + step * (profile[hi] - thr) / (profile[hi] - profile[hi + 1])

        band = profile[lo:hi + 1]
        t_bar = float((band * ts[lo:hi + 1]).sum() / band.sum())
        samples.append(RaySample(
            angle=phi,
            peak_point=(cx + t_bar * dx, cy + t_bar * dy),
            width=float(t_right - t_left),
        ))

    if len(samples) < n_rays / 2:
        raise InsufficientSignalError(
            f"only {len(samples)} of {n_rays} rays found a usable peak",
            stage="radial_scan",
            n_valid_rays=len(samples),
        )
    return samples


def _conic_to_geometry(conic: np.ndarray, shift: np.ndarray) -> tuple[float, float, float, float, float]:
    """Conic coefficients (A, B, C, D, E, F) in shifted coordinates to
    (cx, cy, a, b, rotation)."""
    A, B, C, D, E, F = conic
    disc = B * B - 4.0 * A * C
    if disc >= 0:
        raise FitFailureError("fitted conic is not an ellipse", stage="fit_ellipse")
    x0 = (2.0 * C * D - B * E) / disc
    y0 = (2.0 * A * E - B * D) / disc
    f0 = A * x0 * x0 + B * x0 * y0 + C * y0 * y0 + D * x0 + E * y0 + F
    m = np.array([[A, B / 2.0], [B / 2.0, C]])
    evals, evecs = np.linalg.eigh(m)
    axes_sq = -f0 / evals
    if axes_sq.min() <= 0:
        raise FitFailureError("fitted conic is not an ellipse", stage="fit_ellipse")
    axes = np.sqrt(axes_sq)
    major = int(np.argmax(axes))
    a, b = float(axes[major]), float(axes[1 - major])
    if (a - b) <= 1e-8 * a:
        rot = 0.0  # circle: rotation is reported as 0 by convention
    else:
        vx, vy = evecs[:, major]
        rot = math.atan2(vy, vx) % math.pi
    return float(x0 + shift[0]), float(y0 + shift[1]), a, b, rot


def _direct_ellipse_fit(pts: np.ndarray) -> tuple[float, float, float, float, float]:
    """Direct constrained conic least squares (partitioned eigensystem),
    numerically centered."""
    shift = pts.mean(axis=0)
    x = pts[:, 0] - shift[0]
    y = pts[:, 1] - shift[1]
    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t_mat = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as exc:
        raise FitFailureError(f"singular scatter system: {exc}", stage="fit_ellipse")
    m = s1 + s2 @ t_mat
    # apply the inverse ellipse-constraint matrix: rows (M3/2, -M2, M1/2)
    m = np.vstack([m[2] / 2.0, -m[1], m[0] / 2.0])
    evals, evecs = np.linalg.eig(m)
    cond = 4.0 * evecs[0] * evecs[2] - evecs[1] ** 2
    idx = np.flatnonzero(np.isreal(evals) & (np.real(cond) > 0))
    if idx.size == 0:
        raise FitFailureError("no ellipse solution in the eigensystem", stage="fit_ellipse")
    a1 = np.real(evecs[:, idx[0]])
    conic = np.concatenate([a1, t_mat @ a1])
    return _conic_to_geometry(conic, shift)


def _focal_params(cx, cy, a, b, rot) -> np.ndarray:
    c = math.sqrt(max(a * a - b * b, 0.0))
    ux, uy = math.cos(rot), math.sin(rot)
    return np.array([cx + c * ux, cy + c * uy, cx - c * ux, cy - c * uy, 2.0 * a])


def _focal_residuals(params: np.ndarray, pts: np.ndarray) -> np.ndarray:
    d1 = np.hypot(pts[:, 0] - params[0], pts[:, 1] - params[1])
    d2 = np.hypot(pts[:, 0] - params[2], pts[:, 1] - params[3])
    return d1 + d2 - params[4]


def _geometry_from_focal(params: np.ndarray) -> tuple[float, float, float, float, float]:
    f1 = params[0:2]
    f2 = params[2:4]
    center = (f1 + f2) / 2.0
    c = float(np.hypot(*(f1 - f2))) / 2.0
    a = params[4] / 2.0
    if a <= c or a <= 0:
        raise FitFailureError("refined parameters degenerate (2a <= focal distance)",
                              stage="fit_ellipse")
    b = math.sqrt(a * a - c * c)
    # c scales like sqrt of the axis difference, so roundoff on an exact
    # circle still yields c ~ 1e-6 a; treat such fits as circles
    if c <= 1e-4 * a:
        rot = 0.0
    else:
        rot = math.atan2(f2[1] - f1[1], f2[0] - f1[0]) % math.pi
    return float(center[0]), float(center[1]), float(a), float(b), rot


def fit_ellipse(points, refine: bool = True, samples: tuple[RaySample, ...] = ()) -> RingGeometry:
    """Fit an ellipse to 2-D points.

    Stage 1 is the direct algebraic conic fit; stage 2 (refine=True)
    runs damped Gauss-Newton on the residuals d(p, F1) + d(p, F2) - 2a.
    Steps that fail to reduce the residual are halved up to 10 times and
    rejected if still worse, so the refined residual never exceeds the
    seed's.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ParameterError(f"points must be (N, 2), got shape {pts.shape}")
    if len(pts) < 5:
        raise ParameterError(f"ellipse fit needs >= 5 points, got {len(pts)}")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[-1] <= 1e-9 * max(sv[0], 1.0):
        raise ParameterError("points are collinear")

    cx, cy, a, b, rot = _direct_ellipse_fit(pts)
    params = _focal_params(cx, cy, a, b, rot)
    residual = _focal_residuals(params, pts)
    sse = float(residual @ residual)

    if refine:
        for _ in range(50):
            d1 = np.hypot(pts[:, 0] - params[0], pts[:, 1] - params[1])
            d2 = np.hypot(pts[:, 0] - params[2], pts[:, 1] - params[3])
            d1 = np.maximum(d1, 1e-12)
            d2 = np.maximum(d2, 1e-12)
            jac = np.column_stack([
                -(pts[:, 0] - params[0]) / d1,
                -(pts[:, 1] - params[1]) / d1,
                -(pts[:, 0] - params[2]) / d2,
                -(pts[:, 1] - params[3]) / d2,
                -np.ones(len(pts)),
            ])
            step, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
            accepted = False
            for _ in range(10):
                cand = params + step
                cand_res = _focal_residuals(cand, pts)
                cand_sse = float(cand_res @ cand_res)
                if cand_sse <= sse:
                    params, residual, sse = cand, cand_res, cand_sse
                    accepted = True
                    break
                step = step / 2.0
            if not accepted or float(np.linalg.norm(step)) < 1e-8:
                break
        cx, cy, a, b, rot = _geometry_from_focal(params)

    rms = math.sqrt(sse / len(pts))
    return RingGeometry(cx=cx, cy=cy, a=a, b=b, rotation=rot,
                        samples=tuple(samples), fit_residual=rms)


def ring_feature(geom: RingGeometry, feature_scale: float = 1.0) -> float:
    """Mean ring diameter: average over rays of twice the distance from
    the fitted center to the ray's peak point, converted from px to
    feature units by `feature_scale` (px per unit)."""
    if not geom.samples:
        raise ParameterError("ring feature needs ray samples on the geometry")
    if feature_scale <= 0:
        raise ParameterError(f"feature_scale must be positive, got {feature_scale}")
    pts = np.array([s.peak_point for s in geom.samples], dtype=np.float64)
    d = np.hypot(pts[:, 0] - geom.cx, pts[:, 1] - geom.cy)
    return float(2.0 * d.mean() / feature_scale)


def refraction_from_feature(feature: float, model: RefractionModel) -> float:
    """Invert the linear model: D = (R - intercept) / slope."""
    if model.slope == 0:
        raise ModelError("model slope is zero; inversion undefined")
    return (feature - model.intercept) / model.slope


def fit_refraction_model(pairs, feature_scale: float = 1.0) -> RefractionModel:
    """Ordinary least squares fit of R against D over (D, R) pairs."""
    arr = np.asarray(pairs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
        raise ParameterError("need at least two (D, R) pairs")
    d = arr[:, 0]
    r = arr[:, 1]
    if np.unique(d).size < 2:
        raise ParameterError("need at least two distinct diopter values")
    design = np.column_stack([d, np.ones_like(d)])
    (slope, intercept), *_ = np.linalg.lstsq(design, r, rcond=None)
    pred = slope * d + intercept
    ss_res = float(((r - pred) ** 2).sum())
    ss_tot = float(((r - r.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res < 1e-12 else 0.0)
    return RefractionModel(
        slope=float(slope), intercept=float(intercept),
        feature_scale=feature_scale, r2=r2,
        fitted_on=tuple((float(a), float(b)) for a, b in arr),
    )


def save_model(model: RefractionModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path) -> RefractionModel:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        return RefractionModel(
            slope=float(raw["slope"]),
            intercept=float(raw["intercept"]),
            feature_scale=float(raw.get("feature_scale", 1.0)),
            r2=raw.get("r2"),
            fitted_on=tuple(tuple(p) for p in raw.get("fitted_on", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"invalid model file {path}: {exc}")


@dataclass
class RefractionResult:
    """Measured diopters with geometry and stage diagnostics."""

    diopters: float
    feature: float
    ring: RingGeometry
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "diopters": self.diopters,
            "feature": self.feature,
            "geometry": self.ring.to_dict(),
            "diagnostics": self.diagnostics,
        }


def measure_refraction(img, model: RefractionModel,
                       cfg: RingScanConfig | None = None) -> RefractionResult:
    """Full ring measurement: denoise, seed, scan, fit, feature, invert.

    Errors raised by any stage carry that stage's name. An image whose
    binarization is empty falls back to the frame center as the scan seed
    (recorded in the diagnostics) so featureless frames surface as a
    radial-scan signal error rather than a seed failure.
    """
    cfg = cfg or RingScanConfig()
    img = as_image(img)
    blurred = gaussian_blur(img, cfg.blur_sigma)
    threshold = otsu_threshold(blurred)

    h, w = blurred.shape
    seed_fallback = False
    try:
        seed = moments_centroid(blurred, threshold)
    except RegionNotFoundError:
        seed = ((w - 1) / 2.0, (h - 1) / 2.0)
        seed_fallback = True

    samples = radial_scan(
        blurred, seed, n_rays=cfg.n_rays, step=cfg.step,
        peak_fraction=cfg.peak_fraction, tail_fraction=cfg.tail_fraction,
    )
    pts = np.array([s.peak_point for s in samples])
    geom = fit_ellipse(pts, refine=cfg.refine, samples=tuple(samples))
    feature = ring_feature(geom, model.feature_scale)
    diopters = refraction_from_feature(feature, model)
    return RefractionResult(
        diopters=diopters,
        feature=feature,
        ring=geom,
        diagnostics={
            "n_valid_rays": len(samples),
            "fit_residual": geom.fit_residual,
            "seed": [seed[0], seed[1]],
            "seed_fallback": seed_fallback,
            "binarize_threshold": threshold,
            "mean_width": float(np.mean([s.width for s in samples])),
        },
    )
