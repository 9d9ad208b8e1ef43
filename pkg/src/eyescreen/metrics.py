"""Evaluation metrics: localization error, segmentation overlap, and
image quality.

Localization
------------
ede         Euclidean distance between predicted and true centers (px).
normalized_error
            EDE divided by the true pupil radius.
mse_of_edes Mean of squared EDEs over a corpus.

Segmentation
------------
f1_score / macro_f1 / miou over integer label masks. Classes absent from
both masks are undefined and excluded from macro averages.

Image quality
-------------
brightness     mean intensity.
rms_contrast   population standard deviation of intensities.
snr_db         20 * log10(mean / std); undefined (None) for degenerate
               images instead of +-inf.
spatial_sharpness
               mean Sobel gradient magnitude over interior pixels. Stands
               in for the spatial sharpness table rows; the original
               device-side index is not reproducible, so absolute values
               are comparative only.
frequency_sharpness
               mean spectral energy above 0.25 x Nyquist. Same caveat.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edges import sobel_gradients
from .errors import ParameterError
from .image import as_image


def ede(predicted, truth) -> float:
    """Euclidean distance error between two (x, y) centers."""
    px, py = predicted
    tx, ty = truth
    return math.hypot(px - tx, py - ty)


def normalized_error(ede_px: float, true_radius: float) -> float:
    """EDE as a fraction of the true pupil radius."""
    if true_radius <= 0:
        raise ParameterError(f"true radius must be positive, got {true_radius}")
    return ede_px / true_radius


def mse_of_edes(edes) -> float:
    """Mean of squared distance errors."""
    arr = np.asarray(edes, dtype=np.float64)
    if arr.size == 0:
        raise ParameterError("mse of an empty list is undefined")
    return float((arr * arr).mean())


def _check_masks(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise ParameterError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    return p, t


def f1_score(pred, truth, cls) -> float | None:
    """F1 (harmonic precision/recall mean) for one class.

    Returns None when the class is absent from both masks (undefined).
    """
    p, t = _check_masks(pred, truth)
    pm = p == cls
    tm = t == cls
    tp = int(np.count_nonzero(pm & tm))
    fp = int(np.count_nonzero(pm & ~tm))
    fn = int(np.count_nonzero(~pm & tm))
    if tp + fp + fn == 0:
        return None
    return 2.0 * tp / (2.0 * tp + fp + fn)


def _observed_classes(pred, truth, num_classes=None) -> list:
    observed = np.union1d(np.unique(pred), np.unique(truth))
    if num_classes is not None:
        observed = observed[observed < num_classes]
    return [int(c) for c in observed]


def macro_f1(pred, truth, num_classes=None) -> float:
    """Mean F1 over classes present in either mask."""
    p, t = _check_masks(pred, truth)
    scores = [f1_score(p, t, c) for c in _observed_classes(p, t, num_classes)]
    scores = [s for s in scores if s is not None]
    if not scores:
        raise ParameterError("no class present in either mask")
    return float(np.mean(scores))


def per_class_iou(pred, truth, num_classes=None) -> dict[int, float]:
    """Intersection-over-union per class present in either mask."""
    p, t = _check_masks(pred, truth)
    out = {}
    for c in _observed_classes(p, t, num_classes):
        pm = p == c
        tm = t == c
        union = int(np.count_nonzero(pm | tm))
        inter = int(np.count_nonzero(pm & tm))
        out[c] = inter / union if union else 0.0
    return out


def miou(pred, truth, num_classes=None) -> float:
    """Mean IoU over classes present in either mask."""
    ious = per_class_iou(pred, truth, num_classes)
    if not ious:
        raise ParameterError("no class present in either mask")
    return float(np.mean(list(ious.values())))


def brightness(img) -> float:
    """Mean intensity."""
    return float(as_image(img).mean())


def rms_contrast(img) -> float:
    """Population standard deviation of intensities."""
    return float(as_image(img).std())


def snr_db(img) -> float | None:
    """20 * log10(mean / std); None when the ratio is undefined."""
    img = as_image(img)
    mean = img.mean()
    std = img.std()
    if std == 0.0 or mean == 0.0:
        return None
    return float(20.0 * math.log10(mean / std))


def spatial_sharpness(img) -> float:
    """Mean Sobel gradient magnitude over interior pixels."""
    field = sobel_gradients(img)
    return float(field.magnitude[1:-1, 1:-1].mean())


def frequency_sharpness(img, cutoff: float = 0.25) -> float:
    """Mean spectral energy above `cutoff` x Nyquist.

    Sum of |F(u, v)|^2 over the radial band, divided by the pixel count.
    Constant images score 0 (only the DC term, which sits below any band).
    """
    img = as_image(img)
    h, w = img.shape
    spectrum = np.fft.fft2(img)
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    band = np.hypot(fy, fx) > cutoff * 0.5
    return float((np.abs(spectrum[band]) ** 2).sum() / img.size)


@dataclass
class QualityReport:
    """Per-image quality summary; snr_db is None when undefined."""

    brightness: float
    rms_contrast: float
    snr_db: float | None
    spatial_sharpness: float
    frequency_sharpness: float

    def to_dict(self) -> dict:
        return {
            "brightness": self.brightness,
            "rms_contrast": self.rms_contrast,
            "snr_db": "undefined" if self.snr_db is None else self.snr_db,
            "spatial_sharpness": self.spatial_sharpness,
            "frequency_sharpness": self.frequency_sharpness,
        }


def quality_report(img) -> QualityReport:
    """All quality metrics for one image."""
    img = as_image(img)
    return QualityReport(
        brightness=brightness(img),
        rms_contrast=rms_contrast(img),
        snr_db=snr_db(img),
        spatial_sharpness=spatial_sharpness(img),
        frequency_sharpness=frequency_sharpness(img),
    )
