"""Staged edge detection: Sobel gradients, non-maximum suppression along
the quantized gradient direction, and double thresholding with hysteresis
tracking over 8-neighborhoods.

Thresholds are derived from a quantile of the nonzero gradient magnitudes
so the detector adapts across exposure levels. The outermost pixel ring is
never an edge (the 3x3 Sobel support is undefined there).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .image import as_image
from .preprocess import median_filter

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class CannyConfig:
    """Detector tuning.

    high_quantile sets the strong threshold as a quantile of the nonzero
    post-suppression magnitudes; the weak threshold is low_ratio times the
    strong one. The input is median-filtered with median_kernel first.
    """

    high_quantile: float = 0.99
    low_ratio: float = 0.4
    median_kernel: int = 3

    def __post_init__(self):
        if not 0.0 < self.high_quantile <= 1.0:
            raise ParameterError(f"high_quantile must be in (0, 1], got {self.high_quantile}")
        if not 0.0 < self.low_ratio < 1.0:
            raise ParameterError(f"low_ratio must be in (0, 1), got {self.low_ratio}")
        if self.median_kernel < 1 or self.median_kernel % 2 == 0:
            raise ParameterError(f"median_kernel must be odd and >= 1, got {self.median_kernel}")


@dataclass
class GradientField:
    """Per-pixel gradient magnitude and orientation (radians, (-pi, pi])."""

    magnitude: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        if self.magnitude.shape != self.orientation.shape:
            raise ParameterError("magnitude and orientation shapes differ")


def sobel_gradients(img) -> GradientField:
    """3x3 Sobel gradients; magnitude = hypot(Gx, Gy), orientation = atan2(Gy, Gx).

    The border ring gets magnitude 0 and orientation 0 (the convention for
    a zero gradient).
    """
    img = as_image(img)
    h, w = img.shape
    if h < 3 or w < 3:
        raise ParameterError(f"image must be at least 3x3, got {h}x{w}")
    a, b, c = img[:-2, :-2], img[:-2, 1:-1], img[:-2, 2:]
    d, f = img[1:-1, :-2], img[1:-1, 2:]
    g, hh, i = img[2:, :-2], img[2:, 1:-1], img[2:, 2:]
    gx = (c + 2.0 * f + i) - (a + 2.0 * d + g)
    gy = (g + 2.0 * hh + i) - (a + 2.0 * b + c)
    mag = np.zeros_like(img)
    ori = np.zeros_like(img)
    mag[1:-1, 1:-1] = np.hypot(gx, gy)
    ori[1:-1, 1:-1] = np.arctan2(gy, gx)
    return GradientField(mag, ori)


def nonmax_suppress(field: GradientField) -> GradientField:
    """Keep pixels whose magnitude is >= both neighbors along the gradient.

    The orientation is quantized to the four canonical directions
    (0, 45, 90, 135 degrees); ties survive so 2-wide ridges are not erased.
    Suppressed magnitudes become 0; orientations are passed through.
    """
    m = field.magnitude
    t = np.mod(field.orientation, np.pi)  # fold to [0, pi)

    p = np.pad(m, 1, mode="constant")
    n_e, n_w = p[1:-1, 2:], p[1:-1, :-2]
    n_s, n_n = p[2:, 1:-1], p[:-2, 1:-1]
    n_se, n_nw = p[2:, 2:], p[:-2, :-2]
    n_sw, n_ne = p[2:, :-2], p[:-2, 2:]

    d0 = (t < np.pi / 8) | (t >= 7 * np.pi / 8)
    d45 = (t >= np.pi / 8) & (t < 3 * np.pi / 8)
    d90 = (t >= 3 * np.pi / 8) & (t < 5 * np.pi / 8)
    d135 = (t >= 5 * np.pi / 8) & (t < 7 * np.pi / 8)

    keep = (
        (d0 & (m >= n_e) & (m >= n_w))
        | (d45 & (m >= n_se) & (m >= n_nw))  # gradient toward +x, +y
        | (d90 & (m >= n_n) & (m >= n_s))
        | (d135 & (m >= n_sw) & (m >= n_ne))  # gradient toward -x, +y
    )
    return GradientField(np.where(keep, m, 0.0), field.orientation)


def hysteresis_thresholds(field: GradientField, cfg: CannyConfig) -> tuple[float, float]:
    """(low, high) derived from the quantile of nonzero magnitudes.

    Returns (0, 0) when the field has no nonzero magnitude (blank image).
    """
    nz = field.magnitude[field.magnitude > 0]
    if nz.size == 0:
        return 0.0, 0.0
    high = float(np.quantile(nz, cfg.high_quantile))
    return cfg.low_ratio * high, high


def apply_hysteresis(magnitude: np.ndarray, low: float, high: float) -> np.ndarray:
    """Double threshold + edge tracking with explicit thresholds.

    Strong pixels (magnitude >= high) are edges; weak pixels
    (low <= magnitude < high) are edges iff 8-connected to a strong pixel,
    transitively through other weak pixels.
    """
    if high <= 0:
        raise ParameterError(f"high threshold must be positive, got {high}")
    if not 0 < low < high:
        raise ParameterError(f"thresholds must satisfy 0 < low < high, got low={low}, high={high}")
    strong = magnitude >= high
    if not strong.any():
        return np.zeros(magnitude.shape, dtype=bool)
    weak_or_strong = magnitude >= low
    labels, _ = ndimage.label(weak_or_strong, structure=_EIGHT_CONNECTED)
    keep = np.unique(labels[strong])
    return np.isin(labels, keep) & weak_or_strong


def hysteresis(field: GradientField, cfg: CannyConfig) -> np.ndarray:
    """Double threshold + hysteresis with quantile-derived thresholds."""
    low, high = hysteresis_thresholds(field, cfg)
    if high <= 0:
        return np.zeros(field.magnitude.shape, dtype=bool)
    return apply_hysteresis(field.magnitude, low, high)


def canny(img, cfg: CannyConfig | None = None) -> np.ndarray:
    """Full detector: median filter, Sobel, suppression, hysteresis.

    Deterministic; returns a boolean edge mask.
    """
    cfg = cfg or CannyConfig()
    filtered = median_filter(img, cfg.median_kernel)
    return hysteresis(nonmax_suppress(sobel_gradients(filtered)), cfg)


def edge_mask_to_image(mask: np.ndarray) -> np.ndarray:
    """Edge mask as an exportable image (255 = edge, 0 = non-edge)."""
    return np.where(np.asarray(mask, dtype=bool), 255.0, 0.0)
