"""Intensity and spatial preprocessing applied ahead of segmentation and
ring analysis: gamma correction, histogram equalization, median filtering,
and Gaussian smoothing.

All operators preserve image dimensions and the [0, 255] range, and use
edge replication at the borders. They are pure functions of their inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .image import as_image


@dataclass(frozen=True)
class PreprocessConfig:
    """Preprocessing chain configuration.

    The chain runs gamma correction, then histogram equalization, then a
    median filter, then a Gaussian blur; each step is skipped when its
    parameter is the identity value.
    """

    gamma: float = 0.8
    equalize: bool = True
    median_kernel: int = 1
    gaussian_sigma: float = 0.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if self.median_kernel < 1 or self.median_kernel % 2 == 0:
            raise ParameterError(f"median_kernel must be odd and >= 1, got {self.median_kernel}")
        if self.gaussian_sigma < 0:
            raise ParameterError(f"gaussian_sigma must be >= 0, got {self.gaussian_sigma}")

    def describe(self) -> dict:
        """Chain parameters for report metadata."""
        return asdict(self)


def gamma_correct(img, gamma: float) -> np.ndarray:
    """Apply the power-law mapping ``out = 255 * (in / 255) ** gamma``."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    img = as_image(img)
    return 255.0 * (img / 255.0) ** gamma


def hist_equalize(img) -> np.ndarray:
    """Histogram equalization via the empirical CDF over 256 8-bit bins.

    Fractional intensities are binned by round-to-nearest; outputs are
    ``255 * CDF(bin)`` and remain real-valued. A constant image maps to a
    constant 255 (its single bin has CDF 1).
    """
    img = as_image(img)
    bins = np.clip(np.rint(img), 0, 255).astype(np.intp)
    counts = np.bincount(bins.ravel(), minlength=256)
    cdf = np.cumsum(counts) / img.size
    return 255.0 * cdf[bins]


def median_filter(img, kernel: int) -> np.ndarray:
    """Median over a kernel x kernel neighborhood, edge-replicated borders."""
    if kernel < 1 or kernel % 2 == 0:
        raise ParameterError(f"kernel must be odd and >= 1, got {kernel}")
    img = as_image(img)
    if kernel == 1:
        return img.copy()
    return ndimage.median_filter(img, size=kernel, mode="nearest")


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(3 * sigma)."""
    if sigma <= 0:
        return np.array([1.0])
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian convolution; sigma = 0 is the identity."""
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    img = as_image(img)
    if sigma == 0:
        return img.copy()
    k = gaussian_kernel1d(sigma)
    out = ndimage.convolve1d(img, k, axis=0, mode="nearest")
    out = ndimage.convolve1d(out, k, axis=1, mode="nearest")
    # normalized taps can overshoot the range by rounding noise only
    return np.clip(out, 0.0, 255.0)


def apply_preprocessing(img, cfg: PreprocessConfig) -> np.ndarray:
    """Run the configured chain (gamma, equalize, median, Gaussian)."""
    out = as_image(img)
    if cfg.gamma != 1.0:
        out = gamma_correct(out, cfg.gamma)
    if cfg.equalize:
        out = hist_equalize(out)
    if cfg.median_kernel > 1:
        out = median_filter(out, cfg.median_kernel)
    if cfg.gaussian_sigma > 0:
        out = gaussian_blur(out, cfg.gaussian_sigma)
    return out
