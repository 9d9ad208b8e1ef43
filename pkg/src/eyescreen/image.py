"""Grayscale image conventions and 8-bit PNG / binary PGM I/O.

An image is a 2-D float64 array indexed ``img[y, x]`` (row y, column x)
with intensities in [0, 255]. Intensities stay real-valued through the
pipeline so repeated filtering does not accumulate quantization error;
they are rounded to 8 bits only when written to disk.
"""
from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import ParameterError


def as_image(data) -> np.ndarray:
    """Validate `data` as a grayscale image and return it as float64."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim != 2:
        raise ParameterError(f"expected a 2-D image, got shape {img.shape}")
    if img.size == 0:
        raise ParameterError("empty image")
    if not np.all(np.isfinite(img)):
        raise ParameterError("image contains non-finite intensities")
    lo, hi = float(img.min()), float(img.max())
    if lo < 0.0 or hi > 255.0:
        raise ParameterError(f"intensities outside [0, 255]: min={lo}, max={hi}")
    return img


def quantize_u8(img) -> np.ndarray:
    """Round to the nearest 8-bit level (used only at file output)."""
    return np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, 255).astype(np.uint8)


def load_image(path) -> np.ndarray:
    """Load an 8-bit grayscale PNG or PGM file as a float64 image."""
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        return np.asarray(im, dtype=np.float64)


def save_png(img, path) -> None:
    Image.fromarray(quantize_u8(as_image(img)), mode="L").save(str(path), format="PNG")


def save_pgm(img, path) -> None:
    """Write a binary (P5) PGM with maxval 255."""
    u8 = quantize_u8(as_image(img))
    h, w = u8.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(u8.tobytes())
