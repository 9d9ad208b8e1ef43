"""Pupil center localization from edge contours.

The pipeline detects edges, traces closed contours, keeps the smallest
valid enclosed region, and reports the centroid of its filled pixels as
the pupil center, plus the equivalent-area radius. Offsets against an
alignment target and a px-to-mm calibration convert the estimate into
actionable units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contours import Contour, _extract_with_stats, fill_region, smallest_valid_region
from .edges import CannyConfig, canny
from .errors import ParameterError, RegionNotFoundError


@dataclass
class PupilEstimate:
    """Pupil center (px), equivalent-area radius, and provenance."""

    cx: float
    cy: float
    radius: float
    contour: Contour
    region_area: int

    def to_record(self, mm_per_px: float | None = None) -> dict:
        rec = {
            "cx": self.cx,
            "cy": self.cy,
            "radius_px": self.radius,
            "contour_length": self.contour.length,
            "area_px": self.region_area,
        }
        if mm_per_px is not None:
            rec["radius_mm"] = self.radius * mm_per_px
        return rec


@dataclass(frozen=True)
class ScaleCalibration:
    """Image-to-world scale from a reference object of known size."""

    mm_per_px: float

    def to_mm(self, px: float) -> float:
        return px * self.mm_per_px


def centroid(region) -> tuple[float, float]:
    """Mean (x, y) of a set of pixel coordinates, shape (N, 2)."""
    pts = np.asarray(region, dtype=np.float64)
    if pts.size == 0:
        raise ParameterError("centroid of an empty region is undefined")
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ParameterError(f"region must be an (N, 2) array, got shape {pts.shape}")
    cx, cy = pts.mean(axis=0)
    return float(cx), float(cy)


def locate_pupil(img, cfg: CannyConfig | None = None, min_contour_length: int = 100) -> PupilEstimate:
    """Locate the pupil: edge detection, closed-contour tracing, smallest
    valid region, centroid of its fill."""
    edges = canny(img, cfg)
    contours, dropped = _extract_with_stats(edges, min_contour_length)
    if not contours:
        raise RegionNotFoundError(
            f"no closed contour of length >= {min_contour_length} found",
            n_short_contours=dropped,
        )
    best = smallest_valid_region(contours)
    region = fill_region(best)
    cx, cy = centroid(region)
    area = len(region)
    return PupilEstimate(
        cx=cx,
        cy=cy,
        radius=math.sqrt(area / math.pi),
        contour=best,
        region_area=area,
    )


def alignment_offset(estimate: PupilEstimate, target: tuple[float, float]) -> tuple[float, float]:
    """Motion (dx, dy) that would move the pupil center onto the target."""
    return float(target[0]) - estimate.cx, float(target[1]) - estimate.cy


def calibrate_scale(reference_px: float, reference_mm: float) -> ScaleCalibration:
    """mm-per-pixel scale from a reference object spanning `reference_px`
    pixels and `reference_mm` millimetres."""
    if reference_px <= 0 or reference_mm <= 0:
        raise ParameterError(
            f"reference lengths must be positive, got {reference_px} px, {reference_mm} mm"
        )
    return ScaleCalibration(mm_per_px=reference_mm / reference_px)
