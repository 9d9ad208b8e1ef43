"""Exact Euclidean distance transforms, signed distance maps, and
boundary bands over binary masks.

The transform is the two-pass squared-distance lower-envelope algorithm:
an exact 1-D pass down the columns followed by a parabola-envelope pass
along the rows. Distances are measured to the region boundary, defined as
the foreground pixels having a 4-neighbor background pixel inside the
frame (pixels outside the frame count as neither).
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, ParameterError

_INF = np.inf


def _as_mask(mask) -> np.ndarray:
    m = np.asarray(mask)
    if m.ndim != 2 or m.size == 0:
        raise ParameterError(f"mask must be a non-empty 2-D array, got shape {m.shape}")
    return m.astype(bool)


def region_boundary(mask) -> np.ndarray:
    """Foreground pixels with an in-frame 4-neighbor in the background."""
    m = _as_mask(mask)
    bg = ~m
    adjacent = np.zeros_like(m)
    adjacent[:-1, :] |= bg[1:, :]
    adjacent[1:, :] |= bg[:-1, :]
    adjacent[:, :-1] |= bg[:, 1:]
    adjacent[:, 1:] |= bg[:, :-1]
    return m & adjacent


def _envelope_pass_sq(f: np.ndarray) -> np.ndarray:
    """1-D squared-distance transform of sampled function `f` (lower
    envelope of parabolas); `f` may contain +inf."""
    n = f.size
    d = np.full(n, _INF)
    finite = np.flatnonzero(np.isfinite(f))
    if finite.size == 0:
        return d
    v = np.empty(finite.size, dtype=np.intp)  # parabola apex positions
    z = np.empty(finite.size + 1)             # envelope breakpoints
    k = 0
    v[0] = finite[0]
    z[0], z[1] = -_INF, _INF
    for q in finite[1:]:
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]))
        k += 1
        v[k] = q
        z[k], z[k + 1] = s, _INF
    k = 0
    for j in range(n):
        while z[k + 1] < j:
            k += 1
        dj = j - v[k]
        d[j] = dj * dj + f[v[k]]
    return d


def exact_edt(seeds) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest True pixel.

    All-False input yields +inf everywhere.
    """
    seeds = _as_mask(seeds)
    h, w = seeds.shape

    # vertical pass: exact 1-D distances down each column via two sweeps
    dist = np.full((h, w), _INF)
    dist[seeds] = 0.0
    for y in range(1, h):
        np.minimum(dist[y], dist[y - 1] + 1.0, out=dist[y])
    for y in range(h - 2, -1, -1):
        np.minimum(dist[y], dist[y + 1] + 1.0, out=dist[y])
    sq = dist * dist

    out = np.empty_like(sq)
    for y in range(h):
        out[y] = _envelope_pass_sq(sq[y])
    return np.sqrt(out)


def signed_distance_map(mask) -> np.ndarray:
    """Signed Euclidean distance to the region boundary: negative inside
    the region, positive outside, zero on the boundary itself.

    Raises for all-foreground or all-background masks, whose boundary is
    undefined.
    """
    m = _as_mask(mask)
    if m.all() or not m.any():
        raise DegenerateInputError(
            "signed distance map needs both foreground and background pixels"
        )
    d = exact_edt(region_boundary(m))
    return np.where(m, -d, d)


def boundary_band(mask, tau: float) -> np.ndarray:
    """Pixels within Euclidean distance `tau` of the region boundary.

    tau = 0 selects exactly the boundary pixels. An empty mask (class
    absent) yields an empty band.
    """
    if tau < 0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    m = _as_mask(mask)
    bnd = region_boundary(m)
    if not bnd.any():
        return np.zeros_like(m)
    return exact_edt(bnd) <= tau


def save_sdm(sdm, path) -> None:
    """Export a signed distance map as a 32-bit float binary grid (.npy)."""
    np.save(path, np.asarray(sdm, dtype=np.float32))


def load_sdm(path) -> np.ndarray:
    grid = np.load(path)
    if grid.ndim != 2 or grid.dtype != np.float32:
        raise ParameterError(f"{path} is not a 2-D float32 grid")
    return grid
