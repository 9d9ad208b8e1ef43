"""Closed-contour extraction from edge masks.

Each 8-connected edge component is walked with Moore-neighbor tracing
(clockwise scan starting from the north neighbor, rotating the search
direction after each step). The walk is a deterministic map over
(pixel, entry-direction) states, so it terminates exactly when a state
repeats; the repeated cycle is the boundary walk. A walk only counts as a
closed contour when it encloses a non-empty interior: walking out and
back along an open arc revisits the arc pixels without forming a loop.
Contours shorter than the validity threshold are discarded and the
smallest enclosed region is selected downstream as the pupil candidate.

Points are (x, y) pixel coordinates; masks are indexed [y, x].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ParameterError, RegionNotFoundError

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# Clockwise 8-neighborhood starting at north, as (dx, dy) with y down.
_MOORE = (
    (0, -1),   # N
    (1, -1),   # NE
    (1, 0),    # E
    (1, 1),    # SE
    (0, 1),    # S
    (-1, 1),   # SW
    (-1, 0),   # W
    (-1, -1),  # NW
)
_MOORE_INDEX = {off: k for k, off in enumerate(_MOORE)}


@dataclass
class Contour:
    """An ordered boundary walk; consecutive points are 8-neighbors.

    Closed contours wrap around (the last point is an 8-neighbor of the
    first) and start at their topmost-leftmost point.
    """

    points: np.ndarray  # (N, 2) int array of (x, y)
    closed: bool = True
    _region: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def length(self) -> int:
        return len(self.points)

    @property
    def start(self) -> tuple[int, int]:
        return int(self.points[0, 0]), int(self.points[0, 1])


def _trace_component(mask: np.ndarray, start: tuple[int, int], size: int) -> tuple[np.ndarray, bool]:
    """Moore-neighbor walk around one component.

    `start` is the component's first pixel in raster order (topmost row,
    then leftmost), so its north neighbor is background.
    """
    h, w = mask.shape
    sx, sy = start

    points: list[tuple[int, int]] = [(sx, sy)]
    seen: dict[tuple[int, int, tuple[int, int]], int] = {(sx, sy, (0, 0)): 0}
    cur = (sx, sy)
    back = (sx, sy - 1)
    max_steps = 8 * size + 8

    for _ in range(max_steps):
        k = _MOORE_INDEX[(back[0] - cur[0], back[1] - cur[1])]
        nxt = None
        for j in range(1, 9):
            dx, dy = _MOORE[(k + j) % 8]
            nx, ny = cur[0] + dx, cur[1] + dy
            if 0 <= nx < w and 0 <= ny < h and mask[ny, nx]:
                nxt = (nx, ny)
                pdx, pdy = _MOORE[(k + j - 1) % 8]
                new_back = (cur[0] + pdx, cur[1] + pdy)
                break
        if nxt is None:  # isolated single pixel
            return np.array(points, dtype=np.intp), False
        entry = (nxt[0] - cur[0], nxt[1] - cur[1])
        state = (nxt[0], nxt[1], entry)
        if state in seen:
            cycle = points[seen[state]:]
            return np.array(cycle, dtype=np.intp), len(cycle) >= 3
        seen[state] = len(points)
        points.append(nxt)
        cur, back = nxt, new_back
    # defensive cap; unreachable for finite components
    return np.array(points, dtype=np.intp), False


def _canonical_rotation(points: np.ndarray) -> np.ndarray:
    """Rotate a closed cycle so it starts at its topmost-leftmost point."""
    order = np.lexsort((points[:, 0], points[:, 1]))
    return np.roll(points, -int(order[0]), axis=0)


def extract_closed_contours(edges: np.ndarray, min_length: int = 100) -> list[Contour]:
    """Trace every edge component and keep closed contours of at least
    `min_length` walk steps (the validity filter for candidate regions)."""
    contours, _ = _extract_with_stats(edges, min_length)
    return contours


def _extract_with_stats(edges: np.ndarray, min_length: int) -> tuple[list[Contour], int]:
    """As extract_closed_contours, also counting contours dropped as too
    short (diagnostic for not-found errors)."""
    edges = np.asarray(edges, dtype=bool)
    if edges.ndim != 2:
        raise ParameterError(f"edge mask must be 2-D, got shape {edges.shape}")
    labels, n = ndimage.label(edges, structure=_EIGHT_CONNECTED)
    if n == 0:
        return [], 0

    counts = np.bincount(labels.ravel())
    ys, xs = np.nonzero(labels)
    order = np.arange(ys.size)  # nonzero() yields raster order already
    first_seen: dict[int, tuple[int, int]] = {}
    for idx in order:
        lab = int(labels[ys[idx], xs[idx]])
        if lab not in first_seen:
            first_seen[lab] = (int(xs[idx]), int(ys[idx]))
            if len(first_seen) == n:
                break

    contours: list[Contour] = []
    dropped = 0
    # a component of P pixels cannot produce a walk longer than ~2P, so
    # small components are skipped without tracing
    min_pixels = max(1, (min_length - 2) // 2)
    for lab in sorted(first_seen):
        size = int(counts[lab])
        if size < min_pixels:
            dropped += 1
            continue
        pts, closed = _trace_component(labels == lab, first_seen[lab], size)
        if not closed or len(pts) < min_length:
            dropped += 1
            continue
        contour = Contour(points=_canonical_rotation(pts), closed=True)
        if region_area(contour) <= contour.length:  # no interior: open arc
            dropped += 1
            continue
        contours.append(contour)
    return contours, dropped


def fill_region(contour: Contour) -> np.ndarray:
    """Pixels of the region bounded by a closed contour, as an (N, 2)
    array of (x, y): the contour pixels plus the even-odd interior.

    Interior membership uses the half-open scanline crossing rule on the
    polygon through the contour's pixel centers, so out-and-back walks
    (degenerate "loops" around open arcs) enclose nothing beyond their own
    pixels.
    """
    if contour._region is not None:
        return contour._region
    pts = contour.points
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    w, h = int(x1 - x0 + 1), int(y1 - y0 + 1)
    grid = np.zeros((h, w), dtype=bool)

    nxt = np.roll(pts, -1, axis=0)
    dy = nxt[:, 1] - pts[:, 1]
    crossing = dy != 0
    lower_is_first = dy[crossing] > 0
    cx = np.where(lower_is_first, pts[crossing, 0], nxt[crossing, 0])
    cy = np.where(lower_is_first, pts[crossing, 1], nxt[crossing, 1])

    order = np.lexsort((cx, cy))
    cx, cy = cx[order], cy[order]
    row_starts = np.searchsorted(cy, np.arange(y0, y1 + 1))
    row_ends = np.searchsorted(cy, np.arange(y0, y1 + 1), side="right")
    for r, (s, e) in enumerate(zip(row_starts, row_ends)):
        xs_row = cx[s:e]
        for a, b in zip(xs_row[0::2], xs_row[1::2]):
            if b > a:
                grid[r, a - x0:b - x0] = True
    grid[pts[:, 1] - y0, pts[:, 0] - x0] = True

    ys, xs = np.nonzero(grid)
    region = np.column_stack((xs + x0, ys + y0)).astype(np.intp)
    contour._region = region
    return region


def region_area(contour: Contour) -> int:
    """Pixel count of the region bounded by the contour."""
    return len(fill_region(contour))


def smallest_valid_region(contours: list[Contour]) -> Contour:
    """The closed contour enclosing the smallest region.

    Ties break by smaller perimeter, then by topmost-leftmost start point.
    """
    candidates = [c for c in contours if c.closed]
    if not candidates:
        raise RegionNotFoundError("no closed contour available")

    def key(c: Contour):
        sx, sy = c.start
        return (region_area(c), c.length, sy, sx)

    return min(candidates, key=key)
