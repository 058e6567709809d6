"""Canny edge detector: smoothing, Sobel gradients, NMS, hysteresis.

Images are 2-D float arrays indexed ``[v, u]`` (row, column) with rows
growing downward, so a direction of pi/2 points to larger row indices.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np


class ImageTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class GradientField:
    magnitude: np.ndarray
    direction: np.ndarray  # radians in (-pi, pi]


def check_image(img) -> np.ndarray:
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2 or min(arr.shape) < 1:
        raise ValueError("image must be a non-empty 2-D grid")
    if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
        raise ValueError("intensities must be finite and within [0, 255]")
    return arr


def gaussian_kernel(sigma: float, radius: Optional[int] = None) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if radius is None:
        radius = int(math.ceil(3.0 * sigma))
    if radius < 0:
        raise ValueError("radius must be non-negative")
    r = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


def correlate(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Correlation with replicated borders; the output keeps the input shape."""
    kh, kw = kernel.shape
    ry, rx = kh // 2, kw // 2
    padded = np.pad(img, ((ry, ry), (rx, rx)), mode="edge")
    h, w = img.shape
    out = np.zeros((h, w))
    for dy in range(kh):
        for dx in range(kw):
            if kernel[dy, dx] != 0.0:
                out += kernel[dy, dx] * padded[dy:dy + h, dx:dx + w]
    return out


def smooth(img, sigma: float, radius: Optional[int] = None) -> np.ndarray:
    arr = check_image(img)
    out = correlate(arr, gaussian_kernel(sigma, radius))
    # convex combination; clip only the rounding fuzz
    return np.clip(out, arr.min(), arr.max())


SOBEL_U = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_V = SOBEL_U.T

# magnitudes are rounded to this many decimals so that mirror-symmetric
# inputs produce exactly tied values regardless of summation order
_MAG_DECIMALS = 9


def gradients(img) -> GradientField:
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2 or min(arr.shape) < 3:
        raise ImageTooSmall("gradients need an image of at least 3x3 pixels")
    gu = correlate(arr, SOBEL_U)
    gv = correlate(arr, SOBEL_V)
    mag = np.round(np.hypot(gu, gv), _MAG_DECIMALS)
    theta = np.arctan2(gv, gu)
    theta[theta <= -math.pi] = math.pi
    return GradientField(mag, theta)


def threshold(field: GradientField, t: float) -> np.ndarray:
    """Single threshold: keep magnitudes strictly above ``t``."""
    if t < 0:
        raise ValueError("threshold must be non-negative")
    m = field.magnitude
    return np.where(m > t, m, 0.0)


# neighbour offsets (drow, dcol) for the 8 direction octants, counter to
# the angle measured from +u toward +v
_OCTANT_STEP = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)]


def direction_octant(theta: np.ndarray) -> np.ndarray:
    return np.mod(np.rint(theta / (math.pi / 4.0)).astype(int), 8)


def _shifted(m: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Value of the neighbour at (row+dr, col+dc); zero outside the image."""
    h, w = m.shape
    p = np.pad(m, 1)
    return p[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]


def nms_neighbours(field: GradientField):
    """Magnitudes ahead of and behind each pixel along its quantized gradient."""
    m = field.magnitude
    octant = direction_octant(field.direction)
    ahead = np.zeros_like(m)
    behind = np.zeros_like(m)
    for k, (dr, dc) in enumerate(_OCTANT_STEP):
        sel = octant == k
        if sel.any():
            ahead[sel] = _shifted(m, dr, dc)[sel]
            behind[sel] = _shifted(m, -dr, -dc)[sel]
    return ahead, behind


def non_max_suppression(field: GradientField) -> np.ndarray:
    """Keep pixels that are maxima along the gradient (4 axis bins).

    A tie with the pixel behind is kept, a tie with the pixel ahead is not,
    so an exactly symmetric ridge keeps one pixel on its uphill side.
    """
    m = field.magnitude
    ahead, behind = nms_neighbours(field)
    keep = (m > ahead) & (m >= behind)
    return np.where(keep, m, 0.0)


def hysteresis(thinned: np.ndarray, t_low: float, t_high: float) -> np.ndarray:
    if not 0 <= t_low <= t_high:
        raise ValueError("thresholds must satisfy 0 <= t_low <= t_high")
    m = np.asarray(thinned, dtype=float)
    candidate = (m > 0) & (m >= t_low)
    strong = candidate & (m >= t_high)
    kept = strong.copy()
    h, w = m.shape
    queue = deque(zip(*np.nonzero(strong)))
    while queue:
        r, c = queue.popleft()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and candidate[rr, cc] and not kept[rr, cc]:
                    kept[rr, cc] = True
                    queue.append((rr, cc))
    return np.where(kept, 255.0, 0.0)


def default_thresholds(thinned_or_magnitude: np.ndarray):
    t_high = 0.2 * float(np.max(thinned_or_magnitude, initial=0.0))
    return 0.5 * t_high, t_high


@dataclass(frozen=True)
class CannyResult:
    smoothed: np.ndarray
    field: GradientField
    thinned: np.ndarray
    edges: np.ndarray
    t_low: float
    t_high: float


def canny_stages(img, sigma: float = 1.4, t_low: Optional[float] = None,
                 t_high: Optional[float] = None) -> CannyResult:
    smoothed = smooth(img, sigma)
    field = gradients(smoothed)
    thinned = non_max_suppression(field)
    if t_high is None:
        t_high = default_thresholds(field.magnitude)[1]
        if t_low is not None:
            t_high = max(t_high, t_low)
    if t_low is None:
        t_low = 0.5 * t_high
    edges = hysteresis(thinned, t_low, t_high)
    return CannyResult(smoothed, field, thinned, edges, t_low, t_high)


def canny(img, sigma: float = 1.4, t_low: Optional[float] = None, t_high: Optional[float] = None) -> np.ndarray:
    return canny_stages(img, sigma, t_low, t_high).edges


def stage_images(res: CannyResult) -> Dict[str, np.ndarray]:
    """8-bit renderings of each stage.

    Magnitude grids scale linearly so their maximum maps to 255 (all-zero
    grids stay zero); direction maps (-pi, pi] linearly onto (0, 255].
    """
    def scaled(m):
        top = float(m.max(initial=0.0))
        return m * (255.0 / top) if top > 0 else np.zeros_like(m)
    return {
        "smoothed": res.smoothed,
        "magnitude": scaled(res.field.magnitude),
        "direction": (res.field.direction + math.pi) * (255.0 / (2.0 * math.pi)),
        "nms": scaled(res.thinned),
        "edges": res.edges,
    }
