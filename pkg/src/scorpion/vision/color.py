"""Color-space conversion, HSV segmentation and mask refinement.

HSV follows the standard hexcone definition: H in [0, 360), S and V in
[0, 1].  Morphology uses a disc structuring element; erosion treats
pixels outside the frame as foreground and dilation discards structure
falling off the edge, the adjoint pair that makes opening and closing
idempotent.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .render import ImageFrame


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """RGB in [0,1] (any leading shape, last axis 3) -> HSV array."""
    rgb = np.asarray(rgb, dtype=float)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.max(rgb, axis=-1)
    c = v - np.min(rgb, axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        hr = np.mod((g - b) / c, 6.0)
        hg = (b - r) / c + 2.0
        hb = (r - g) / c + 4.0
    h = np.where(v == r, hr, np.where(v == g, hg, hb))
    h = np.where(c == 0, 0.0, h) * 60.0
    return np.stack([np.mod(h, 360.0), s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    """HSV (H deg, S, V in [0,1]) -> RGB in [0,1]."""
    hsv = np.asarray(hsv, dtype=float)
    h = np.mod(hsv[..., 0], 360.0) / 60.0
    s, v = hsv[..., 1], hsv[..., 2]
    c = v * s
    x = c * (1.0 - np.abs(np.mod(h, 2.0) - 1.0))
    m = v - c
    z = np.zeros_like(c)
    sector = np.floor(h).astype(int) % 6
    rgb_by_sector = [
        (c, x, z), (x, c, z), (z, c, x), (z, x, c), (x, z, c), (c, z, x),
    ]
    r = np.choose(sector, [t[0] for t in rgb_by_sector])
    g = np.choose(sector, [t[1] for t in rgb_by_sector])
    b = np.choose(sector, [t[2] for t in rgb_by_sector])
    return np.stack([r + m, g + m, b + m], axis=-1)


def hsv_segment(frame: ImageFrame, hsv_lo, hsv_hi) -> np.ndarray:
    """Boolean mask of pixels inside the HSV interval.

    hsv_lo/hsv_hi are (hue_deg, sat, val) triples.  A hue lower bound
    above the upper bound means the interval wraps through 0/360 (the
    red case).  Saturation and value bounds are ordinary.
    """
    h_lo, s_lo, v_lo = (float(x) for x in hsv_lo)
    h_hi, s_hi, v_hi = (float(x) for x in hsv_hi)
    if not (s_lo <= s_hi and v_lo <= v_hi):
        raise ValueError("S and V bounds must be ordered lo <= hi")
    hsv = rgb_to_hsv(frame.pixels.astype(float) / 255.0)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    if h_lo <= h_hi:
        hue_ok = (h >= h_lo) & (h <= h_hi)
    else:  # wrap-around interval, e.g. [345, 15]
        hue_ok = (h >= h_lo) | (h <= h_hi)
    return hue_ok & (s >= s_lo) & (s <= s_hi) & (v >= v_lo) & (v <= v_hi)


def disc_element(radius: int) -> np.ndarray:
    """Disc structuring element: offsets with dy^2 + dx^2 <= r^2."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    return dy * dy + dx * dx <= radius * radius


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius == 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, structure=disc_element(radius), border_value=1)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius == 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=disc_element(radius), border_value=0)


def mask_open(mask: np.ndarray, radius: int) -> np.ndarray:
    return dilate(erode(mask, radius), radius)


def mask_close(mask: np.ndarray, radius: int) -> np.ndarray:
    return erode(dilate(mask, radius), radius)


def morph_refine(mask: np.ndarray, open_radius: int, close_radius: int) -> np.ndarray:
    """Open (kills specks) then close (fills pinholes) with disc elements."""
    return mask_close(mask_open(np.asarray(mask, dtype=bool), open_radius), close_radius)
