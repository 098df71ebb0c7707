"""Calibrated length measurement with lens-distortion correction.

Calibration derives a pixels-per-meter scale from a reference segment;
measurement converts a pixel segment back to meters through the same
undistortion.  Both share one Brown-Conrady radial model so a segment
measured against itself returns the reference length exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .color import rgb_to_hsv
from .render import CameraIntrinsics, ImageFrame


class CalibrationError(ValueError):
    """Unusable calibration inputs."""


@dataclass(frozen=True)
class CalibrationScale:
    """Pixels-per-meter factor and the measurement it came from."""

    pixels_per_meter: float
    reference_length_m: float
    reference_pixel_distance: float


def distort_point(p, intr: CameraIntrinsics) -> tuple[float, float]:
    """Ideal pixel -> observed (distorted) pixel."""
    xn = (p[0] - intr.cx) / intr.fx
    yn = (p[1] - intr.cy) / intr.fy
    r2 = xn * xn + yn * yn
    g = 1.0 + intr.k1 * r2 + intr.k2 * r2 * r2
    return intr.fx * xn * g + intr.cx, intr.fy * yn * g + intr.cy


def undistort_point(p, intr: CameraIntrinsics | None, iters: int = 25) -> tuple[float, float]:
    """Observed pixel -> ideal pinhole pixel (identity without intrinsics)."""
    if intr is None or not intr.has_distortion():
        return float(p[0]), float(p[1])
    xd = (p[0] - intr.cx) / intr.fx
    yd = (p[1] - intr.cy) / intr.fy
    xn, yn = xd, yd
    for _ in range(iters):
        r2 = xn * xn + yn * yn
        g = 1.0 + intr.k1 * r2 + intr.k2 * r2 * r2
        xn, yn = xd / g, yd / g
    return intr.fx * xn + intr.cx, intr.fy * yn + intr.cy


def calibrate(
    p1,
    p2,
    reference_length_m: float,
    intrinsics: CameraIntrinsics | None = None,
) -> CalibrationScale:
    """Scale factor from a segment of known physical length."""
    if reference_length_m <= 0:
        raise CalibrationError("reference length must be positive")
    if tuple(map(float, p1)) == tuple(map(float, p2)):
        raise CalibrationError("calibration points must be distinct")
    a = undistort_point(p1, intrinsics)
    b = undistort_point(p2, intrinsics)
    dist = math.hypot(b[0] - a[0], b[1] - a[1])
    if dist <= 0:
        raise CalibrationError("calibration points collapse after undistortion")
    return CalibrationScale(
        pixels_per_meter=dist / reference_length_m,
        reference_length_m=reference_length_m,
        reference_pixel_distance=dist,
    )


def _snap_subpixel(p, frame: ImageFrame) -> tuple[float, float]:
    """Move a point to the nearby gradient-magnitude peak (5-px window).

    Finds the strongest-gradient pixel within +/-2 px, then refines each
    axis with a three-point quadratic fit.  Falls back to the input when
    the window has no gradient (flat region).
    """
    gray = rgb_to_hsv(frame.pixels.astype(float) / 255.0)[..., 2]
    gy, gx = np.gradient(gray)
    mag = np.hypot(gx, gy)
    h, w = mag.shape
    px, py = int(round(p[0])), int(round(p[1]))
    x0, x1 = max(px - 2, 0), min(px + 3, w)
    y0, y1 = max(py - 2, 0), min(py + 3, h)
    window = mag[y0:y1, x0:x1]
    if window.size == 0 or np.all(window == 0):
        return float(p[0]), float(p[1])
    iy, ix = np.unravel_index(int(np.argmax(window)), window.shape)
    cx, cy = ix + x0, iy + y0

    def refine(center, lo, hi, line):
        if center <= lo or center >= hi - 1:
            return float(center)
        f_m, f_0, f_p = line[center - 1], line[center], line[center + 1]
        denom = f_m - 2.0 * f_0 + f_p
        if denom >= 0:  # not a peak
            return float(center)
        return float(center + 0.5 * (f_m - f_p) / denom)

    rx = refine(cx, 0, w, mag[cy, :])
    ry = refine(cy, 0, h, mag[:, cx])
    return rx, ry


def measure_length(
    p1,
    p2,
    scale: CalibrationScale,
    intrinsics: CameraIntrinsics | None = None,
    frame: ImageFrame | None = None,
    subpixel: bool = True,
) -> float:
    """Physical length of a pixel segment under the calibrated scale.

    When a frame is supplied the endpoints are first snapped to the
    local gradient peak (sub-pixel), unless subpixel=False.
    """
    if scale.pixels_per_meter <= 0:
        raise ValueError("invalid calibration scale")
    if frame is not None:
        for p in (p1, p2):
            if not (0 <= p[0] < frame.width and 0 <= p[1] < frame.height):
                raise ValueError(f"point {p} outside frame")
        if subpixel:
            p1 = _snap_subpixel(p1, frame)
            p2 = _snap_subpixel(p2, frame)
    a = undistort_point(p1, intrinsics)
    b = undistort_point(p2, intrinsics)
    return math.hypot(b[0] - a[0], b[1] - a[1]) / scale.pixels_per_meter
