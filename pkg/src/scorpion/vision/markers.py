"""Contour extraction and T-marker validation.

Contours are 8-connected components of a binary mask; each reports its
pixel area, half-open bounding box and centroid.  T validation
normalizes a contour's box onto a 3x3 occupancy grid and compares it to
the canonical T template in all four right-angle orientations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .color import hsv_segment, morph_refine
from .render import ImageFrame

MIN_T_AREA = 25  # px; anything smaller cannot carry the 3x3 pattern

# occupied cells of an upright T on a 3x3 grid
T_TEMPLATE = np.array(
    [
        [True, True, True],
        [False, True, False],
        [False, True, False],
    ]
)


@dataclass(frozen=True)
class Contour:
    """One connected component; box is half-open (x_min, y_min, x_max, y_max)."""

    area: int
    box: tuple[int, int, int, int]
    centroid: tuple[float, float]


@dataclass(frozen=True)
class TShapeResult:
    is_t: bool
    score: float
    reason: str = ""


@dataclass(frozen=True)
class MarkerDetection:
    color_name: str
    contour: Contour
    shape: TShapeResult


def extract_contours(mask: np.ndarray) -> list[Contour]:
    """Connected components (8-connectivity), sorted by area descending."""
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    out = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        ys, xs = sl
        region = labels[sl] == idx
        area = int(region.sum())
        cy, cx = ndimage.center_of_mass(region)
        out.append(
            Contour(
                area=area,
                box=(xs.start, ys.start, xs.stop, ys.stop),
                centroid=(float(cx + xs.start), float(cy + ys.start)),
            )
        )
    out.sort(key=lambda c: (-c.area, c.box[1], c.box[0]))
    return out


def _occupancy_grid(sub: np.ndarray) -> np.ndarray:
    """3x3 grid; a cell is occupied iff at least half its pixels are set."""
    grid = np.zeros((3, 3), dtype=bool)
    rows = np.array_split(np.arange(sub.shape[0]), 3)
    cols = np.array_split(np.arange(sub.shape[1]), 3)
    for i, rr in enumerate(rows):
        for j, cc in enumerate(cols):
            cell = sub[np.ix_(rr, cc)]
            grid[i, j] = cell.size > 0 and cell.mean() >= 0.5
    return grid


def validate_t_shape(contour: Contour, mask: np.ndarray) -> TShapeResult:
    """Score a contour against the T template over 4 rotations."""
    if contour.area < MIN_T_AREA:
        return TShapeResult(is_t=False, score=0.0, reason="too-small")
    x0, y0, x1, y1 = contour.box
    sub = np.asarray(mask, dtype=bool)[y0:y1, x0:x1]
    best = 0.0
    for k in range(4):
        grid = _occupancy_grid(np.rot90(sub, k))
        best = max(best, float(np.mean(grid == T_TEMPLATE)))
    return TShapeResult(is_t=best == 1.0, score=best)


def detect_markers(
    frame: ImageFrame,
    bands: dict,
    open_radius: int = 1,
    close_radius: int = 2,
    min_area: int = MIN_T_AREA,
) -> list[MarkerDetection]:
    """Full per-band pipeline: segment, refine, contour, validate.

    bands maps a color name to an object with hue_lo/hue_hi/sat_min/
    val_min attributes (the config HsvBand).  Returns one entry per
    surviving contour, largest first within each color.
    """
    out: list[MarkerDetection] = []
    for name, band in bands.items():
        mask = hsv_segment(
            frame,
            (band.hue_lo, band.sat_min, band.val_min),
            (band.hue_hi, 1.0, 1.0),
        )
        refined = morph_refine(mask, open_radius, close_radius)
        for contour in extract_contours(refined):
            if contour.area < min_area:
                continue
            out.append(
                MarkerDetection(
                    color_name=name,
                    contour=contour,
                    shape=validate_t_shape(contour, refined),
                )
            )
    return out
