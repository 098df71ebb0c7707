"""Photosphere stitching from a yaw sweep of pinhole views.

A survey rotates the vehicle in place while the camera grabs frames;
pairs of frames are related by a pure-rotation homography K R2' R1 K^-1.
Homographies are estimated with the normalized DLT inside RANSAC, and
frames are composited onto an equirectangular canvas with feathered
(hat-function) weights so the seams blend smoothly.

World frame: X forward at yaw 0, Y left, Z up.  A camera at yaw psi
looks along (cos psi, sin psi, 0); longitude is measured the same way,
so canvas column u maps to lon = -pi + 2 pi (u + 0.5) / W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .vision.render import ImageFrame


class StitchError(RuntimeError):
    """Estimation or coverage failure while building a photosphere."""


# camera axes (x right, y down, z forward) -> world axes at yaw 0
_BASE = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


@dataclass(frozen=True)
class PanoCamera:
    """Pinhole camera at a fixed yaw on the sphere."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    yaw_deg: float

    @classmethod
    def from_hfov(cls, yaw_deg: float, width: int = 320, height: int = 240,
                  hfov_deg: float = 50.0) -> "PanoCamera":
        fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
        return cls(width=width, height=height, fx=fx, fy=fx,
                   cx=(width - 1) / 2.0, cy=(height - 1) / 2.0, yaw_deg=yaw_deg)

    def intrinsic_matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def rotation(self) -> np.ndarray:
        """Camera-to-world rotation."""
        psi = math.radians(self.yaw_deg)
        c, s = math.cos(psi), math.sin(psi)
        rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return rz @ _BASE


@dataclass(frozen=True)
class PanoView:
    camera: PanoCamera
    frame: ImageFrame


def true_homography(cam_a: PanoCamera, cam_b: PanoCamera) -> np.ndarray:
    """Exact a->b homography for two rotation-only cameras."""
    k_b = cam_b.intrinsic_matrix()
    k_a = cam_a.intrinsic_matrix()
    h = k_b @ cam_b.rotation().T @ cam_a.rotation() @ np.linalg.inv(k_a)
    return h / h[2, 2]


def _normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Similarity transform taking the set to centroid 0, RMS radius sqrt(2)."""
    centroid = pts.mean(axis=0)
    d = pts - centroid
    rms = math.sqrt(float(np.mean(np.sum(d * d, axis=1))))
    if rms <= 0:
        raise StitchError("correspondence points are coincident")
    s = math.sqrt(2.0) / rms
    t = np.array([[s, 0.0, -s * centroid[0]],
                  [0.0, s, -s * centroid[1]],
                  [0.0, 0.0, 1.0]])
    return t, (pts - centroid) * s


def estimate_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized direct linear transform from >= 4 correspondences."""
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise StitchError("correspondences must be matching (n, 2) arrays")
    n = src.shape[0]
    if n < 4:
        raise StitchError(f"need at least 4 correspondences, got {n}")
    t1, sn = _normalize_points(src)
    t2, dn = _normalize_points(dst)
    a = np.zeros((2 * n, 9))
    x, y = sn[:, 0], sn[:, 1]
    u, v = dn[:, 0], dn[:, 1]
    a[0::2, 3] = -x
    a[0::2, 4] = -y
    a[0::2, 5] = -1.0
    a[0::2, 6] = v * x
    a[0::2, 7] = v * y
    a[0::2, 8] = v
    a[1::2, 0] = x
    a[1::2, 1] = y
    a[1::2, 2] = 1.0
    a[1::2, 6] = -u * x
    a[1::2, 7] = -u * y
    a[1::2, 8] = -u
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-10 * max(sv[0], 1.0):
        raise StitchError("degenerate correspondence configuration")
    h_norm = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t2) @ h_norm @ t1
    if abs(h[2, 2]) < 1e-12:
        raise StitchError("estimated homography is singular at the origin")
    return h / h[2, 2]


def apply_homography(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    ones = np.ones((pts.shape[0], 1))
    q = np.hstack([pts, ones]) @ h.T
    return q[:, :2] / q[:, 2:3]


def symmetric_transfer_error(h: np.ndarray, src: np.ndarray,
                             dst: np.ndarray) -> np.ndarray:
    """Per-correspondence d(Hx, x')^2 + d(H^-1 x', x)^2 in px^2."""
    h_inv = np.linalg.inv(h)
    fwd = apply_homography(h, src) - dst
    bwd = apply_homography(h_inv, dst) - src
    return np.sum(fwd * fwd, axis=1) + np.sum(bwd * bwd, axis=1)


def relative_yaw(h: np.ndarray, cam_a: PanoCamera, cam_b: PanoCamera) -> float:
    """Yaw increment (deg, b relative to a) implied by an a->b homography.

    For a rotation-only rig H = K_b R^T K_a up to scale; the rotation is
    recovered by orthogonal projection, so measurement noise in H is
    tolerated.  Lets a manifest-supplied yaw guess be refined from image
    correspondences: yaw_b = yaw_a + relative_yaw(h, a, b).
    """
    m = np.linalg.inv(cam_b.intrinsic_matrix()) @ h @ cam_a.intrinsic_matrix()
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        r = u @ np.diag([1.0, 1.0, -1.0]) @ vt
    # r is cam_b <- cam_a; express it about the world vertical
    rz = _BASE @ r.T @ _BASE.T
    return math.degrees(math.atan2(rz[1, 0], rz[0, 0]))


def _collinear_triple(pts: np.ndarray, tol: float = 1e-6) -> bool:
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            for k in range(j + 1, len(pts)):
                d1 = pts[j] - pts[i]
                d2 = pts[k] - pts[i]
                if abs(d1[0] * d2[1] - d1[1] * d2[0]) < tol:
                    return True
    return False


@dataclass(frozen=True)
class RansacResult:
    homography: np.ndarray
    inliers: np.ndarray  # boolean mask over the input correspondences
    trials: int


def ransac_homography(
    src: np.ndarray,
    dst: np.ndarray,
    threshold_px: float = 2.0,
    confidence: float = 0.999,
    max_trials: int = 10_000,
    seed: int = 0,
) -> RansacResult:
    """Robust homography fit; symmetric transfer error gates inliers.

    The trial budget adapts to the observed inlier ratio w via the
    standard log(1-confidence) / log(1 - w^4) bound, capped at
    max_trials.  The best model is refit on its full inlier set.
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    n = src.shape[0]
    if n < 4:
        raise StitchError(f"need at least 4 correspondences, got {n}")
    if not 0.0 < confidence < 1.0:
        raise StitchError("confidence must be in (0, 1)")
    rng = np.random.default_rng(seed)
    thresh_sq = threshold_px * threshold_px
    best_count = 0
    best_mask: np.ndarray | None = None
    needed = max_trials
    trials = 0
    while trials < min(needed, max_trials):
        trials += 1
        idx = rng.choice(n, size=4, replace=False)
        if _collinear_triple(src[idx]) or _collinear_triple(dst[idx]):
            continue
        try:
            h = estimate_homography(src[idx], dst[idx])
        except StitchError:
            continue
        err = symmetric_transfer_error(h, src, dst)
        mask = err < thresh_sq
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
            w = count / n
            if w >= 1.0:
                break
            if w > 0:
                needed = math.ceil(math.log(1.0 - confidence)
                                   / math.log(1.0 - w ** 4))
    if best_mask is None or best_count < 4:
        raise StitchError("no homography consensus found")
    h = estimate_homography(src[best_mask], dst[best_mask])
    final_mask = symmetric_transfer_error(h, src, dst) < thresh_sq
    if int(final_mask.sum()) >= 4:
        h = estimate_homography(src[final_mask], dst[final_mask])
    else:
        final_mask = best_mask
    return RansacResult(homography=h, inliers=final_mask, trials=trials)


# ---------------------------------------------------------------------------
# synthetic survey scene


def synthetic_texture(lon: np.ndarray, lat: np.ndarray) -> np.ndarray:
    """Smooth RGB texture on the sphere, periodic in longitude."""
    r = 0.5 + 0.35 * np.sin(3.0 * lon) * np.cos(2.0 * lat) + 0.15 * np.sin(lat)
    g = 0.5 + 0.35 * np.sin(5.0 * lon + 1.3) * np.cos(lat) - 0.15 * np.sin(3.0 * lat)
    b = 0.55 + 0.3 * np.cos(2.0 * lon - 0.7) * np.cos(lat) + 0.1 * np.cos(2.0 * lat)
    rgb = np.stack([r, g, b], axis=-1)
    return np.clip(rgb, 0.0, 1.0)


def camera_rays(cam: PanoCamera) -> np.ndarray:
    """World-frame unit ray for every pixel center, shape (h, w, 3)."""
    xs = (np.arange(cam.width) - cam.cx) / cam.fx
    ys = (np.arange(cam.height) - cam.cy) / cam.fy
    gx, gy = np.meshgrid(xs, ys)
    rays = np.stack([gx, gy, np.ones_like(gx)], axis=-1)
    rays = rays @ cam.rotation().T
    return rays / np.linalg.norm(rays, axis=-1, keepdims=True)


def ray_to_lonlat(rays: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lon = np.arctan2(rays[..., 1], rays[..., 0])
    lat = np.arcsin(np.clip(rays[..., 2], -1.0, 1.0))
    return lon, lat


def render_view(cam: PanoCamera) -> ImageFrame:
    """Sample the synthetic texture through the camera."""
    lon, lat = ray_to_lonlat(camera_rays(cam))
    rgb = synthetic_texture(lon, lat)
    px = np.clip(np.rint(rgb * 255.0), 0, 255).astype(np.uint8)
    return ImageFrame(width=cam.width, height=cam.height, pixels=px)


def yaw_sweep(
    n_frames: int = 12,
    width: int = 320,
    height: int = 240,
    hfov_deg: float = 50.0,
) -> list[PanoView]:
    """Evenly spaced survey rotation; 12 x 30 deg with 50 deg fov overlaps."""
    views = []
    for i in range(n_frames):
        cam = PanoCamera.from_hfov(360.0 * i / n_frames, width, height, hfov_deg)
        views.append(PanoView(camera=cam, frame=render_view(cam)))
    return views


def overlap_correspondences(
    cam_a: PanoCamera,
    cam_b: PanoCamera,
    n_points: int = 200,
    outlier_fraction: float = 0.0,
    noise_px: float = 0.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ground-truth pixel matches between two views, optionally corrupted.

    Returns (src, dst, is_true) where is_true marks untouched inliers.
    Outliers are replaced by uniform random positions in the target.
    """
    rng = np.random.default_rng(seed)
    h_ab = true_homography(cam_a, cam_b)
    src_list = []
    margin = 2.0
    while len(src_list) < n_points:
        cand = rng.uniform(
            [margin, margin],
            [cam_a.width - 1 - margin, cam_a.height - 1 - margin],
            size=(4 * n_points, 2),
        )
        proj = apply_homography(h_ab, cand)
        ok = (
            (proj[:, 0] >= margin)
            & (proj[:, 0] <= cam_b.width - 1 - margin)
            & (proj[:, 1] >= margin)
            & (proj[:, 1] <= cam_b.height - 1 - margin)
        )
        src_list.extend(cand[ok].tolist())
        if not ok.any():
            raise StitchError(
                f"views at {cam_a.yaw_deg:g} deg and {cam_b.yaw_deg:g} deg "
                "do not overlap"
            )
    src = np.array(src_list[:n_points])
    dst = apply_homography(h_ab, src)
    if noise_px > 0:
        dst = dst + rng.normal(0.0, noise_px, size=dst.shape)
    is_true = np.ones(n_points, dtype=bool)
    n_out = int(round(outlier_fraction * n_points))
    if n_out:
        which = rng.choice(n_points, size=n_out, replace=False)
        dst[which] = rng.uniform(
            [0.0, 0.0], [cam_b.width - 1.0, cam_b.height - 1.0], size=(n_out, 2)
        )
        is_true[which] = False
    return src, dst, is_true


# ---------------------------------------------------------------------------
# compositing


def _bilinear(pixels: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = pixels.shape[:2]
    x0 = np.clip(np.floor(x).astype(int), 0, w - 2)
    y0 = np.clip(np.floor(y).astype(int), 0, h - 2)
    fx = np.clip(x - x0, 0.0, 1.0)[..., None]
    fy = np.clip(y - y0, 0.0, 1.0)[..., None]
    p = pixels.astype(float)
    top = p[y0, x0] * (1 - fx) + p[y0, x0 + 1] * fx
    bot = p[y0 + 1, x0] * (1 - fx) + p[y0 + 1, x0 + 1] * fx
    return top * (1 - fy) + bot * fy


def _hat_weight(x: np.ndarray, extent: float) -> np.ndarray:
    """1 at the center of [0, extent-1], tapering linearly to 0 at the edges."""
    return np.clip(1.0 - np.abs(2.0 * x / (extent - 1.0) - 1.0), 0.0, 1.0)


@dataclass(frozen=True)
class Photosphere:
    pixels: np.ndarray  # (h, 2h, 3) uint8
    weight: np.ndarray  # (h, 2h) float, accumulated blend weight
    coverage_gaps: tuple[tuple[float, float], ...]  # equator gaps, degrees


def equator_gaps(weight: np.ndarray) -> list[tuple[float, float]]:
    """Longitude intervals (degrees in [-180, 180)) with no equator coverage."""
    h, w = weight.shape
    row = weight[h // 2]
    uncovered = row <= 0.0
    if not uncovered.any():
        return []
    if uncovered.all():
        return [(-180.0, 180.0)]
    # walk runs of uncovered columns, allowing wrap across the seam
    idx = np.flatnonzero(uncovered)
    runs = []
    start = prev = idx[0]
    for i in idx[1:]:
        if i == prev + 1:
            prev = i
            continue
        runs.append((start, prev))
        start = prev = i
    runs.append((start, prev))
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == w - 1:
        first = runs.pop(0)
        runs[-1] = (runs[-1][0], first[1] + w)

    def col_to_deg(c):
        return -180.0 + 360.0 * c / w

    # a gap crossing the seam reports hi > 180, e.g. (170.0, 195.0)
    return [(col_to_deg(a), col_to_deg(b + 1)) for a, b in runs]


def stitch_equirect(
    views: list[PanoView],
    canvas_height: int = 480,
    require_full_equator: bool = True,
) -> Photosphere:
    """Composite views onto an equirectangular canvas (width = 2 x height).

    Views are accumulated in list order with feathered weights; pixels no
    view reaches stay black with weight 0.  With require_full_equator the
    stitch fails loudly, naming the uncovered longitude intervals.
    """
    if not views:
        raise StitchError("no views to stitch")
    h = canvas_height
    w = 2 * h
    lon = -np.pi + 2.0 * np.pi * (np.arange(w) + 0.5) / w
    lat = np.pi / 2.0 - np.pi * (np.arange(h) + 0.5) / h
    glon, glat = np.meshgrid(lon, lat)
    rays = np.stack(
        [np.cos(glat) * np.cos(glon), np.cos(glat) * np.sin(glon), np.sin(glat)],
        axis=-1,
    )
    acc = np.zeros((h, w, 3))
    wsum = np.zeros((h, w))
    for view in views:
        cam = view.camera
        cam_rays = rays @ cam.rotation()  # world -> camera via R^T
        z = cam_rays[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            px = cam.fx * cam_rays[..., 0] / z + cam.cx
            py = cam.fy * cam_rays[..., 1] / z + cam.cy
        valid = (
            (z > 1e-9)
            & (px >= 0.0)
            & (px <= cam.width - 1.0)
            & (py >= 0.0)
            & (py <= cam.height - 1.0)
        )
        if not valid.any():
            continue
        xs, ys = px[valid], py[valid]
        sample = _bilinear(view.frame.pixels, xs, ys)
        weight = _hat_weight(xs, cam.width) * _hat_weight(ys, cam.height)
        acc[valid] += weight[:, None] * sample
        wsum[valid] += weight
    gaps = equator_gaps(wsum)
    if require_full_equator and gaps:
        pretty = ", ".join(f"[{lo:.1f} deg, {hi:.1f} deg]" for lo, hi in gaps)
        raise StitchError(f"equator not fully covered: {pretty}")
    out = np.zeros((h, w, 3), dtype=np.uint8)
    covered = wsum > 0
    out[covered] = np.clip(
        np.rint(acc[covered] / wsum[covered, None]), 0, 255
    ).astype(np.uint8)
    return Photosphere(pixels=out, weight=wsum, coverage_gaps=tuple(gaps))


def wrap_seam_mae(sphere: Photosphere) -> float:
    """Mean abs difference (0..1 scale) across the +-180 deg wrap seam."""
    left = sphere.pixels[:, 0].astype(float) / 255.0
    right = sphere.pixels[:, -1].astype(float) / 255.0
    both = (sphere.weight[:, 0] > 0) & (sphere.weight[:, -1] > 0)
    if not both.any():
        return math.inf
    return float(np.mean(np.abs(left[both] - right[both])))
