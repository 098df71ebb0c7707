"""Committed synthetic corpora.

The corpora are defined by generator code plus fixed seeds, so they
regenerate bit-identically anywhere; the CLI can also write them to
disk as PNG + record files for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import DEFAULT_BANDS
from .detector import DetectorNoise
from .render import CameraIntrinsics, Disc, Rect, RenderNoise, TMarker, render_scene

MEASUREMENT_SEED = 71
MARKER_SEED = 72
DETECTOR_SEED = 73

MEASUREMENT_INTRINSICS = CameraIntrinsics(k1=-0.05)
MARKER_NOISE = RenderNoise(salt_prob=0.01, hue_jitter_deg=4.0)
DETECTOR_NOISE = DetectorNoise(
    box_sigma_px=2.0, miss_rate=0.08, false_positive_rate=0.15, confidence_sigma=0.08
)

MARKER_COLORS = {
    "red": (215, 30, 30),
    "blue": (30, 60, 215),
    "yellow": (220, 205, 35),
}


@dataclass(frozen=True)
class MeasurementCase:
    frame: object
    reference: object  # ground truth of the calibration bar
    target: object  # ground truth of the object to measure
    clicks: tuple[tuple[float, float], tuple[float, float]]  # jittered endpoints


def measurement_corpus(n_frames: int = 20) -> list[MeasurementCase]:
    """Frames with a known reference bar and one target at the same depth.

    Click points are the true endpoints plus a small seeded jitter, the
    way an operator would pick them; sub-pixel snapping is expected to
    pull them back onto the edge.
    """
    cases = []
    for i in range(n_frames):
        rng = np.random.default_rng(MEASUREMENT_SEED + i)
        z = float(rng.uniform(1.6, 5.0))
        half_w = 0.55 * z  # usable scene half-width at this depth
        ref = Rect(
            label="reference",
            color=(235, 235, 235),
            center=(-0.45 * half_w, -0.35 * half_w, z),
            width=0.5,
            height=0.08,
        )
        if rng.random() < 0.5:
            tw = float(rng.uniform(0.3, min(1.0, 0.8 * half_w)))
            target = Rect(
                label="target",
                color=(220, 200, 40),
                center=(0.3 * half_w, 0.25 * half_w, z),
                width=tw,
                height=float(rng.uniform(0.08, 0.25)),
            )
        else:
            r = float(rng.uniform(0.12, min(0.4, 0.35 * half_w)))
            target = Disc(
                label="target",
                color=(220, 200, 40),
                center=(0.3 * half_w, 0.2 * half_w, z),
                radius=r,
            )
        frame, gts = render_scene(
            [ref, target],
            MEASUREMENT_INTRINSICS,
            640,
            480,
            noise=RenderNoise(gaussian_sigma=2.0),
            seed=MEASUREMENT_SEED + i,
        )
        by_label = {g.label: g for g in gts}
        tgt = by_label["target"]
        jit = rng.uniform(-1.5, 1.5, size=4)
        clicks = (
            (tgt.endpoints[0][0] + jit[0], tgt.endpoints[0][1] + jit[1]),
            (tgt.endpoints[1][0] + jit[2], tgt.endpoints[1][1] + jit[3]),
        )
        cases.append(
            MeasurementCase(
                frame=frame,
                reference=by_label["reference"],
                target=tgt,
                clicks=clicks,
            )
        )
    return cases


def marker_corpus(n_frames: int = 17):
    """Noisy frames, each with one T marker per color plus distractors.

    Returns (frames, ground_truths) lists; ground truth labels are
    "t-marker" with color_name set, distractors labeled "distractor".
    """
    slots = [(-0.6, -0.35), (0.0, 0.3), (0.6, -0.25)]
    distractor_slots = [(-0.15, -0.5), (0.45, 0.35)]
    frames, gts_all = [], []
    for i in range(n_frames):
        rng = np.random.default_rng(MARKER_SEED + i)
        z = float(rng.uniform(1.6, 2.8))
        objects = []
        order = list(MARKER_COLORS)
        for (sx, sy), name in zip(slots, order):
            size = float(rng.uniform(0.28, 0.5))
            angle = float(rng.choice([0.0, 90.0, 180.0, 270.0]))
            objects.append(
                TMarker(
                    label="t-marker",
                    color=MARKER_COLORS[name],
                    center=(sx * z * 0.55, sy * z * 0.55, z),
                    size=size,
                    angle_deg=angle,
                    color_name=name,
                )
            )
        for j, (sx, sy) in enumerate(distractor_slots):
            if rng.random() < 0.5:
                continue
            name = order[int(rng.integers(3))]
            shape = rng.random()
            center = (sx * z * 0.55, sy * z * 0.55, z)
            if shape < 0.5:
                objects.append(
                    Rect("distractor", MARKER_COLORS[name], center,
                         float(rng.uniform(0.1, 0.2)), float(rng.uniform(0.1, 0.2)),
                         color_name=name)
                )
            else:
                objects.append(
                    Disc("distractor", MARKER_COLORS[name], center,
                         float(rng.uniform(0.06, 0.12)), color_name=name)
                )
        frame, gts = render_scene(
            objects, CameraIntrinsics(), 640, 480,
            noise=MARKER_NOISE, seed=MARKER_SEED + i,
        )
        frames.append(frame)
        gts_all.append(gts)
    return frames, gts_all


def marker_accuracy(frames, gts_all, bands=None, iou_min: float = 0.5):
    """Per-marker detection accuracy over a marker corpus."""
    from .evaluate import box_iou
    from .markers import detect_markers

    bands = bands or DEFAULT_BANDS
    total = found = 0
    per_color = {name: [0, 0] for name in bands}
    for frame, gts in zip(frames, gts_all):
        dets = detect_markers(frame, bands)
        for g in gts:
            if g.label != "t-marker":
                continue
            total += 1
            per_color[g.color_name][1] += 1
            hit = any(
                d.color_name == g.color_name
                and d.shape.is_t
                and box_iou(d.contour.box, g.box) >= iou_min
                for d in dets
            )
            if hit:
                found += 1
                per_color[g.color_name][0] += 1
    acc = found / total if total else 0.0
    return acc, {k: (v[0] / v[1] if v[1] else 0.0) for k, v in per_color.items()}


def detection_corpus(n_frames: int = 12):
    """Frames + GT + seeded synthetic detections for the mAP harness."""
    from .detector import synthetic_detector

    frames, gts_all = marker_corpus(n_frames)
    det_lists = [
        synthetic_detector(f, g, DETECTOR_NOISE, seed=DETECTOR_SEED + i)
        for i, (f, g) in enumerate(zip(frames, gts_all))
    ]
    return frames, gts_all, det_lists


# -- disk form ----------------------------------------------------------------
#
# gen-corpus writes the same corpora as PNG + record files so they can be
# inspected or fed back through the CLI; results match the in-memory form
# because PNG is lossless and the click points are stored verbatim.


def write_corpus(out_dir, kinds=("measurement", "markers", "detection")):
    """Materialize the committed corpora under `out_dir`; returns counts."""
    import dataclasses
    import json
    from pathlib import Path

    from .evaluate import GtBox
    from .records import save_detections, save_ground_truth
    from .render import save_png

    out = Path(out_dir)
    counts = {}
    if "measurement" in kinds:
        sub = out / "measurement"
        sub.mkdir(parents=True, exist_ok=True)
        cases = measurement_corpus()
        for i, case in enumerate(cases):
            stem = sub / f"case_{i:02d}"
            save_png(case.frame, stem.with_suffix(".png"))
            save_ground_truth(
                [GtBox("reference", tuple(case.reference.box),
                       case.reference.length_m),
                 GtBox("target", tuple(case.target.box), case.target.length_m)],
                stem.with_suffix(".gt.txt"))
            lines = ["# role x y"]
            for p in case.reference.endpoints:
                lines.append(f"cal {float(p[0])!r} {float(p[1])!r}")
            for p in case.clicks:
                lines.append(f"tgt {float(p[0])!r} {float(p[1])!r}")
            stem.with_suffix(".clicks.txt").write_text("\n".join(lines) + "\n")
        counts["measurement"] = len(cases)
    if "markers" in kinds:
        sub = out / "markers"
        sub.mkdir(parents=True, exist_ok=True)
        frames, gts_all = marker_corpus()
        for i, (frame, gts) in enumerate(zip(frames, gts_all)):
            stem = sub / f"frame_{i:02d}"
            save_png(frame, stem.with_suffix(".png"))
            save_ground_truth(
                [GtBox(g.color_name if g.label == "t-marker" else g.label,
                       tuple(g.box), g.length_m) for g in gts],
                stem.with_suffix(".gt.txt"))
        counts["markers"] = len(frames)
    if "detection" in kinds:
        sub = out / "detection"
        sub.mkdir(parents=True, exist_ok=True)
        frames, gts_all, det_lists = detection_corpus()
        for i, (frame, gts, dets) in enumerate(zip(frames, gts_all, det_lists)):
            stem = sub / f"frame_{i:02d}"
            save_png(frame, stem.with_suffix(".png"))
            save_ground_truth(
                [GtBox(g.label, tuple(g.box), g.length_m) for g in gts],
                stem.with_suffix(".gt.txt"))
            save_detections(dets, stem.with_suffix(".det.txt"))
        counts["detection"] = len(frames)
    meta = {
        "format": 1,
        "counts": counts,
        "measurement_intrinsics": dataclasses.asdict(MEASUREMENT_INTRINSICS),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return counts


def _read_clicks(path):
    cal, tgt = [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("cal", "tgt"):
            raise ValueError(f"{path}:{lineno}: expected `cal|tgt x y`")
        (cal if parts[0] == "cal" else tgt).append(
            (float(parts[1]), float(parts[2])))
    if len(cal) != 2 or len(tgt) != 2:
        raise ValueError(f"{path}: need exactly 2 cal and 2 tgt points")
    return tuple(cal), tuple(tgt)


def load_corpus_dir(corpus_dir):
    """Read a corpus written by write_corpus.

    Returns a dict with whatever subsets exist: "measurement" is a list
    of (frame, cal_points, ref_length_m, clicks, true_length_m),
    "markers" a (frames, gts) pair with color-labeled boxes, "detection"
    a (gt_lists, det_lists) pair.  Frames missing their ground truth are
    skipped with a warning.
    """
    import json
    import logging
    from pathlib import Path
    from types import SimpleNamespace

    from .records import load_detections, load_ground_truth
    from .render import load_png

    log = logging.getLogger(__name__)
    root = Path(corpus_dir)
    meta = json.loads((root / "meta.json").read_text())
    out = {}

    sub = root / "measurement"
    if sub.is_dir():
        intr = CameraIntrinsics(**meta["measurement_intrinsics"])
        items = []
        for png in sorted(sub.glob("*.png")):
            gt_path = png.with_suffix("").with_suffix(".gt.txt")
            clicks_path = png.with_suffix("").with_suffix(".clicks.txt")
            if not gt_path.exists() or not clicks_path.exists():
                log.warning("skipping %s: missing ground truth", png.name)
                continue
            by_label = {g.label: g for g in load_ground_truth(gt_path)}
            cal, tgt = _read_clicks(clicks_path)
            items.append((load_png(png, intrinsics=intr), cal,
                          by_label["reference"].length_m, tgt,
                          by_label["target"].length_m))
        out["measurement"] = items
    sub = root / "markers"
    if sub.is_dir():
        frames, gts = [], []
        for png in sorted(sub.glob("*.png")):
            gt_path = png.with_suffix("").with_suffix(".gt.txt")
            if not gt_path.exists():
                log.warning("skipping %s: missing ground truth", png.name)
                continue
            frames.append(load_png(png))
            gts.append([
                SimpleNamespace(label="t-marker", color_name=g.label, box=g.box)
                if g.label in MARKER_COLORS
                else SimpleNamespace(label=g.label, color_name="", box=g.box)
                for g in load_ground_truth(gt_path)
            ])
        out["markers"] = (frames, gts)
    sub = root / "detection"
    if sub.is_dir():
        gt_lists, det_lists = [], []
        for png in sorted(sub.glob("*.png")):
            gt_path = png.with_suffix("").with_suffix(".gt.txt")
            det_path = png.with_suffix("").with_suffix(".det.txt")
            if not gt_path.exists() or not det_path.exists():
                log.warning("skipping %s: missing ground truth", png.name)
                continue
            gt_lists.append(load_ground_truth(gt_path))
            det_lists.append(load_detections(det_path))
        out["detection"] = (gt_lists, det_lists)
    return out


def map_fixture():
    """Tiny evaluation self-check with an exactly known answer.

    Five detections against three boxes of one class, ranked TP TP FP FP
    TP: walking that precision/recall staircase by hand gives
    AP = 1/3 + 1/3 + (1/3)(3/5) = 13/15.  Returns (dets, gts, expected).
    """
    from .evaluate import Detection, GtBox

    gts = [
        GtBox("anode", (0.0, 0.0, 10.0, 10.0)),
        GtBox("anode", (20.0, 0.0, 30.0, 10.0)),
        GtBox("anode", (40.0, 0.0, 50.0, 10.0)),
    ]
    dets = [
        Detection("anode", (0.0, 0.0, 10.0, 10.0), 0.9),
        Detection("anode", (20.0, 0.0, 30.0, 10.0), 0.8),
        Detection("anode", (60.0, 0.0, 70.0, 10.0), 0.7),
        Detection("anode", (80.0, 0.0, 90.0, 10.0), 0.6),
        Detection("anode", (40.0, 0.0, 50.0, 10.0), 0.5),
    ]
    return dets, gts, 13.0 / 15.0
