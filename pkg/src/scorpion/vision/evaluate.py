"""Detection-quality metrics: IoU, precision/recall, AP and mAP.

Matching is greedy in confidence order against the unmatched
ground-truth box of the same class with highest IoU at or above the
threshold.  AP is the area under the monotone (all-point interpolated)
precision-recall curve; mAP averages classes present in the ground
truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Detection:
    label: str
    box: tuple[float, float, float, float]
    confidence: float

    def __post_init__(self):
        x0, y0, x1, y1 = self.box
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate box {self.box}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class GtBox:
    """Minimal ground-truth carrier for evaluation-only callers."""

    label: str
    box: tuple[float, float, float, float]
    length_m: float = 0.0


@dataclass(frozen=True)
class EvalResult:
    ap_per_class: dict[str, float]
    mean_ap: float
    precision: float
    recall: float
    flagged_classes: tuple[str, ...]


def box_iou(a, b) -> float:
    """Intersection-over-union of two (x_min, y_min, x_max, y_max) boxes."""
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def _interpolated_ap(tp_flags: list[bool], n_gt: int) -> float:
    if n_gt == 0:
        return 0.0
    tp = np.cumsum(np.asarray(tp_flags, dtype=float))
    fp = np.cumsum(~np.asarray(tp_flags, dtype=bool))
    recall = tp / n_gt
    precision = tp / np.maximum(tp + fp, 1e-12)
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def evaluate_detections(detections, ground_truth, iou_threshold: float = 0.5) -> EvalResult:
    """Score detections against ground truth at one IoU threshold.

    ground_truth entries need .label and .box attributes (render
    annotations and GtBox both qualify).  Classes with detections but no
    ground truth get AP 0 and are flagged; they do not enter the mAP
    mean but their detections count as false positives in the overall
    precision.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError("iou_threshold must be in (0, 1)")
    gt_classes: list[str] = []
    for g in ground_truth:
        if g.label not in gt_classes:
            gt_classes.append(g.label)

    order = sorted(range(len(detections)),
                   key=lambda i: (-detections[i].confidence, i))
    matched_gt: set[int] = set()
    tp_by_class: dict[str, list[bool]] = {c: [] for c in gt_classes}
    flagged: list[str] = []
    total_tp = 0
    for i in order:
        det = detections[i]
        if det.label not in tp_by_class:
            if det.label not in flagged:
                flagged.append(det.label)
            continue
        best_iou, best_j = 0.0, -1
        for j, g in enumerate(ground_truth):
            if g.label != det.label or j in matched_gt:
                continue
            v = box_iou(det.box, g.box)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0 and best_iou >= iou_threshold:
            matched_gt.add(best_j)
            tp_by_class[det.label].append(True)
            total_tp += 1
        else:
            tp_by_class[det.label].append(False)

    ap: dict[str, float] = {}
    for c in gt_classes:
        n_gt = sum(1 for g in ground_truth if g.label == c)
        ap[c] = _interpolated_ap(tp_by_class[c], n_gt)
    for c in flagged:
        ap[c] = 0.0

    n_det = len(detections)
    n_gt_total = len(ground_truth)
    mean_ap = float(np.mean([ap[c] for c in gt_classes])) if gt_classes else 0.0
    return EvalResult(
        ap_per_class=ap,
        mean_ap=mean_ap,
        precision=total_tp / n_det if n_det else 0.0,
        recall=total_tp / n_gt_total if n_gt_total else 0.0,
        flagged_classes=tuple(flagged),
    )


def evaluate_detections_multi(det_lists, gt_lists,
                              iou_threshold: float = 0.5) -> EvalResult:
    """Dataset-level evaluation over per-frame detection/GT lists.

    Confidences rank across the whole set, but a detection can only match
    ground truth from its own frame; that is enforced by shifting each
    frame onto a disjoint coordinate strip before pooling.
    """
    if len(det_lists) != len(gt_lists):
        raise ValueError("need one detection list per ground-truth list")
    stride = 0.0
    for dets, gts in zip(det_lists, gt_lists):
        for obj in (*dets, *gts):
            stride = max(stride, abs(obj.box[0]), abs(obj.box[2]))
    stride = 2.0 * stride + 1.0

    def shift(obj, i, cls):
        x0, y0, x1, y1 = obj.box
        return cls(label=obj.label, box=(x0 + i * stride, y0, x1 + i * stride, y1),
                   **({"confidence": obj.confidence} if cls is Detection else {}))

    pooled_dets = [shift(d, i, Detection)
                   for i, dets in enumerate(det_lists) for d in dets]
    pooled_gts = [shift(g, i, GtBox) for i, gts in enumerate(gt_lists) for g in gts]
    return evaluate_detections(pooled_dets, pooled_gts, iou_threshold)
