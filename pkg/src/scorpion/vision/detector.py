"""Seeded stand-in detector.

Perturbs ground-truth annotations with box jitter, misses and false
positives so the evaluation harness and console overlays have a
deterministic, realistic source without any trained model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluate import Detection
from .render import ImageFrame


@dataclass(frozen=True)
class DetectorNoise:
    box_sigma_px: float = 0.0
    miss_rate: float = 0.0
    false_positive_rate: float = 0.0
    confidence_sigma: float = 0.0


def synthetic_detector(
    frame: ImageFrame,
    ground_truth,
    noise: DetectorNoise = DetectorNoise(),
    seed: int = 0,
) -> list[Detection]:
    """Ground truth -> jittered detection list, deterministic per seed."""
    rng = np.random.default_rng(seed)
    dets: list[Detection] = []
    labels = [g.label for g in ground_truth]
    for g in ground_truth:
        miss = rng.random()
        jitter = rng.normal(0.0, noise.box_sigma_px, size=4) if noise.box_sigma_px > 0 \
            else np.zeros(4)
        conf_draw = abs(rng.normal(0.0, noise.confidence_sigma)) \
            if noise.confidence_sigma > 0 else 0.0
        if miss < noise.miss_rate:
            continue
        x0, y0, x1, y1 = (float(v) + jitter[i] for i, v in enumerate(g.box))
        x0 = min(max(x0, 0.0), frame.width - 2.0)
        y0 = min(max(y0, 0.0), frame.height - 2.0)
        x1 = min(max(x1, x0 + 1.0), float(frame.width))
        y1 = min(max(y1, y0 + 1.0), float(frame.height))
        conf = float(np.clip(1.0 - conf_draw, 0.05, 1.0))
        dets.append(Detection(label=g.label, box=(x0, y0, x1, y1), confidence=conf))

    if noise.false_positive_rate > 0:
        n_fp = int(rng.poisson(noise.false_positive_rate * max(1, len(labels))))
        for _ in range(n_fp):
            w = float(rng.uniform(12, 60))
            h = float(rng.uniform(12, 60))
            x0 = float(rng.uniform(0, frame.width - w - 1))
            y0 = float(rng.uniform(0, frame.height - h - 1))
            label = labels[int(rng.integers(len(labels)))] if labels else "spurious"
            conf = float(np.clip(rng.normal(0.4, 0.12), 0.05, 0.95))
            dets.append(Detection(label=label, box=(x0, y0, x0 + w, y0 + h),
                                  confidence=conf))
    return dets
