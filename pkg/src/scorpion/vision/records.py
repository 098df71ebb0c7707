"""Line-delimited annotation files.

One record per line, whitespace-separated, '#' comments allowed:

    ground truth:  label x_min y_min x_max y_max length_m
    detections:    label x_min y_min x_max y_max confidence

Coordinates are half-open pixel boxes; lengths in meters.
"""

from __future__ import annotations

from pathlib import Path

from .evaluate import Detection, GtBox


def _rows(path: Path):
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
        yield lineno, parts


def _num(v) -> str:
    # repr keeps the exact value; plain ints stay short
    f = float(v)
    return str(int(f)) if f.is_integer() else repr(f)


def save_ground_truth(gts, path: str | Path) -> None:
    lines = ["# label x_min y_min x_max y_max length_m"]
    for g in gts:
        fields = " ".join(_num(v) for v in (*g.box, g.length_m))
        lines.append(f"{g.label} {fields}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_ground_truth(path: str | Path) -> list[GtBox]:
    out = []
    for lineno, p in _rows(Path(path)):
        try:
            box = tuple(float(v) for v in p[1:5])
            length = float(p[5])
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: {e}") from e
        out.append(GtBox(label=p[0], box=box, length_m=length))
    return out


def save_detections(dets, path: str | Path) -> None:
    lines = ["# label x_min y_min x_max y_max confidence"]
    for d in dets:
        fields = " ".join(_num(v) for v in (*d.box, d.confidence))
        lines.append(f"{d.label} {fields}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_detections(path: str | Path) -> list[Detection]:
    out = []
    for lineno, p in _rows(Path(path)):
        try:
            box = tuple(float(v) for v in p[1:5])
            conf = float(p[5])
            out.append(Detection(label=p[0], box=box, confidence=conf))
        except ValueError as e:
            raise ValueError(f"{path}:{lineno}: {e}") from e
    return out
