"""Experiment reports: metrics from telemetry, pass/fail rows, artifacts.

Every metric here is computed from a list of TelemetryFrame only, so a
report regenerated from a logged CSV is identical to the one written
during the live run.  Writing a report produces a small delimited file
plus rendered figures next to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mission import MissionScript, builtin_mission, run_mission
from .config import ScorpionConfig
from .telemetry import TelemetryFrame

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


@dataclass(frozen=True)
class Criterion:
    """One pass/fail row; informational rows never fail a report."""

    name: str
    value: float
    limit: float
    ok: bool
    hard: bool = True
    op: str = "<="


@dataclass
class ExperimentReport:
    scenario: str
    metrics: dict[str, float] = field(default_factory=dict)
    criteria: list[Criterion] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.criteria if c.hard)

    def check(self, name: str, value: float, limit: float,
              hard: bool = True) -> None:
        """Record `value <= limit` as a criterion row."""
        self.metrics[name] = value
        ok = bool(value <= limit) and math.isfinite(value)
        self.criteria.append(Criterion(name, value, limit, ok, hard))

    def check_min(self, name: str, value: float, minimum: float,
                  hard: bool = True) -> None:
        """Record `value >= minimum` as a criterion row."""
        self.metrics[name] = value
        ok = bool(value >= minimum) and math.isfinite(value)
        self.criteria.append(Criterion(name, value, minimum, ok, hard, op=">="))

    def summary(self) -> str:
        lines = [f"[{self.scenario}] {'PASS' if self.passed else 'FAIL'}"]
        for c in self.criteria:
            tag = "ok" if c.ok else ("info" if not c.hard else "FAIL")
            note = "" if c.hard else " (informational)"
            lines.append(
                f"  {c.name}: {c.value:.6g} (want {c.op} {c.limit:g}) {tag}{note}")
        extra = set(self.metrics) - {c.name for c in self.criteria}
        for name in sorted(extra):
            lines.append(f"  {name}: {self.metrics[name]:.6g}")
        return "\n".join(lines)


# -- metric extraction ---------------------------------------------------------


def _times_s(frames: list[TelemetryFrame]) -> np.ndarray:
    return np.array([f.timestamp_us for f in frames]) * 1e-6


def stationkeep_metrics(
    frames: list[TelemetryFrame],
    hold_xyz: tuple[float, float, float],
    eval_after_s: float,
    tol_m: float = 0.15,
) -> dict[str, float]:
    """Hold-error statistics for a station-keeping run.

    `eval_after_s` excludes the engage/disturbance transient.  Settling
    time is the earliest time after which the position error stays
    inside `tol_m` for the rest of the run (inf when it never does).
    """
    t = _times_s(frames)
    pos = np.array([f.pose[:3] for f in frames])
    err = np.linalg.norm(pos - np.asarray(hold_xyz), axis=1)

    window = t >= eval_after_s
    inside = err <= tol_m
    # last index that violates the band determines settling
    bad = np.nonzero(~inside)[0]
    dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
    settle = 0.0 if bad.size == 0 else float(t[bad[-1]]) + dt
    if bad.size and bad[-1] == len(t) - 1:
        settle = math.inf

    yaw = np.array([f.pose[5] for f in frames])
    return {
        "max_error_m": float(err[window].max()) if window.any() else math.inf,
        "final_error_m": float(err[-1]),
        "settling_time_s": settle,
        "max_error_overall_m": float(err.max()),
        "max_yaw_error_rad": float(np.abs(yaw[window]).max()) if window.any()
        else math.inf,
    }


def drift_metrics(frames: list[TelemetryFrame]) -> dict[str, float]:
    """Displacement from the initial pose over an unforced run."""
    pos = np.array([f.pose[:3] for f in frames])
    drift = np.linalg.norm(pos - pos[0], axis=1)
    return {"max_drift_m": float(drift.max()), "final_drift_m": float(drift[-1])}


# -- the canonical disturbance battery ----------------------------------------

# (scenario, builtin mission, evaluate after [s], tolerance [m], hard)
BATTERY = (
    ("zero_disturbance", "stationkeep_zero", 15.0, 0.01, True),
    ("lateral_step_10n", "stationkeep_lateral_step", 15.0, 0.15, True),
    ("yaw_step_5nm", "stationkeep_yaw_step", 15.0, 0.15, True),
    ("surge_sine_5n", "stationkeep_surge_sine", 15.0, 0.15, True),
    ("lateral_step_20n", "stationkeep_lateral_step_2x", 15.0, 0.15, False),
)

HOLD_XYZ = (0.0, 0.0, 1.5)


def stationkeep_battery(config: ScorpionConfig | None = None,
                        out_dir: str | Path | None = None) -> ExperimentReport:
    """Run the committed disturbance battery and gate on worst hold error."""
    report = ExperimentReport(scenario="stationkeep_battery")
    worst = 0.0
    for name, mission_name, eval_after, tol, hard in BATTERY:
        script = builtin_mission(mission_name)
        frames = run_mission(script, config=config)
        m = stationkeep_metrics(frames, HOLD_XYZ, eval_after, tol_m=tol)
        report.check(f"{name}_max_error_m", m["max_error_m"], tol, hard=hard)
        report.metrics[f"{name}_settling_time_s"] = m["settling_time_s"]
        if hard:
            worst = max(worst, m["max_error_m"])
        if out_dir is not None:
            report.artifacts += write_run_figure(
                frames, Path(out_dir) / f"{name}.png",
                hold_xyz=HOLD_XYZ, tol_m=tol)
    report.metrics["worst_hold_error_m"] = worst
    if out_dir is not None:
        report.artifacts.append(write_report_csv(report, Path(out_dir)))
    return report


def mission_report(
    script: MissionScript,
    frames: list[TelemetryFrame],
    out_dir: str | Path | None = None,
) -> ExperimentReport:
    """Generic report for one scripted run (no fixed pass/fail gates)."""
    report = ExperimentReport(scenario=script.name.removesuffix(".mission"))
    holds = [a for a in script.actions if a.verb == "hold"]
    if holds:
        hold_xyz = holds[-1].args[:3]
        m = stationkeep_metrics(frames, hold_xyz,
                                eval_after_s=holds[-1].time_s + 10.0)
        report.metrics.update(m)
    else:
        report.metrics.update(drift_metrics(frames))
    report.metrics["duration_s"] = script.duration_s
    report.metrics["ticks"] = float(len(frames))
    if out_dir is not None:
        out_dir = Path(out_dir)
        report.artifacts += write_run_figure(
            frames, out_dir / f"{report.scenario}.png",
            hold_xyz=holds[-1].args[:3] if holds else None)
        report.artifacts.append(write_report_csv(report, out_dir))
    return report


# -- vision evaluation ---------------------------------------------------------


def vision_eval_report(
    corpus_dir: str | Path | None = None,
    bands: dict | None = None,
    out_dir: str | Path | None = None,
) -> ExperimentReport:
    """Measurement, marker and detection metrics over a corpus.

    With no corpus_dir the committed in-memory corpora are used; a
    directory written by `write_corpus` gives identical numbers.
    """
    from .vision import calibrate, measure_length
    from .vision.corpus import (
        detection_corpus,
        load_corpus_dir,
        map_fixture,
        marker_accuracy,
        marker_corpus,
        measurement_corpus,
    )
    from .vision.evaluate import evaluate_detections, evaluate_detections_multi

    report = ExperimentReport(scenario="vision_eval")
    rows = ["kind,frame,name,value"]

    if corpus_dir is None:
        cases = measurement_corpus()
        meas_items = [
            (c.frame, c.reference.endpoints, c.reference.length_m,
             c.clicks, c.target.length_m)
            for c in cases
        ]
        marker_frames, marker_gts = marker_corpus()
        _, det_gts, det_lists = detection_corpus()
    else:
        loaded = load_corpus_dir(corpus_dir)
        meas_items = loaded.get("measurement", [])
        marker_frames, marker_gts = loaded.get("markers", ([], []))
        det_gts, det_lists = loaded.get("detection", ([], []))

    rel_errors = []
    for i, (frame, cal, ref_len, clicks, truth) in enumerate(meas_items):
        scale = calibrate(cal[0], cal[1], ref_len, intrinsics=frame.intrinsics)
        length = measure_length(clicks[0], clicks[1], scale,
                                intrinsics=frame.intrinsics, frame=frame)
        rel = abs(length - truth) / truth
        rel_errors.append(rel)
        rows.append(f"measurement,{i},measured_m,{length:.6g}")
        rows.append(f"measurement,{i},truth_m,{truth:.6g}")
        rows.append(f"measurement,{i},rel_error,{rel:.6g}")
    if rel_errors:
        report.check("measurement_max_rel_error", max(rel_errors), 0.05)
        report.metrics["measurement_mean_rel_error"] = float(np.mean(rel_errors))

    per_color: dict[str, float] = {}
    if marker_frames:
        acc, per_color = marker_accuracy(marker_frames, marker_gts, bands)
        report.check_min("marker_accuracy", acc, 0.94)
        for color, a in sorted(per_color.items()):
            report.metrics[f"marker_accuracy_{color}"] = a
            rows.append(f"markers,,accuracy_{color},{a:.6g}")
        for i, gts in enumerate(marker_gts):
            n = sum(1 for g in gts if g.label == "t-marker")
            rows.append(f"markers,{i},n_markers,{n}")

    eval_result = None
    if det_lists:
        eval_result = evaluate_detections_multi(det_lists, det_gts)
        report.metrics["corpus_map"] = eval_result.mean_ap
        report.metrics["corpus_precision"] = eval_result.precision
        report.metrics["corpus_recall"] = eval_result.recall
        for cls, ap in sorted(eval_result.ap_per_class.items()):
            rows.append(f"detection,,ap_{cls},{ap:.6g}")
        for i, dets in enumerate(det_lists):
            rows.append(f"detection,{i},n_detections,{len(dets)}")

    dets, gts, expected = map_fixture()
    got = evaluate_detections(dets, gts).mean_ap
    report.check("map_fixture_abs_error", abs(got - expected), 0.0)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        frames_csv = out / "vision_eval_frames.csv"
        frames_csv.write_text("\n".join(rows) + "\n")
        report.artifacts.append(str(frames_csv))
        report.artifacts += _vision_figure(
            rel_errors, per_color, eval_result, out / "vision_eval.png")
        report.artifacts.append(write_report_csv(report, out))
    return report


def _vision_figure(rel_errors, per_color, eval_result, path: Path) -> list[str]:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    if rel_errors:
        axes[0].bar(range(len(rel_errors)), [100 * e for e in rel_errors])
        axes[0].axhline(5.0, color="r", ls="--", lw=1)
    axes[0].set_xlabel("case")
    axes[0].set_ylabel("length error [%]")
    if per_color:
        names = sorted(per_color)
        axes[1].bar(names, [per_color[n] for n in names],
                    color=[n if n != "yellow" else "gold" for n in names])
        axes[1].axhline(0.94, color="r", ls="--", lw=1)
        axes[1].set_ylim(0, 1.05)
    axes[1].set_ylabel("marker accuracy")
    if eval_result is not None:
        names = sorted(eval_result.ap_per_class)
        axes[2].bar(names, [eval_result.ap_per_class[n] for n in names])
        axes[2].set_ylim(0, 1.05)
    axes[2].set_ylabel("AP @ IoU 0.5")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return [str(path)]


# -- photosphere ----------------------------------------------------------------


def photosphere_report(
    views,
    out_dir: str | Path | None = None,
    canvas_height: int = 480,
    seam_gate: float | None = 2.0 / 255.0,
) -> ExperimentReport:
    """Stitch the views, write the panorama, gate on the wrap seam."""
    from .photosphere import stitch_equirect, wrap_seam_mae

    report = ExperimentReport(scenario="photosphere")
    sphere = stitch_equirect(views, canvas_height=canvas_height)
    seam = wrap_seam_mae(sphere)
    if seam_gate is not None:
        report.check("wrap_seam_mae", seam, seam_gate)
    else:
        report.metrics["wrap_seam_mae"] = seam
    report.metrics["covered_fraction"] = float(np.mean(sphere.weight > 0))
    report.metrics["n_views"] = float(len(views))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        from .vision.render import ImageFrame, save_png

        pano_path = out / "panorama.png"
        save_png(ImageFrame(width=sphere.pixels.shape[1],
                            height=sphere.pixels.shape[0],
                            pixels=sphere.pixels), pano_path)
        report.artifacts.append(str(pano_path))
        fig, ax = plt.subplots(figsize=(10, 5))
        ax.imshow(sphere.pixels, extent=[-180, 180, -90, 90])
        ax.set_xlabel("longitude [deg]")
        ax.set_ylabel("latitude [deg]")
        fig.tight_layout()
        fig_path = out / "panorama_grid.png"
        fig.savefig(fig_path, dpi=110)
        plt.close(fig)
        report.artifacts.append(str(fig_path))
        report.artifacts.append(write_report_csv(report, out))
    return report


# -- artifacts -----------------------------------------------------------------


def write_report_csv(report: ExperimentReport, out_dir: Path) -> str:
    """Delimited summary: one row per metric, one per criterion."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{report.scenario}_report.csv"
    rows = ["kind,name,value,op,limit,ok,hard"]
    gated = {c.name for c in report.criteria}
    for name, value in report.metrics.items():
        if name not in gated:
            rows.append(f"metric,{name},{value:.9g},,,,")
    for c in report.criteria:
        rows.append(f"criterion,{c.name},{c.value:.9g},{c.op},{c.limit:.9g},"
                    f"{int(c.ok)},{int(c.hard)}")
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def write_run_figure(
    frames: list[TelemetryFrame],
    path: str | Path,
    hold_xyz: tuple[float, float, float] | None = None,
    tol_m: float | None = None,
) -> list[str]:
    """Render position error / depth / thrust traces for one run."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    t = _times_s(frames)
    pos = np.array([f.pose[:3] for f in frames])
    thrust = np.array([f.thrust for f in frames])

    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
    if hold_xyz is not None:
        err = np.linalg.norm(pos - np.asarray(hold_xyz), axis=1)
        axes[0].plot(t, err)
        axes[0].set_ylabel("hold error [m]")
        if tol_m is not None:
            axes[0].axhline(tol_m, color="r", ls="--", lw=1)
    else:
        drift = np.linalg.norm(pos - pos[0], axis=1)
        axes[0].plot(t, drift)
        axes[0].set_ylabel("drift [m]")
    axes[1].plot(t, pos[:, 2])
    axes[1].set_ylabel("depth [m]")
    axes[1].invert_yaxis()
    for i in range(thrust.shape[1]):
        axes[2].plot(t, thrust[:, i], lw=0.8, label=f"f{i}")
    axes[2].set_ylabel("thrust [N]")
    axes[2].set_xlabel("time [s]")
    axes[2].legend(ncol=4, fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return [str(path)]
