"""Headless entry point: run missions, batteries, evaluations and replays.

Exit codes: 0 everything passed, 1 a pass/fail criterion failed,
2 usage / config / input errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

log = logging.getLogger("scorpion")

EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_USAGE = 2


def _load_config(args):
    from .config import ScorpionConfig, default_config_path, load_config

    if args.config is not None:
        cfg = load_config(args.config)
    else:
        default = default_config_path()
        cfg = load_config(default) if default.exists() else ScorpionConfig()
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _print_report(report) -> int:
    print(report.summary())
    for a in report.artifacts:
        print(f"  wrote {a}")
    return EXIT_OK if report.passed else EXIT_CRITERION


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    from .mission import builtin_mission, builtin_mission_names, load_mission
    from .report import mission_report
    from .telemetry import CsvTelemetryLog, UdpTelemetryPublisher
    from .vehicle import DT

    cfg = _load_config(args)
    if Path(args.mission).exists():
        script = load_mission(args.mission)
    elif args.mission in builtin_mission_names():
        script = builtin_mission(args.mission)
    else:
        raise FileNotFoundError(
            f"no mission file {args.mission!r} "
            f"(builtins: {', '.join(builtin_mission_names())})")
    if args.seed is not None:
        script = dataclasses.replace(script, seed=args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{script.name.removesuffix('.mission')}.csv"

    publisher = None
    pace = 0.0
    if args.live:
        from .config import resolve_ports

        ports = resolve_ports(cfg.ports)
        publisher = UdpTelemetryPublisher(host=ports.telemetry_host,
                                          port=ports.udp_telemetry)
        pace = DT / args.speed if args.speed > 0 else 0.0
        print(f"publishing UDP telemetry to "
              f"{ports.telemetry_host}:{ports.udp_telemetry} "
              f"at {args.speed:g}x")

    from .mission import run_mission

    frames = []
    with CsvTelemetryLog(csv_path) as log_file:
        def on_frame(frame):
            frames.append(frame)
            log_file.log(frame)
            if publisher is not None:
                from .telemetry import MSG_TELEMETRY, encode_frame

                publisher.publish(encode_frame(MSG_TELEMETRY, frame.to_payload()))
                if pace:
                    time.sleep(pace)

        run_mission(script, config=cfg, on_frame=on_frame)
    if publisher is not None:
        publisher.close()

    report = mission_report(script, frames, out_dir=out)
    report.artifacts.insert(0, str(csv_path))
    return _print_report(report)


def cmd_stationkeep_test(args) -> int:
    from .report import stationkeep_battery

    cfg = _load_config(args)
    report = stationkeep_battery(config=cfg, out_dir=args.out)
    return _print_report(report)


def cmd_vision_eval(args) -> int:
    from .report import vision_eval_report

    cfg = _load_config(args)
    report = vision_eval_report(corpus_dir=args.corpus, bands=cfg.bands,
                                out_dir=args.out)
    return _print_report(report)


def cmd_gen_corpus(args) -> int:
    from .vision.corpus import write_corpus

    kinds = ("measurement", "markers", "detection") if args.kind == "all" \
        else (args.kind,)
    counts = write_corpus(args.out, kinds=kinds)
    for kind, n in counts.items():
        print(f"wrote {n} {kind} frames under {args.out}/{kind}")
    return EXIT_OK


def cmd_photosphere(args) -> int:
    from .photosphere import StitchError, yaw_sweep
    from .report import photosphere_report

    if args.frames_dir is None:
        views = yaw_sweep(n_frames=args.frames)
        gate = 2.0 / 255.0
    else:
        views = _views_from_manifest(Path(args.frames_dir), refine=args.refine)
        gate = None  # real imagery has no texture oracle to gate against
    try:
        report = photosphere_report(views, out_dir=args.out,
                                    canvas_height=args.canvas_height,
                                    seam_gate=gate)
    except StitchError as e:
        print(f"stitch failed: {e}", file=sys.stderr)
        return EXIT_CRITERION
    return _print_report(report)


def _views_from_manifest(frames_dir: Path, refine: bool = False):
    """Build PanoViews from frames_dir/manifest.json.

    The manifest gives the shared hfov and per-frame file + yaw; optional
    per-frame `correspondences` (x_prev y_prev x y rows, matched against
    the previous frame) let the yaw be refined from imagery.
    """
    from .photosphere import (
        PanoCamera,
        PanoView,
        ransac_homography,
        relative_yaw,
    )
    from .vision.render import load_png

    manifest = json.loads((frames_dir / "manifest.json").read_text())
    hfov = float(manifest.get("hfov_deg", 50.0))
    views = []
    prev_cam = None
    for entry in manifest["frames"]:
        frame = load_png(frames_dir / entry["file"])
        cam = PanoCamera.from_hfov(float(entry["yaw_deg"]), frame.width,
                                   frame.height, hfov)
        if refine and prev_cam is not None and "correspondences" in entry:
            pts = np.asarray(entry["correspondences"], dtype=float)
            res = ransac_homography(pts[:, :2], pts[:, 2:], seed=0)
            yaw = prev_cam.yaw_deg + relative_yaw(res.homography, prev_cam, cam)
            cam = dataclasses.replace(cam, yaw_deg=yaw)
        views.append(PanoView(camera=cam, frame=frame))
        prev_cam = cam
    return views


def cmd_replay(args) -> int:
    from .telemetry import (
        MSG_TELEMETRY,
        CsvTelemetryLog,
        UdpTelemetryPublisher,
        encode_frame,
        read_telemetry_csv,
    )

    frames = read_telemetry_csv(args.log)
    if not frames:
        print("empty log, nothing to replay")
        return EXIT_OK

    publisher = None
    if not args.no_publish:
        from .config import resolve_ports

        cfg = _load_config(args)
        ports = resolve_ports(cfg.ports)
        publisher = UdpTelemetryPublisher(host=ports.telemetry_host,
                                          port=ports.udp_telemetry)
        print(f"replaying {len(frames)} frames to "
              f"{ports.telemetry_host}:{ports.udp_telemetry} at {args.speed:g}x")

    relog = CsvTelemetryLog(args.out) if args.out else None
    try:
        t_start = time.monotonic()
        t0_us = frames[0].timestamp_us
        for frame in frames:
            if args.speed > 0:
                due = t_start + (frame.timestamp_us - t0_us) * 1e-6 / args.speed
                delay = due - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            if publisher is not None:
                publisher.publish(encode_frame(MSG_TELEMETRY, frame.to_payload()))
            if relog is not None:
                relog.log(frame)
    finally:
        if relog is not None:
            relog.close()
        if publisher is not None:
            publisher.close()
    return EXIT_OK


def cmd_alloc_debug(args) -> int:
    from .allocation import allocate, objective
    from .vehicle import build_allocation_matrix

    cfg = _load_config(args)
    layout = cfg.layout
    spec = json.loads(Path(args.instance).read_text())
    tau = np.asarray(spec["wrench"], dtype=float)
    weights = np.asarray(spec.get("weights", np.ones(6)), dtype=float)
    f_min = np.asarray(spec.get("f_min", layout.f_min), dtype=float)
    f_max = np.asarray(spec.get("f_max", layout.f_max), dtype=float)
    B = np.asarray(spec["B"], dtype=float) if "B" in spec \
        else build_allocation_matrix(layout)

    result = allocate(B, tau, weights, f_min, f_max)
    out = {
        "thrust": result.thrust.tolist(),
        "achieved_wrench": (B @ result.thrust).tolist(),
        "residual": result.residual.tolist(),
        "saturated": list(result.saturated),
        "iterations": result.iterations,
        "objective": objective(B, result.thrust, tau, weights),
    }
    text = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def cmd_serve(args) -> int:
    import asyncio

    from .config import resolve_ports
    from .telemetry import SimSession
    from .telemetry.bridge import TelemetryBridge

    cfg = _load_config(args)
    ports = resolve_ports(cfg.ports, ws=args.port)
    session = SimSession(config=cfg)
    bridge = TelemetryBridge(session, host=args.host, port=ports.ws_bridge,
                             speed=args.speed)
    print(f"serving WebSocket telemetry on ws://{args.host}:{ports.ws_bridge}")
    try:
        asyncio.run(bridge.serve(ticks=args.ticks))
    except KeyboardInterrupt:
        pass
    return EXIT_OK


# -- argument plumbing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scorpion",
        description="ROV simulator: missions, batteries, vision eval, "
                    "photospheres, replay.",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, out=None):
        p.add_argument("--config", help="config file (.cfg)")
        if seed:
            p.add_argument("--seed", type=int, help="override RNG seed")
        if out is not None:
            p.add_argument("--out", default=out, help="output directory")

    p = sub.add_parser("simulate", help="run a mission script")
    p.add_argument("mission", help="script path or builtin mission name")
    common(p, out="out/simulate")
    p.add_argument("--live", action="store_true",
                   help="publish UDP telemetry while running")
    p.add_argument("--speed", type=float, default=1.0,
                   help="live pacing multiplier (0 = flat out)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stationkeep-test", help="run the disturbance battery")
    common(p, seed=False, out="out/stationkeep")
    p.set_defaults(func=cmd_stationkeep_test)

    p = sub.add_parser("vision-eval", help="score the vision pipelines")
    common(p, seed=False, out="out/vision")
    p.add_argument("--corpus", help="corpus directory (default: built-in)")
    p.set_defaults(func=cmd_vision_eval)

    p = sub.add_parser("gen-corpus", help="write the synthetic corpora to disk")
    p.add_argument("--out", default="out/corpus", help="output directory")
    p.add_argument("--kind", default="all",
                   choices=["all", "measurement", "markers", "detection"])
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("photosphere", help="stitch a panorama")
    common(p, seed=False, out="out/photosphere")
    p.add_argument("--frames-dir",
                   help="directory with manifest.json + PNG frames "
                        "(default: synthetic sweep)")
    p.add_argument("--frames", type=int, default=12,
                   help="synthetic sweep frame count")
    p.add_argument("--canvas-height", type=int, default=480)
    p.add_argument("--refine", action="store_true",
                   help="refine manifest yaws from correspondences")
    p.set_defaults(func=cmd_photosphere)

    p = sub.add_parser("replay", help="re-publish a CSV log")
    p.add_argument("log", help="telemetry CSV")
    common(p, seed=False)
    p.add_argument("--speed", type=float, default=1.0,
                   help="playback rate multiplier (0 = flat out)")
    p.add_argument("--out", help="also re-log frames to this CSV")
    p.add_argument("--no-publish", action="store_true",
                   help="skip the UDP publisher")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("alloc-debug", help="solve one allocation instance")
    p.add_argument("instance", help="JSON file with wrench/weights/limits")
    common(p, seed=False)
    p.add_argument("--out", help="write the result JSON here")
    p.set_defaults(func=cmd_alloc_debug)

    p = sub.add_parser("serve", help="run the live WebSocket bridge")
    common(p, seed=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, help="WebSocket port override")
    p.add_argument("--speed", type=float, default=1.0)
    p.add_argument("--ticks", type=int, help="stop after N ticks")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
