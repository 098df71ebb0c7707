#!/usr/bin/env python3
"""Record websocket fixtures for the console test suite.

Runs a real in-process telemetry bridge, walks it through one of every
server message type (hello, telemetry, ack, error, frame, calibration,
measurement), and saves the raw JSON messages to
tests/fixtures/server-messages.json so the schema tests can run with no
bridge process at all.

Also writes tests/fixtures/measure-crosscheck.json: known scene points on
the default camera scene plus the lengths the measurement engine reports
for them, so the live end-to-end test can check the console's measure tool
against the same numbers.

Re-run after changing the bridge contract:  python3 tools/record_fixtures.py
"""
from __future__ import annotations

import asyncio
import json
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def record_crosscheck() -> dict:
    from scorpion.config import ScorpionConfig
    from scorpion.telemetry.bridge import default_camera_scene
    from scorpion.vision.measure import calibrate, measure_length
    from scorpion.vision.render import render_scene

    cfg = ScorpionConfig()
    objects, intrinsics = default_camera_scene()
    frame, gts = render_scene(objects, intrinsics, 640, 480, seed=cfg.seed)
    by_label = {g.label: g for g in gts}

    ref = by_label["reference"]
    target = by_label["t-marker"]
    cal_p1 = [float(v) for v in ref.endpoints[0]]
    cal_p2 = [float(v) for v in ref.endpoints[1]]
    tgt_p1 = [float(v) for v in target.endpoints[0]]
    tgt_p2 = [float(v) for v in target.endpoints[1]]

    scale = calibrate(tuple(cal_p1), tuple(cal_p2), ref.length_m,
                      intrinsics=intrinsics)
    measured = measure_length(tuple(tgt_p1), tuple(tgt_p2), scale,
                              intrinsics=intrinsics, frame=frame,
                              subpixel=True)
    return {
        "seed": cfg.seed,
        "calibrate": {"p1": cal_p1, "p2": cal_p2, "length_m": ref.length_m},
        "pixels_per_meter": scale.pixels_per_meter,
        "measure": {"p1": tgt_p1, "p2": tgt_p2},
        "expected_length_m": measured,
        "true_length_m": target.length_m,
    }


async def record_server_messages() -> list:
    import websockets

    from scorpion.config import ScorpionConfig
    from scorpion.telemetry.bridge import TelemetryBridge
    from scorpion.telemetry.session import SimSession

    # Default camera scene: flat colors compress to a few kilobytes of PNG,
    # and the calibration/measurement replies carry physically sane values.
    session = SimSession(config=ScorpionConfig(seed=5))
    bridge = TelemetryBridge(session, port=0, speed=0.0)
    # speed=0 free-runs the tick loop; limit ticks so the server exits.
    server = asyncio.create_task(bridge.serve(ticks=2000))
    while bridge.port == 0:
        await asyncio.sleep(0.01)

    received: list = []
    async with websockets.connect(f"ws://127.0.0.1:{bridge.port}") as ws:

        async def recv_until(kind: str, keep_telemetry: int = 0) -> dict:
            kept = 0
            while True:
                msg = json.loads(await ws.recv())
                if msg["type"] == "telemetry":
                    if kept < keep_telemetry:
                        received.append(msg)
                        kept += 1
                    continue
                received.append(msg)
                if msg["type"] == kind:
                    return msg
                raise RuntimeError(f"wanted {kind}, bridge sent {msg['type']}")

        await recv_until("hello", keep_telemetry=0)
        # a few live telemetry frames
        for _ in range(3):
            while True:
                msg = json.loads(await ws.recv())
                if msg["type"] == "telemetry":
                    received.append(msg)
                    break

        await ws.send(json.dumps({
            "type": "joystick", "axes": [0.5, -0.25, 0, 0, 0, 1.0], "seq": 1,
        }))
        await recv_until("ack")
        await ws.send(json.dumps({"type": "set_mode", "mode": "warp"}))
        await recv_until("error")  # unknown mode
        await ws.send(json.dumps({
            "type": "measure", "p1": [10, 10], "p2": [20, 20],
        }))
        await recv_until("error")  # not calibrated yet
        await ws.send(json.dumps({"type": "get_frame"}))
        frame = await recv_until("frame")
        ref = next(a for a in frame["annotations"] if a["label"] == "reference")
        x0, y0, x1, y1 = ref["box"]
        ymid = (y0 + y1) / 2
        await ws.send(json.dumps({
            "type": "calibrate", "p1": [x0, ymid], "p2": [x1, ymid],
            "length_m": ref["length_m"],
        }))
        await recv_until("calibration")
        tm = next(a for a in frame["annotations"] if a["label"] == "t-marker")
        xmid = (tm["box"][0] + tm["box"][2]) / 2
        await ws.send(json.dumps({
            "type": "measure", "p1": [xmid, tm["box"][1]],
            "p2": [xmid, tm["box"][3]], "subpixel": True,
        }))
        await recv_until("measurement")
        await ws.send(json.dumps({"type": "emergency_stop"}))
        await recv_until("ack")

    server.cancel()
    try:
        await server
    except (asyncio.CancelledError, Exception):
        pass
    return received


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    crosscheck = record_crosscheck()
    (FIXTURES / "measure-crosscheck.json").write_text(
        json.dumps(crosscheck, indent=2) + "\n")
    print(f"measure-crosscheck.json: expected {crosscheck['expected_length_m']:.6f} m "
          f"(true {crosscheck['true_length_m']}) at seed {crosscheck['seed']}")

    messages = asyncio.run(record_server_messages())
    (FIXTURES / "server-messages.json").write_text(
        json.dumps(messages, indent=2) + "\n")
    kinds = {}
    for m in messages:
        kinds[m["type"]] = kinds.get(m["type"], 0) + 1
    print(f"server-messages.json: {len(messages)} messages {kinds}")


if __name__ == "__main__":
    main()
