"""WebSocket JSON bridge for browser consoles.

Mirrors the binary telemetry stream as JSON messages and accepts JSON
commands, translating them onto the same validated wire dataclasses the
TCP link uses.  Also serves the camera tools the console's measure panel
needs: fetch the current synthetic camera frame as PNG, calibrate a
pixel scale, and measure lengths against it.

The JSON message shapes are documented in schema/telemetry.schema.json.
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
import logging

from ..control import ControlMode
from ..vehicle import DT
from ..vision.measure import CalibrationError, CalibrationScale, calibrate, measure_length
from ..vision.render import CameraIntrinsics, ImageFrame, Rect, TMarker, render_scene
from .session import FAULT_ALLOCATION, FAULT_ESTOP, FAULT_LEAK, SimSession
from .wire import (
    EmergencyStopCmd,
    JoystickCmd,
    ManipCmd,
    ProtocolError,
    SetHoldSetpointCmd,
    SetModeCmd,
    TelemetryFrame,
    TrimFeedforwardCmd,
)

log = logging.getLogger(__name__)

MODE_NAMES = {m: m.name.lower() for m in ControlMode}
NAME_MODES = {v: k for k, v in MODE_NAMES.items()}


def frame_to_json(frame: TelemetryFrame) -> dict:
    x, y, z, roll, pitch, yaw = frame.pose
    u, v, w, p, q, r = frame.rates
    return {
        "type": "telemetry",
        "timestamp_us": frame.timestamp_us,
        "pose": {"x": x, "y": y, "z": z, "roll": roll, "pitch": pitch, "yaw": yaw},
        "rates": {"u": u, "v": v, "w": w, "p": p, "q": q, "r": r},
        "depth_m": frame.depth_m,
        "pressure_kpa": frame.pressure_kpa,
        "water_temp_c": frame.water_temp_c,
        "battery_v": frame.battery_v,
        "mode": MODE_NAMES.get(ControlMode(frame.mode), str(frame.mode)),
        "thrust": list(frame.thrust),
        "faults": {
            "bits": frame.fault_bits,
            "allocation": bool(frame.fault_bits & FAULT_ALLOCATION),
            "leak": bool(frame.fault_bits & FAULT_LEAK),
            "estop": bool(frame.fault_bits & FAULT_ESTOP),
        },
        "manip": {"yaw": frame.manip_yaw, "jaw": frame.manip_jaw},
        "leak": frame.leak,
    }


def json_to_command(obj: dict):
    """JSON command message -> wire command dataclass (validates shape)."""
    if not isinstance(obj, dict) or "type" not in obj:
        raise ProtocolError("bad-json", "missing type")
    kind = obj["type"]
    try:
        if kind == "joystick":
            return JoystickCmd(axes=tuple(obj["axes"]), seq=int(obj.get("seq", 0)))
        if kind == "set_mode":
            mode = obj["mode"]
            if isinstance(mode, str):
                if mode not in NAME_MODES:
                    raise ProtocolError("bad-field", f"unknown mode {mode!r}")
                mode = int(NAME_MODES[mode])
            return SetModeCmd(mode=int(mode))
        if kind == "set_hold_setpoint":
            return SetHoldSetpointCmd(pose=tuple(obj["pose"]))
        if kind == "manip":
            return ManipCmd(yaw_rate=float(obj["yaw_rate"]),
                            jaw_rate=float(obj["jaw_rate"]))
        if kind == "trim_ff":
            return TrimFeedforwardCmd(wrench=tuple(obj["wrench"]))
        if kind == "emergency_stop":
            return EmergencyStopCmd()
    except ProtocolError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError("bad-json", f"{kind}: {e}") from e
    raise ProtocolError("bad-type", str(kind))


def default_camera_scene():
    """Static inspection scene for the console camera panel."""
    intr = CameraIntrinsics(k1=-0.05)
    objects = [
        Rect("reference", (235, 235, 235), (-0.75, -0.5, 2.4), 0.5, 0.08),
        TMarker("t-marker", (215, 30, 30), (0.0, 0.1, 2.4), 0.42,
                color_name="red"),
        Rect("plate", (220, 205, 35), (0.75, -0.35, 2.4), 0.6, 0.2,
             color_name="yellow"),
    ]
    return objects, intr


def _png_base64(frame: ImageFrame) -> str:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(frame.pixels).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class TelemetryBridge:
    """Owns the sim tick loop and fans telemetry out to every client."""

    def __init__(
        self,
        session: SimSession,
        host: str = "127.0.0.1",
        port: int = 8080,
        speed: float = 1.0,
        scene=None,
    ):
        self.session = session
        self.host = host
        self.port = port
        self.speed = speed
        objects, intr = scene if scene is not None else default_camera_scene()
        self._scene_objects = objects
        self._intrinsics = intr
        self._camera_frame: ImageFrame | None = None
        self._gts = None
        self._scale: CalibrationScale | None = None
        self._clients: set = set()
        self._server = None
        self._ticker: asyncio.Task | None = None

    # -- camera tools --------------------------------------------------------

    def camera_frame(self) -> ImageFrame:
        if self._camera_frame is None:
            self._camera_frame, self._gts = render_scene(
                self._scene_objects, self._intrinsics, 640, 480,
                seed=self.session.seed,
            )
        return self._camera_frame

    def _rpc(self, obj: dict) -> dict | None:
        kind = obj.get("type")
        if kind == "get_frame":
            frame = self.camera_frame()
            return {
                "type": "frame",
                "width": frame.width,
                "height": frame.height,
                "png_base64": _png_base64(frame),
                "annotations": [
                    {"label": g.label, "box": list(g.box), "length_m": g.length_m}
                    for g in (self._gts or [])
                ],
            }
        if kind == "calibrate":
            self._scale = calibrate(
                tuple(obj["p1"]), tuple(obj["p2"]), float(obj["length_m"]),
                intrinsics=self._intrinsics,
            )
            return {
                "type": "calibration",
                "pixels_per_meter": self._scale.pixels_per_meter,
                "reference_length_m": self._scale.reference_length_m,
            }
        if kind == "measure":
            if self._scale is None:
                return {"type": "error", "error": "not-calibrated",
                        "detail": "calibrate before measuring"}
            length = measure_length(
                tuple(obj["p1"]), tuple(obj["p2"]), self._scale,
                intrinsics=self._intrinsics, frame=self.camera_frame(),
                subpixel=bool(obj.get("subpixel", True)),
            )
            return {"type": "measurement", "length_m": length}
        return None

    # -- websocket plumbing ---------------------------------------------------

    async def _broadcast(self, text: str) -> None:
        dead = []
        for ws in self._clients:
            try:
                await ws.send(text)
            except Exception:
                dead.append(ws)
        for ws in dead:
            self._clients.discard(ws)

    async def _tick_loop(self, ticks: int | None) -> None:
        period = DT / self.speed if self.speed > 0 else 0.0
        n = 0
        while ticks is None or n < ticks:
            frame = self.session.tick()
            await self._broadcast(json.dumps(frame_to_json(frame)))
            n += 1
            if period > 0:
                await asyncio.sleep(period)
            else:
                await asyncio.sleep(0)

    async def _handler(self, ws) -> None:
        self._clients.add(ws)
        try:
            await ws.send(json.dumps({
                "type": "hello",
                "version": 1,
                "tick_s": DT,
                "mode_names": list(NAME_MODES),
                "thrust_limits": {
                    "min": self.session.layout.f_min.tolist(),
                    "max": self.session.layout.f_max.tolist(),
                },
            }))
            async for raw in ws:
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as e:
                    await ws.send(json.dumps(
                        {"type": "error", "error": "bad-json", "detail": str(e)}))
                    continue
                try:
                    reply = self._rpc(obj)
                except (CalibrationError, ValueError, KeyError, TypeError) as e:
                    await ws.send(json.dumps(
                        {"type": "error", "error": "bad-request", "detail": str(e)}))
                    continue
                if reply is not None:
                    await ws.send(json.dumps(reply))
                    continue
                try:
                    self.session.submit(json_to_command(obj))
                    await ws.send(json.dumps(
                        {"type": "ack", "command": obj.get("type")}))
                except ProtocolError as e:
                    await ws.send(json.dumps(
                        {"type": "error", "error": e.reason, "detail": str(e)}))
        finally:
            self._clients.discard(ws)

    async def serve(self, ticks: int | None = None) -> None:
        """Run the server plus tick loop until cancelled or ticks elapse."""
        import websockets

        async with websockets.serve(self._handler, self.host, self.port) as server:
            self._server = server
            self.port = server.sockets[0].getsockname()[1] if server.sockets else self.port
            self._ticker = asyncio.create_task(self._tick_loop(ticks))
            try:
                await self._ticker
            finally:
                self._ticker.cancel()
