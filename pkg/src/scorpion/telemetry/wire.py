"""Binary wire format.

Frame layout (big endian):

    0x48 0x59 | version 0x01 | type u8 | length u16 | payload | crc u16

The CRC is CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection) over
type, length and payload, so corrupted headers and bodies both fail the
check.  All floating-point fields are IEEE f32 on the wire; dataclass
constructors quantize to f32 immediately so a value always equals its
own round trip.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"HY"
VERSION = 0x01
HEADER = struct.Struct(">2sBBH")
CRC = struct.Struct(">H")
MAX_PAYLOAD = 1024

MSG_TELEMETRY = 0x01
CMD_JOYSTICK = 0x10
CMD_SET_MODE = 0x11
CMD_SET_HOLD_SETPOINT = 0x12
CMD_MANIP = 0x13
CMD_TRIM_FF = 0x14
CMD_EMERGENCY_STOP = 0x15


class ProtocolError(ValueError):
    """Malformed frame; .reason is a stable machine-readable tag."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}{': ' + detail if detail else ''}")
        self.reason = reason


def _make_crc_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021 if crc & 0x8000 else crc << 1) & 0xFFFF
        table.append(crc)
    return table


_CRC_TABLE = _make_crc_table()


def crc16_ccitt(data: bytes, crc: int = 0xFFFF) -> int:
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


def encode_frame(ftype: int, payload: bytes = b"") -> bytes:
    if not 0 <= ftype <= 0xFF:
        raise ProtocolError("bad-type", f"type {ftype} out of range")
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError("bad-length", f"payload {len(payload)} > {MAX_PAYLOAD}")
    head = HEADER.pack(MAGIC, VERSION, ftype, len(payload))
    crc = crc16_ccitt(head[2:] + payload)
    return head + payload + CRC.pack(crc)


def decode_frame(buf: bytes) -> tuple[int, bytes]:
    """Strict whole-buffer decode; raises ProtocolError on any defect."""
    if len(buf) < HEADER.size + CRC.size:
        raise ProtocolError("short", f"{len(buf)} bytes")
    magic, version, ftype, length = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise ProtocolError("bad-magic", magic.hex())
    if version != VERSION:
        raise ProtocolError("bad-version", str(version))
    if length > MAX_PAYLOAD:
        raise ProtocolError("bad-length", str(length))
    expect = HEADER.size + length + CRC.size
    if len(buf) != expect:
        raise ProtocolError("bad-length", f"have {len(buf)}, framed {expect}")
    payload = buf[HEADER.size:HEADER.size + length]
    (crc,) = CRC.unpack_from(buf, HEADER.size + length)
    if crc != crc16_ccitt(buf[2:HEADER.size] + payload):
        raise ProtocolError("bad-crc")
    return ftype, payload


class FrameDecoder:
    """Incremental decoder for a byte stream; resyncs on the magic.

    feed() returns complete (type, payload) tuples and silently skips
    garbage between frames, counting drops in .errors.
    """

    def __init__(self):
        self._buf = bytearray()
        self.errors = 0

    def feed(self, data: bytes) -> list[tuple[int, bytes]]:
        self._buf.extend(data)
        out: list[tuple[int, bytes]] = []
        while True:
            start = self._buf.find(MAGIC)
            if start < 0:
                # keep a trailing byte in case it is half a magic
                if self._buf:
                    self.errors += max(0, len(self._buf) - 1)
                del self._buf[:-1]
                return out
            if start > 0:
                self.errors += start
                del self._buf[:start]
            if len(self._buf) < HEADER.size:
                return out
            _, version, ftype, length = HEADER.unpack_from(self._buf)
            total = HEADER.size + length + CRC.size
            if version != VERSION or length > MAX_PAYLOAD:
                self.errors += 1
                del self._buf[:2]  # skip this magic, rescan
                continue
            if len(self._buf) < total:
                return out
            try:
                out.append(decode_frame(bytes(self._buf[:total])))
                del self._buf[:total]
            except ProtocolError:
                self.errors += 1
                del self._buf[:2]


# ---------------------------------------------------------------------------
# message payloads


def _f32(v: float) -> float:
    return float(np.float32(v))


def _f32_tuple(vals, n: int, name: str) -> tuple[float, ...]:
    t = tuple(float(np.float32(v)) for v in vals)
    if len(t) != n:
        raise ProtocolError("bad-field", f"{name} needs {n} values, got {len(t)}")
    return t


_TELEMETRY = struct.Struct(">Q6f6f4fB8fB2fB")


@dataclass(frozen=True)
class TelemetryFrame:
    """One 50 Hz state snapshot; all floats quantized to wire precision."""

    timestamp_us: int
    pose: tuple[float, ...]  # x y z roll pitch yaw
    rates: tuple[float, ...]  # u v w p q r (body frame)
    depth_m: float
    pressure_kpa: float
    water_temp_c: float
    battery_v: float
    mode: int
    thrust: tuple[float, ...]  # 8 thruster forces, N
    fault_bits: int
    manip_yaw: float
    manip_jaw: float
    leak: bool

    def __post_init__(self):
        object.__setattr__(self, "pose", _f32_tuple(self.pose, 6, "pose"))
        object.__setattr__(self, "rates", _f32_tuple(self.rates, 6, "rates"))
        object.__setattr__(self, "thrust", _f32_tuple(self.thrust, 8, "thrust"))
        for name in ("depth_m", "pressure_kpa", "water_temp_c", "battery_v",
                     "manip_yaw", "manip_jaw"):
            object.__setattr__(self, name, _f32(getattr(self, name)))
        if not 0 <= self.timestamp_us < 2 ** 64:
            raise ProtocolError("bad-field", "timestamp_us out of range")
        if not 0 <= self.mode <= 0xFF or not 0 <= self.fault_bits <= 0xFF:
            raise ProtocolError("bad-field", "mode/fault_bits out of range")
        object.__setattr__(self, "leak", bool(self.leak))

    def to_payload(self) -> bytes:
        return _TELEMETRY.pack(
            self.timestamp_us, *self.pose, *self.rates,
            self.depth_m, self.pressure_kpa, self.water_temp_c, self.battery_v,
            self.mode, *self.thrust, self.fault_bits,
            self.manip_yaw, self.manip_jaw, int(self.leak),
        )

    @classmethod
    def from_payload(cls, payload: bytes) -> "TelemetryFrame":
        if len(payload) != _TELEMETRY.size:
            raise ProtocolError(
                "bad-length",
                f"telemetry payload {len(payload)} != {_TELEMETRY.size}",
            )
        v = _TELEMETRY.unpack(payload)
        return cls(
            timestamp_us=v[0], pose=v[1:7], rates=v[7:13],
            depth_m=v[13], pressure_kpa=v[14], water_temp_c=v[15],
            battery_v=v[16], mode=v[17], thrust=v[18:26], fault_bits=v[26],
            manip_yaw=v[27], manip_jaw=v[28], leak=bool(v[29]),
        )


@dataclass(frozen=True)
class JoystickCmd:
    axes: tuple[float, ...]  # surge sway heave roll pitch yaw in [-1, 1]
    seq: int = 0
    _STRUCT = struct.Struct(">6fI")

    def __post_init__(self):
        object.__setattr__(self, "axes", _f32_tuple(self.axes, 6, "axes"))
        if not 0 <= self.seq < 2 ** 32:
            raise ProtocolError("bad-field", "seq out of range")

    def to_payload(self) -> bytes:
        return self._STRUCT.pack(*self.axes, self.seq)

    @classmethod
    def from_payload(cls, payload: bytes) -> "JoystickCmd":
        v = cls._STRUCT.unpack(payload)
        return cls(axes=v[:6], seq=v[6])


@dataclass(frozen=True)
class SetModeCmd:
    mode: int
    _STRUCT = struct.Struct(">B")

    def to_payload(self) -> bytes:
        return self._STRUCT.pack(self.mode)

    @classmethod
    def from_payload(cls, payload: bytes) -> "SetModeCmd":
        return cls(mode=cls._STRUCT.unpack(payload)[0])


@dataclass(frozen=True)
class SetHoldSetpointCmd:
    pose: tuple[float, ...]
    _STRUCT = struct.Struct(">6f")

    def __post_init__(self):
        object.__setattr__(self, "pose", _f32_tuple(self.pose, 6, "pose"))

    def to_payload(self) -> bytes:
        return self._STRUCT.pack(*self.pose)

    @classmethod
    def from_payload(cls, payload: bytes) -> "SetHoldSetpointCmd":
        return cls(pose=cls._STRUCT.unpack(payload))


@dataclass(frozen=True)
class ManipCmd:
    yaw_rate: float
    jaw_rate: float
    _STRUCT = struct.Struct(">2f")

    def __post_init__(self):
        object.__setattr__(self, "yaw_rate", _f32(self.yaw_rate))
        object.__setattr__(self, "jaw_rate", _f32(self.jaw_rate))

    def to_payload(self) -> bytes:
        return self._STRUCT.pack(self.yaw_rate, self.jaw_rate)

    @classmethod
    def from_payload(cls, payload: bytes) -> "ManipCmd":
        return cls(*cls._STRUCT.unpack(payload))


@dataclass(frozen=True)
class TrimFeedforwardCmd:
    wrench: tuple[float, ...]
    _STRUCT = struct.Struct(">6f")

    def __post_init__(self):
        object.__setattr__(self, "wrench", _f32_tuple(self.wrench, 6, "wrench"))

    def to_payload(self) -> bytes:
        return self._STRUCT.pack(*self.wrench)

    @classmethod
    def from_payload(cls, payload: bytes) -> "TrimFeedforwardCmd":
        return cls(wrench=cls._STRUCT.unpack(payload))


@dataclass(frozen=True)
class EmergencyStopCmd:
    def to_payload(self) -> bytes:
        return b""

    @classmethod
    def from_payload(cls, payload: bytes) -> "EmergencyStopCmd":
        if payload:
            raise ProtocolError("bad-length", "emergency stop carries no payload")
        return cls()


_TYPE_TO_CLS = {
    MSG_TELEMETRY: TelemetryFrame,
    CMD_JOYSTICK: JoystickCmd,
    CMD_SET_MODE: SetModeCmd,
    CMD_SET_HOLD_SETPOINT: SetHoldSetpointCmd,
    CMD_MANIP: ManipCmd,
    CMD_TRIM_FF: TrimFeedforwardCmd,
    CMD_EMERGENCY_STOP: EmergencyStopCmd,
}
_CLS_TO_TYPE = {cls: t for t, cls in _TYPE_TO_CLS.items()}


def encode_command(msg) -> bytes:
    """Any wire message object -> framed bytes."""
    try:
        ftype = _CLS_TO_TYPE[type(msg)]
    except KeyError:
        raise ProtocolError("bad-type", type(msg).__name__) from None
    return encode_frame(ftype, msg.to_payload())


def decode_command(ftype: int, payload: bytes):
    """(type, payload) from a decoded frame -> wire message object."""
    cls = _TYPE_TO_CLS.get(ftype)
    if cls is None:
        raise ProtocolError("bad-type", f"0x{ftype:02x}")
    try:
        return cls.from_payload(payload)
    except struct.error as e:
        raise ProtocolError("bad-length", str(e)) from e
