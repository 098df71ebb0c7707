"""CSV telemetry logging and replay.

Floats are written with %.9g, which round-trips f32 wire values exactly,
so a replayed file reconstructs the original frames bit for bit.  The
log flushes at least once per simulated second so a crash loses at most
one second of data.
"""

from __future__ import annotations

from pathlib import Path

from .wire import TelemetryFrame

CSV_HEADER = (
    "timestamp_us,x,y,z,roll,pitch,yaw,u,v,w,p,q,r,"
    "depth_m,pressure_kpa,water_temp_c,battery_v,mode,"
    "f0,f1,f2,f3,f4,f5,f6,f7,fault_bits,manip_yaw,manip_jaw,leak"
)

_FLUSH_INTERVAL_US = 1_000_000


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def frame_to_row(frame: TelemetryFrame) -> str:
    parts = [str(frame.timestamp_us)]
    parts += [_fmt(v) for v in frame.pose]
    parts += [_fmt(v) for v in frame.rates]
    parts += [_fmt(frame.depth_m), _fmt(frame.pressure_kpa),
              _fmt(frame.water_temp_c), _fmt(frame.battery_v)]
    parts.append(str(frame.mode))
    parts += [_fmt(v) for v in frame.thrust]
    parts.append(str(frame.fault_bits))
    parts += [_fmt(frame.manip_yaw), _fmt(frame.manip_jaw)]
    parts.append("1" if frame.leak else "0")
    return ",".join(parts)


def row_to_frame(row: str, lineno: int = 0) -> TelemetryFrame:
    parts = row.strip().split(",")
    if len(parts) != 30:
        raise ValueError(f"line {lineno}: expected 30 fields, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as e:
        raise ValueError(f"line {lineno}: {e}") from e
    return TelemetryFrame(
        timestamp_us=int(parts[0]),
        pose=vals[1:7],
        rates=vals[7:13],
        depth_m=vals[13],
        pressure_kpa=vals[14],
        water_temp_c=vals[15],
        battery_v=vals[16],
        mode=int(parts[17]),
        thrust=vals[18:26],
        fault_bits=int(parts[26]),
        manip_yaw=vals[27],
        manip_jaw=vals[28],
        leak=parts[29] == "1",
    )


class CsvTelemetryLog:
    """Streaming CSV writer with a once-per-sim-second flush guarantee."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="")
        self._fh.write(CSV_HEADER + "\n")
        self._last_flush_us = 0
        self.rows = 0

    def log(self, frame: TelemetryFrame) -> None:
        self._fh.write(frame_to_row(frame) + "\n")
        self.rows += 1
        if frame.timestamp_us - self._last_flush_us >= _FLUSH_INTERVAL_US:
            self._fh.flush()
            self._last_flush_us = frame.timestamp_us

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()

    def __enter__(self) -> "CsvTelemetryLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_telemetry_csv(path: str | Path) -> list[TelemetryFrame]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: missing or unexpected header")
    return [row_to_frame(row, lineno=i) for i, row in enumerate(lines[1:], start=2)
            if row.strip()]
