"""Binary telemetry link: framing, sim session, transports, CSV log."""

from .wire import (  # noqa: F401
    CMD_EMERGENCY_STOP,
    CMD_JOYSTICK,
    CMD_MANIP,
    CMD_SET_HOLD_SETPOINT,
    CMD_SET_MODE,
    CMD_TRIM_FF,
    MSG_TELEMETRY,
    EmergencyStopCmd,
    FrameDecoder,
    JoystickCmd,
    ManipCmd,
    ProtocolError,
    SetHoldSetpointCmd,
    SetModeCmd,
    TelemetryFrame,
    TrimFeedforwardCmd,
    crc16_ccitt,
    decode_command,
    decode_frame,
    encode_command,
    encode_frame,
)
from .session import FAULT_ALLOCATION, FAULT_ESTOP, FAULT_LEAK, SimSession  # noqa: F401
from .log import CsvTelemetryLog, read_telemetry_csv  # noqa: F401
from .net import TcpCommandServer, UdpTelemetryPublisher  # noqa: F401
