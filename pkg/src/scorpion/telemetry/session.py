"""Headless simulation session: commands in, telemetry out, fixed 50 Hz.

One tick = drain the command queue, run the controller, integrate the
vehicle, sample sensors, emit a TelemetryFrame.  Everything is
deterministic for a given seed and command schedule, which is what makes
replay files byte-identical across runs.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import replace

import numpy as np

from ..allocation import Wrench
from ..config import ScorpionConfig
from ..control import ControlMode, ControllerState, controller_step, set_hold_setpoint, set_mode
from ..vehicle import (
    DT,
    ManipulatorState,
    Pose,
    Twist,
    build_allocation_matrix,
    read_sensors,
    step_dynamics,
    step_manipulator,
)
from .wire import (
    MSG_TELEMETRY,
    EmergencyStopCmd,
    JoystickCmd,
    ManipCmd,
    SetHoldSetpointCmd,
    SetModeCmd,
    TelemetryFrame,
    TrimFeedforwardCmd,
    decode_command,
    encode_frame,
)

log = logging.getLogger(__name__)

FAULT_ALLOCATION = 0x01
FAULT_LEAK = 0x02
FAULT_ESTOP = 0x04

TICK_US = int(round(DT * 1e6))


class SimSession:
    """Single-producer command queue feeding a deterministic sim loop."""

    def __init__(self, config: ScorpionConfig | None = None, seed: int | None = None):
        self.config = config or ScorpionConfig()
        self.seed = self.config.seed if seed is None else seed
        self.params = self.config.vehicle
        self.gains = self.config.gains
        self.layout = self.config.layout
        self.B = build_allocation_matrix(self.layout)
        self.env = self.config.environment
        self.pose = Pose()
        self.twist = Twist()
        self.state = ControllerState(mode=self.config.default_mode)
        self.manip = ManipulatorState()
        self.tick_count = 0
        self.rejected_commands = 0
        self._queue: deque = deque()
        self._joystick = Wrench()
        self._manip_rates = (0.0, 0.0)
        self._estop = False
        self._leak_latched = False
        self._last_seq = -1
        self._thrust = np.zeros(len(self.layout.positions))

    # -- command intake ----------------------------------------------------

    def submit(self, msg) -> None:
        """Queue a command message for the next tick."""
        self._queue.append(msg)

    def handle_frame(self, ftype: int, payload: bytes) -> None:
        """Wire-level entry point used by the transports."""
        self.submit(decode_command(ftype, payload))

    def _apply(self, msg) -> None:
        if isinstance(msg, JoystickCmd):
            if msg.seq and msg.seq <= self._last_seq:
                return  # stale packet overtaken by a newer stick sample
            self._last_seq = max(self._last_seq, msg.seq)
            self._joystick = Wrench(*msg.axes)
        elif isinstance(msg, SetModeCmd):
            try:
                mode = ControlMode(msg.mode)
            except ValueError:
                self.rejected_commands += 1
                log.warning("ignoring unknown control mode %d", msg.mode)
                return
            self._estop = False
            self.state = set_mode(self.state, mode, self.pose)
        elif isinstance(msg, SetHoldSetpointCmd):
            self.state = set_hold_setpoint(self.state, Pose(*msg.pose))
        elif isinstance(msg, ManipCmd):
            self._manip_rates = (msg.yaw_rate, msg.jaw_rate)
        elif isinstance(msg, TrimFeedforwardCmd):
            self.state = replace(self.state, trim_ff=np.asarray(msg.wrench))
        elif isinstance(msg, EmergencyStopCmd):
            self._estop = True
            self._joystick = Wrench()
            self._manip_rates = (0.0, 0.0)
        else:
            self.rejected_commands += 1
            log.warning("ignoring unsupported command %r", msg)

    # -- simulation --------------------------------------------------------

    def tick(self) -> TelemetryFrame:
        while self._queue:
            self._apply(self._queue.popleft())

        if self._estop:
            self._thrust = np.zeros_like(self._thrust)
        else:
            self._thrust, self.state = controller_step(
                self.pose, self.twist, self.state, self.gains,
                self._joystick, DT, B=self.B,
            )
        self.pose, self.twist = step_dynamics(
            self.pose, self.twist, self._thrust, self.env.current,
            self.params, self.B, DT,
        )
        self.manip = step_manipulator(self.manip, *self._manip_rates, DT)
        self.tick_count += 1

        reading = read_sensors(self.pose, self.env,
                               rng_seed=self.seed * 1_000_003 + self.tick_count)
        if reading.leak_flag:
            self._leak_latched = True

        faults = 0
        if self.state.fault:
            faults |= FAULT_ALLOCATION
        if self._leak_latched:
            faults |= FAULT_LEAK
        if self._estop:
            faults |= FAULT_ESTOP

        return TelemetryFrame(
            timestamp_us=self.tick_count * TICK_US,
            pose=tuple(self.pose.as_array()),
            rates=tuple(self.twist.as_array()),
            depth_m=reading.depth_m,
            pressure_kpa=reading.water_pressure_pa / 1000.0,
            water_temp_c=self.env.water_temp_c,
            battery_v=self._battery_voltage(),
            mode=int(self.state.mode),
            thrust=tuple(self._thrust),
            fault_bits=faults,
            manip_yaw=self.manip.yaw_angle,
            manip_jaw=self.manip.jaw_aperture,
            leak=self._leak_latched,
        )

    def _battery_voltage(self) -> float:
        """Simple discharge model: sag with drawn thrust, drain with time."""
        drawn = float(np.sum(np.abs(self._thrust)))
        hours = self.tick_count * DT / 3600.0
        return max(12.0, 16.8 - 0.9 * hours - 0.004 * drawn)

    def telemetry_bytes(self, frame: TelemetryFrame) -> bytes:
        return encode_frame(MSG_TELEMETRY, frame.to_payload())

    def run(self, ticks: int):
        """Yield telemetry frames for a fixed number of ticks."""
        for _ in range(ticks):
            yield self.tick()
