"""Station-keeping and manual thrust control.

Per control tick the station-keeping path runs a fixed pipeline:
pose error -> PID (filtered derivative) -> feed-forward trim ->
constrained allocation -> slew limiting -> back-calculation
anti-windup.  Manual modes bypass the PID and map the joystick either
directly to a wrench demand (constant mode) or into an integrating
demand for gradual acceleration (incremental mode).

The integrator is kept in wrench units: it accumulates Ki*e*dt and is
added to the output directly, which lets the anti-windup term
Kaw*(tau_realized - tau_demanded)*dt act on it without unit juggling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .allocation import SolverFailure, Wrench, allocate
from .vehicle import (
    DT,
    Pose,
    ThrusterLayout,
    Twist,
    build_allocation_matrix,
    default_layout,
    wrap_angle,
)

log = logging.getLogger(__name__)


class ControlMode(IntEnum):
    MANUAL_CONSTANT = 0
    MANUAL_INCREMENTAL = 1
    STATION_KEEP = 2


@dataclass(frozen=True)
class PoseError:
    """Setpoint minus pose; attitude components wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.z, self.roll, self.pitch, self.yaw], dtype=float
        )


def _vec6(v) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(6)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PidGains:
    """Per-axis controller parameters (surge, sway, heave, roll, pitch, yaw).

    kp/ki/kd      PID gains on the body-frame pose error
    kaw           back-calculation anti-windup gain
    i_max         integrator clamp, wrench units
    d_alpha       derivative low-pass coefficient (new-sample weight)
    rate_damping  wrench per unit body rate, adds inner-loop damping
    max_slew      per-thruster slew limit, N/s
    max_demand    wrench demand cap per axis (manual modes)
    ramp_rate     incremental-mode demand ramp at full stick, wrench/s
    ff_gain       joystick fine-trim scale in station-keep, wrench units
    """

    kp: np.ndarray = field(default_factory=lambda: _vec6([150, 150, 180, 15, 15, 40]))
    ki: np.ndarray = field(default_factory=lambda: _vec6([30, 30, 40, 2, 2, 8]))
    kd: np.ndarray = field(default_factory=lambda: _vec6([120, 120, 140, 6, 6, 25]))
    kaw: float = 2.0
    i_max: np.ndarray = field(default_factory=lambda: _vec6([60, 60, 80, 10, 10, 20]))
    d_alpha: float = 0.1
    rate_damping: np.ndarray = field(default_factory=lambda: _vec6([0, 0, 0, 2, 2, 5]))
    max_slew: float = 400.0
    max_demand: np.ndarray = field(
        default_factory=lambda: _vec6([150, 150, 200, 25, 25, 50])
    )
    ramp_rate: np.ndarray = field(default_factory=lambda: _vec6([60, 60, 80, 10, 10, 20]))
    ff_gain: np.ndarray = field(default_factory=lambda: _vec6([15, 15, 20, 3, 3, 6]))

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "i_max", "rate_damping", "max_demand",
                     "ramp_rate", "ff_gain"):
            object.__setattr__(self, name, _vec6(getattr(self, name)))
        if np.any(self.kp < 0) or np.any(self.ki < 0) or np.any(self.kd < 0):
            raise ValueError("PID gains must be non-negative")
        if self.kaw < 0:
            raise ValueError("kaw must be non-negative")
        if not np.all(self.i_max > 0) or not np.all(np.isfinite(self.i_max)):
            raise ValueError("i_max must be positive and finite")


def _zeros6() -> np.ndarray:
    return np.zeros(6)


@dataclass(frozen=True)
class ControllerState:
    """Everything the controller carries between ticks."""

    mode: ControlMode = ControlMode.MANUAL_CONSTANT
    integrator: np.ndarray = field(default_factory=_zeros6)
    e_prev: np.ndarray = field(default_factory=_zeros6)
    d_filt: np.ndarray = field(default_factory=_zeros6)
    f_prev: np.ndarray = field(default_factory=lambda: np.zeros(8))
    setpoint: Pose = field(default_factory=Pose)
    tau_manual: np.ndarray = field(default_factory=_zeros6)
    trim_ff: np.ndarray = field(default_factory=_zeros6)
    fault: bool = False


def set_mode(state: ControllerState, mode: ControlMode, pose: Pose) -> ControllerState:
    """Switch mode; entering station-keep captures pose as the hold setpoint."""
    if mode == state.mode:
        return state
    log.info("control mode %s -> %s", state.mode.name, mode.name)
    if mode == ControlMode.STATION_KEEP:
        return replace(
            state,
            mode=mode,
            setpoint=pose.normalized(),
            integrator=np.zeros(6),
            e_prev=np.zeros(6),
            d_filt=np.zeros(6),
        )
    return replace(state, mode=mode, tau_manual=np.zeros(6))


def set_hold_setpoint(state: ControllerState, setpoint: Pose) -> ControllerState:
    return replace(state, setpoint=setpoint.normalized(), integrator=np.zeros(6),
                   e_prev=np.zeros(6), d_filt=np.zeros(6))


def compute_error(pose: Pose, setpoint: Pose) -> PoseError:
    """Componentwise setpoint - pose; angles take the shortest signed path."""
    d = setpoint.as_array() - pose.as_array()
    return PoseError(
        x=d[0],
        y=d[1],
        z=d[2],
        roll=wrap_angle(d[3]),
        pitch=wrap_angle(d[4]),
        yaw=wrap_angle(d[5]),
    )


def pid_step(
    e: PoseError,
    state: ControllerState,
    gains: PidGains,
    feed_forward: Wrench,
    dt: float = DT,
) -> tuple[Wrench, ControllerState]:
    """One PID update; returns the demanded wrench and the advanced state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    ev = e.as_array()
    integ = np.clip(state.integrator + gains.ki * ev * dt, -gains.i_max, gains.i_max)
    d_raw = (ev - state.e_prev) / dt
    d_filt = (1.0 - gains.d_alpha) * state.d_filt + gains.d_alpha * d_raw
    tau = gains.kp * ev + integ + gains.kd * d_filt + feed_forward.as_array()
    new = replace(state, integrator=integ, e_prev=ev, d_filt=d_filt)
    return Wrench.from_array(tau), new


def rate_limit(
    f_cmd: np.ndarray, f_prev: np.ndarray, max_slew: float, dt: float = DT
) -> np.ndarray:
    """Move each thruster toward its command by at most max_slew*dt."""
    if max_slew <= 0:
        raise ValueError("max_slew must be positive")
    step = max_slew * dt
    return np.clip(np.asarray(f_cmd, dtype=float), f_prev - step, f_prev + step)


def anti_windup(
    state: ControllerState,
    tau_unsat: Wrench,
    tau_realized: Wrench,
    gains: PidGains,
    dt: float = DT,
) -> ControllerState:
    """Back-calculate the integrator toward what the thrusters delivered."""
    delta = gains.kaw * (tau_realized.as_array() - tau_unsat.as_array()) * dt
    integ = np.clip(state.integrator + delta, -gains.i_max, gains.i_max)
    return replace(state, integrator=integ)


def _body_error(e: PoseError, pose: Pose) -> np.ndarray:
    """Rotate the world-frame position error into the yaw-aligned body frame."""
    cy, sy = math.cos(pose.yaw), math.sin(pose.yaw)
    ev = e.as_array()
    bx = cy * ev[0] + sy * ev[1]
    by = -sy * ev[0] + cy * ev[1]
    return np.array([bx, by, ev[2], ev[3], ev[4], ev[5]])


_DEFAULT_LAYOUT = default_layout()
_DEFAULT_B = build_allocation_matrix(_DEFAULT_LAYOUT)


def controller_step(
    pose: Pose,
    rates: Twist,
    state: ControllerState,
    gains: PidGains,
    joystick: Wrench,
    dt: float = DT,
    layout: ThrusterLayout | None = None,
    B: np.ndarray | None = None,
    weights: np.ndarray | None = None,
) -> tuple[np.ndarray, ControllerState]:
    """One full control tick; returns the thrust command and next state.

    On allocation solver failure the command degrades to zero thrust and
    the state's fault flag latches for telemetry.
    """
    lay = layout if layout is not None else _DEFAULT_LAYOUT
    if B is None:
        B = _DEFAULT_B if layout is None else build_allocation_matrix(lay)
    w = np.ones(6) if weights is None else np.asarray(weights, dtype=float)
    stick = np.clip(joystick.as_array(), -1.0, 1.0)

    if state.mode == ControlMode.STATION_KEEP:
        e = compute_error(pose, state.setpoint)
        e_body = PoseError(*_body_error(e, pose))
        ff = Wrench.from_array(stick * gains.ff_gain + state.trim_ff)
        tau_unsat, state = pid_step(e_body, state, gains, ff, dt)
        tau_arr = tau_unsat.as_array() - gains.rate_damping * rates.as_array()
        tau_unsat = Wrench.from_array(tau_arr)
    elif state.mode == ControlMode.MANUAL_CONSTANT:
        tau_unsat = Wrench.from_array(stick * gains.max_demand + state.trim_ff)
    else:  # incremental: stick integrates the demand
        tau_m = np.clip(
            state.tau_manual + stick * gains.ramp_rate * dt,
            -gains.max_demand,
            gains.max_demand,
        )
        state = replace(state, tau_manual=tau_m)
        tau_unsat = Wrench.from_array(tau_m + state.trim_ff)

    try:
        res = allocate(B, tau_unsat.as_array(), w, lay.f_min, lay.f_max)
    except SolverFailure:
        log.error("allocation solver failure; commanding zero thrust")
        zero = np.zeros(lay.n_thrusters)
        return zero, replace(state, f_prev=zero, fault=True)

    f_out = rate_limit(res.thrust, state.f_prev, gains.max_slew, dt)
    if state.mode == ControlMode.STATION_KEEP:
        tau_realized = Wrench.from_array(B @ res.thrust)
        state = anti_windup(state, tau_unsat, tau_realized, gains, dt)
    return f_out, replace(state, f_prev=f_out)
