"""Six-DoF rigid-body vehicle simulation.

World frame is NED-like with z positive down; body frame is
forward-right-down.  Attitude uses ZYX Euler angles (roll about x,
pitch about y, yaw about z).  Dynamics are a diagonal rigid-body +
added-mass model with quadratic drag and a buoyancy restoring wrench,
integrated with semi-implicit Euler at a fixed step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import GRAVITY
from .allocation import AXIS_NAMES, Wrench

WATER_DENSITY = 1000.0  # kg/m^3, fresh water
SURFACE_PRESSURE_PA = 101_325.0
DT = 0.02  # control/sim tick, 50 Hz

# T200 thruster limits: 7.1 kgf forward, 5.5 kgf reverse
T200_FORWARD_N = 7.1 * GRAVITY
T200_REVERSE_N = 5.5 * GRAVITY


class ConfigurationError(ValueError):
    """Thruster layout cannot produce the required wrench space."""


class SimulationFault(RuntimeError):
    """Non-finite state encountered; the run must halt."""


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % (2.0 * math.pi)


@dataclass(frozen=True)
class Pose:
    """Position (m, world frame, z down) and ZYX Euler attitude (rad)."""

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

    @staticmethod
    def from_array(a) -> "Pose":
        a = np.asarray(a, dtype=float).reshape(6)
        return Pose(*(float(v) for v in a))

    def normalized(self) -> "Pose":
        return replace(
            self,
            roll=wrap_angle(self.roll),
            pitch=wrap_angle(self.pitch),
            yaw=wrap_angle(self.yaw),
        )


@dataclass(frozen=True)
class Twist:
    """Body-frame linear velocity (m/s) and body rates (rad/s)."""

    u: float = 0.0
    v: float = 0.0
    w: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w, self.p, self.q, self.r], dtype=float)

    @staticmethod
    def from_array(a) -> "Twist":
        a = np.asarray(a, dtype=float).reshape(6)
        return Twist(*(float(v) for v in a))


@dataclass(frozen=True)
class ThrusterLayout:
    """Per-thruster mounting geometry and force limits.

    positions  (n, 3) body-frame mount points, m
    directions (n, 3) unit thrust directions (positive command)
    f_min      (n,) most negative allowed force, N (<= 0)
    f_max      (n,) most positive allowed force, N (>= 0)
    """

    positions: np.ndarray
    directions: np.ndarray
    f_min: np.ndarray
    f_max: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        lo = np.atleast_1d(np.asarray(self.f_min, dtype=float))
        hi = np.atleast_1d(np.asarray(self.f_max, dtype=float))
        n = pos.shape[0]
        if dirs.shape != (n, 3) or pos.shape != (n, 3) or lo.shape != (n,) or hi.shape != (n,):
            raise ConfigurationError("inconsistent layout array shapes")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ConfigurationError("thrust directions must be unit vectors")
        if np.any(lo > 0) or np.any(hi < 0):
            raise ConfigurationError("limits must satisfy f_min <= 0 <= f_max")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "f_min", lo)
        object.__setattr__(self, "f_max", hi)

    @property
    def n_thrusters(self) -> int:
        return self.positions.shape[0]


def default_layout() -> ThrusterLayout:
    """Eight-thruster vectored layout.

    Four horizontal thrusters at +/-45 deg yaw on a 0.4 m x 0.3 m
    footprint (full surge/sway/yaw authority) and four vertical
    thrusters at the corners (heave/roll/pitch).
    """
    c = math.sqrt(0.5)
    ax, ay = 0.20, 0.15
    positions = np.array(
        [
            [ax, -ay, 0.0],   # horizontal front-left
            [ax, ay, 0.0],    # horizontal front-right
            [-ax, -ay, 0.0],  # horizontal rear-left
            [-ax, ay, 0.0],   # horizontal rear-right
            [ax, -ay, 0.0],   # vertical front-left
            [ax, ay, 0.0],    # vertical front-right
            [-ax, -ay, 0.0],  # vertical rear-left
            [-ax, ay, 0.0],   # vertical rear-right
        ]
    )
    directions = np.array(
        [
            [c, c, 0.0],
            [c, -c, 0.0],
            [c, -c, 0.0],
            [c, c, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0],
        ]
    )
    n = positions.shape[0]
    return ThrusterLayout(
        positions=positions,
        directions=directions,
        f_min=np.full(n, -T200_REVERSE_N),
        f_max=np.full(n, T200_FORWARD_N),
    )


def build_allocation_matrix(
    layout: ThrusterLayout, require_full_rank: bool = True
) -> np.ndarray:
    """6 x n mixing matrix; column i is [d_i ; r_i x d_i].

    Raises ConfigurationError naming the wrench axes the layout cannot
    produce when the matrix is rank-deficient (pass
    require_full_rank=False for deliberately partial test rigs).
    """
    n = layout.n_thrusters
    B = np.zeros((6, n))
    B[:3, :] = layout.directions.T
    B[3:, :] = np.cross(layout.positions, layout.directions).T
    if require_full_rank and np.linalg.matrix_rank(B, tol=1e-9) < 6:
        # axes outside the column space cannot be actuated
        pinv = np.linalg.pinv(B)
        dead = [
            AXIS_NAMES[i]
            for i in range(6)
            if np.linalg.norm(B @ pinv[:, i] - np.eye(6)[:, i]) > 1e-6
        ]
        raise ConfigurationError(
            f"layout is rank-deficient; unactuated axes: {', '.join(dead)}"
        )
    return B


@dataclass(frozen=True)
class VehicleParams:
    """Rigid-body, hydrodynamic and buoyancy parameters.

    mass        vehicle dry mass, kg
    inertia     diagonal body inertia (Ix, Iy, Iz), kg m^2
    added_mass  diagonal added-mass terms per axis (kg, kg m^2)
    drag        quadratic drag coefficients per axis, N/(m/s)^2 etc.
    buoyancy_n  net buoyancy force (buoyancy minus weight), N, positive up
    cob_offset  center of buoyancy relative to CG, body frame, m
    """

    mass: float = 17.6
    inertia: tuple[float, float, float] = (0.48, 0.61, 0.86)
    added_mass: tuple[float, ...] = (8.8, 13.2, 17.6, 0.24, 0.30, 0.43)
    drag: tuple[float, ...] = (40.0, 60.0, 80.0, 4.0, 5.0, 6.0)
    buoyancy_n: float = 0.0
    cob_offset: tuple[float, float, float] = (0.0, 0.0, -0.02)
    v_max_linear: float = 2.0
    v_max_angular: float = 2.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if any(c < 0 for c in self.drag):
            raise ValueError("drag coefficients must be >= 0")

    def effective_mass(self) -> np.ndarray:
        """Diagonal of the mass + added-mass matrix, per axis."""
        rigid = np.array([self.mass, self.mass, self.mass, *self.inertia])
        return rigid + np.asarray(self.added_mass, dtype=float)


@dataclass(frozen=True)
class EnvironmentState:
    """Ambient conditions plus sensor noise levels."""

    water_density: float = WATER_DENSITY
    surface_pressure_pa: float = SURFACE_PRESSURE_PA
    water_temp_c: float = 15.0
    internal_temp_c: float = 35.0
    internal_pressure_pa: float = 101_325.0
    leak: bool = False
    current: Wrench = field(default_factory=Wrench)
    pressure_noise_pa: float = 50.0
    imu_noise_rad: float = 0.002
    imu_noise_m: float = 0.005


@dataclass(frozen=True)
class SensorReading:
    """One synchronous sample of the simulated sensor suite."""

    depth_m: float
    water_pressure_pa: float
    internal_pressure_pa: float
    internal_temp_c: float
    leak_flag: bool
    imu_pose: Pose


@dataclass(frozen=True)
class ManipulatorState:
    """Wrist yaw (continuous, unbounded) and jaw aperture in [0, 1]."""

    yaw_angle: float = 0.0
    jaw_aperture: float = 0.0


MANIP_MAX_YAW_RATE = 1.0  # rad/s
MANIP_MAX_JAW_RATE = 0.5  # aperture/s


def rotation_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Body-to-world rotation, ZYX convention."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def euler_rate_matrix(roll: float, pitch: float) -> np.ndarray:
    """Maps body rates (p, q, r) to Euler angle rates."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp = math.cos(pitch)
    if abs(cp) < 1e-6:  # gimbal guard; the vehicle never pitches this far
        cp = math.copysign(1e-6, cp if cp != 0 else 1.0)
    tp = math.sin(pitch) / cp
    return np.array(
        [
            [1.0, sr * tp, cr * tp],
            [0.0, cr, -sr],
            [0.0, sr / cp, cr / cp],
        ]
    )


def restoring_wrench(pose: Pose, params: VehicleParams) -> np.ndarray:
    """Body-frame wrench from net buoyancy and the CB/CG separation.

    Buoyancy of magnitude m*g + buoyancy_n acts upward at the center of
    buoyancy; weight m*g acts downward at the CG (body origin).  With
    z positive down, "up" is world (0, 0, -1).
    """
    R = rotation_matrix(pose.roll, pose.pitch, pose.yaw)
    f_buoy = R.T @ np.array([0.0, 0.0, -(params.mass * GRAVITY + params.buoyancy_n)])
    f_weight = R.T @ np.array([0.0, 0.0, params.mass * GRAVITY])
    torque = np.cross(np.asarray(params.cob_offset, dtype=float), f_buoy)
    return np.concatenate([f_buoy + f_weight, torque])


def step_dynamics(
    pose: Pose,
    twist: Twist,
    thrust: np.ndarray,
    disturbance: Wrench,
    params: VehicleParams,
    B: np.ndarray,
    dt: float = DT,
) -> tuple[Pose, Twist]:
    """Advance the rigid body one step with semi-implicit Euler.

    Velocity is updated from the applied wrench first, then the pose is
    integrated with the new velocity.  Raises SimulationFault if the
    state stops being finite.
    """
    if not 0.0 < dt <= 0.1:
        raise ValueError("dt must be in (0, 0.1]")
    nu = twist.as_array()
    eta = pose.as_array()
    if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(eta))):
        raise SimulationFault("non-finite vehicle state")

    f = np.asarray(thrust, dtype=float)
    tau = B @ f + disturbance.as_array()
    tau = tau - np.asarray(params.drag, dtype=float) * np.abs(nu) * nu
    tau = tau + restoring_wrench(pose, params)

    nu = nu + dt * tau / params.effective_mass()
    nu[:3] = np.clip(nu[:3], -params.v_max_linear, params.v_max_linear)
    nu[3:] = np.clip(nu[3:], -params.v_max_angular, params.v_max_angular)

    R = rotation_matrix(pose.roll, pose.pitch, pose.yaw)
    T = euler_rate_matrix(pose.roll, pose.pitch)
    eta[:3] = eta[:3] + dt * (R @ nu[:3])
    eta[3:] = eta[3:] + dt * (T @ nu[3:])

    if not np.all(np.isfinite(eta)):
        raise SimulationFault("non-finite pose after integration step")
    return Pose.from_array(eta).normalized(), Twist.from_array(nu)


def read_sensors(pose: Pose, env: EnvironmentState, rng_seed: int) -> SensorReading:
    """Simulated sensor sample; deterministic for a given seed."""
    rng = np.random.default_rng(rng_seed)
    depth = max(pose.z, 0.0)
    p_noise = rng.normal(0.0, env.pressure_noise_pa) if env.pressure_noise_pa > 0 else 0.0
    water_p = env.surface_pressure_pa + env.water_density * GRAVITY * depth + p_noise
    imu_noise = np.concatenate(
        [
            rng.normal(0.0, env.imu_noise_m, size=3) if env.imu_noise_m > 0 else np.zeros(3),
            rng.normal(0.0, env.imu_noise_rad, size=3) if env.imu_noise_rad > 0 else np.zeros(3),
        ]
    )
    imu = Pose.from_array(pose.as_array() + imu_noise).normalized()
    return SensorReading(
        depth_m=depth,
        water_pressure_pa=water_p,
        internal_pressure_pa=env.internal_pressure_pa,
        internal_temp_c=env.internal_temp_c,
        leak_flag=env.leak,
        imu_pose=imu,
    )


def step_manipulator(
    state: ManipulatorState, yaw_rate: float, jaw_rate: float, dt: float = DT
) -> ManipulatorState:
    """Integrate wrist/jaw commands; yaw is continuous, jaw clamps to [0, 1]."""
    yaw_rate = float(np.clip(yaw_rate, -MANIP_MAX_YAW_RATE, MANIP_MAX_YAW_RATE))
    jaw_rate = float(np.clip(jaw_rate, -MANIP_MAX_JAW_RATE, MANIP_MAX_JAW_RATE))
    return ManipulatorState(
        yaw_angle=state.yaw_angle + yaw_rate * dt,
        jaw_aperture=float(np.clip(state.jaw_aperture + jaw_rate * dt, 0.0, 1.0)),
    )
