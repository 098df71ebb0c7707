"""Configuration loading for the simulator, controller and services.

One INI file (comments allowed) drives everything; the [meta] section
carries a config_version so stale files fail loudly instead of being
misread.  Ports can be overridden by environment variables
(SCORPION_TELEM_PORT, SCORPION_CMD_PORT, SCORPION_WS_PORT) and by CLI
flags, in that order of increasing precedence.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .control import ControlMode, PidGains
from .vehicle import EnvironmentState, ThrusterLayout, VehicleParams, default_layout

CONFIG_VERSION = 1

ENV_TELEM_PORT = "SCORPION_TELEM_PORT"
ENV_CMD_PORT = "SCORPION_CMD_PORT"
ENV_WS_PORT = "SCORPION_WS_PORT"


class ConfigError(ValueError):
    """Malformed or incompatible config file."""


@dataclass(frozen=True)
class PortConfig:
    udp_telemetry: int = 14550
    tcp_command: int = 14551
    ws_bridge: int = 8080
    telemetry_host: str = "127.0.0.1"


@dataclass(frozen=True)
class HsvBand:
    """Hue interval in degrees (wraps at 360) with S/V floors."""

    hue_lo: float
    hue_hi: float
    sat_min: float = 0.4
    val_min: float = 0.25


DEFAULT_BANDS = {
    "red": HsvBand(hue_lo=345.0, hue_hi=15.0),
    "blue": HsvBand(hue_lo=200.0, hue_hi=260.0),
    "yellow": HsvBand(hue_lo=45.0, hue_hi=75.0),
}


@dataclass(frozen=True)
class ScorpionConfig:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    layout: ThrusterLayout = field(default_factory=default_layout)
    gains: PidGains = field(default_factory=PidGains)
    environment: EnvironmentState = field(default_factory=EnvironmentState)
    ports: PortConfig = field(default_factory=PortConfig)
    bands: dict[str, HsvBand] = field(default_factory=lambda: dict(DEFAULT_BANDS))
    default_mode: ControlMode = ControlMode.MANUAL_CONSTANT
    seed: int = 0


def _floats(raw: str, n: int, where: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in raw.replace(",", " ").split())
    except ValueError as e:
        raise ConfigError(f"{where}: expected numbers, got {raw!r}") from e
    if len(vals) != n:
        raise ConfigError(f"{where}: expected {n} values, got {len(vals)}")
    return vals


def load_config(path: str | Path) -> ScorpionConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e

    if not cp.has_option("meta", "config_version"):
        raise ConfigError(f"{path}: missing [meta] config_version")
    version = cp.getint("meta", "config_version")
    if version != CONFIG_VERSION:
        raise ConfigError(
            f"{path}: config_version {version} unsupported (expected {CONFIG_VERSION})"
        )

    veh_kw = {}
    if cp.has_section("vehicle"):
        v = cp["vehicle"]
        if "mass" in v:
            veh_kw["mass"] = float(v["mass"])
        if "inertia" in v:
            veh_kw["inertia"] = _floats(v["inertia"], 3, "vehicle.inertia")
        if "added_mass" in v:
            veh_kw["added_mass"] = _floats(v["added_mass"], 6, "vehicle.added_mass")
        if "drag" in v:
            veh_kw["drag"] = _floats(v["drag"], 6, "vehicle.drag")
        if "buoyancy_n" in v:
            veh_kw["buoyancy_n"] = float(v["buoyancy_n"])
        if "cob_offset" in v:
            veh_kw["cob_offset"] = _floats(v["cob_offset"], 3, "vehicle.cob_offset")
        if "v_max_linear" in v:
            veh_kw["v_max_linear"] = float(v["v_max_linear"])
        if "v_max_angular" in v:
            veh_kw["v_max_angular"] = float(v["v_max_angular"])
    try:
        vehicle = VehicleParams(**veh_kw)
    except ValueError as e:
        raise ConfigError(f"{path}: [vehicle] {e}") from e

    layout = default_layout()
    if cp.has_section("thrusters"):
        t = cp["thrusters"]
        n = layout.n_thrusters
        f_min, f_max = layout.f_min, layout.f_max
        if "f_min" in t:
            f_min = np.array(_floats(t["f_min"], n, "thrusters.f_min"))
        if "f_max" in t:
            f_max = np.array(_floats(t["f_max"], n, "thrusters.f_max"))
        layout = ThrusterLayout(
            positions=layout.positions,
            directions=layout.directions,
            f_min=f_min,
            f_max=f_max,
        )

    gain_kw = {}
    if cp.has_section("gains"):
        g = cp["gains"]
        for name in ("kp", "ki", "kd", "i_max", "rate_damping", "max_demand",
                     "ramp_rate", "ff_gain"):
            if name in g:
                gain_kw[name] = _floats(g[name], 6, f"gains.{name}")
        for name in ("kaw", "d_alpha", "max_slew"):
            if name in g:
                gain_kw[name] = float(g[name])
    try:
        gains = PidGains(**gain_kw)
    except ValueError as e:
        raise ConfigError(f"{path}: [gains] {e}") from e

    env_kw = {}
    if cp.has_section("environment"):
        e = cp["environment"]
        for name in ("water_density", "surface_pressure_pa", "water_temp_c",
                     "internal_temp_c", "internal_pressure_pa", "pressure_noise_pa",
                     "imu_noise_rad", "imu_noise_m"):
            if name in e:
                env_kw[name] = float(e[name])
    environment = EnvironmentState(**env_kw)

    port_kw = {}
    if cp.has_section("ports"):
        p = cp["ports"]
        for name in ("udp_telemetry", "tcp_command", "ws_bridge"):
            if name in p:
                port_kw[name] = int(p[name])
        if "telemetry_host" in p:
            port_kw["telemetry_host"] = p["telemetry_host"]
    ports = PortConfig(**port_kw)

    bands = dict(DEFAULT_BANDS)
    for section in cp.sections():
        if not section.startswith("band."):
            continue
        name = section.split(".", 1)[1]
        b = cp[section]
        try:
            bands[name] = HsvBand(
                hue_lo=float(b["hue_lo"]),
                hue_hi=float(b["hue_hi"]),
                sat_min=float(b.get("sat_min", "0.4")),
                val_min=float(b.get("val_min", "0.25")),
            )
        except KeyError as e:
            raise ConfigError(f"{path}: [{section}] missing {e}") from e

    default_mode = ControlMode.MANUAL_CONSTANT
    seed = 0
    if cp.has_section("control"):
        c = cp["control"]
        if "default_mode" in c:
            name = c["default_mode"].strip().upper().replace("-", "_")
            try:
                default_mode = ControlMode[name]
            except KeyError:
                raise ConfigError(
                    f"{path}: unknown default_mode {c['default_mode']!r}"
                ) from None
        if "seed" in c:
            seed = int(c["seed"])

    return ScorpionConfig(
        vehicle=vehicle,
        layout=layout,
        gains=gains,
        environment=environment,
        ports=ports,
        bands=bands,
        default_mode=default_mode,
        seed=seed,
    )


def resolve_ports(ports: PortConfig, telem=None, cmd=None, ws=None) -> PortConfig:
    """Apply environment and CLI overrides (CLI wins)."""

    def pick(cli, env_name, base):
        if cli is not None:
            return int(cli)
        env = os.environ.get(env_name)
        return int(env) if env else base

    return PortConfig(
        udp_telemetry=pick(telem, ENV_TELEM_PORT, ports.udp_telemetry),
        tcp_command=pick(cmd, ENV_CMD_PORT, ports.tcp_command),
        ws_bridge=pick(ws, ENV_WS_PORT, ports.ws_bridge),
        telemetry_host=ports.telemetry_host,
    )


def default_config_path() -> Path:
    return Path(__file__).resolve().parents[2] / "config" / "scorpion.cfg"
