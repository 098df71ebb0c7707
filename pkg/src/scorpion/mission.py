"""Timed-action mission scripts: parse and run against a sim session.

A script is line-oriented text: optional `seed` / `duration` headers plus
`at <time> <verb> ...` actions in non-decreasing time order.  The full
grammar lives in docs/mission-format.md.  Running a script is just the
transport-free version of piloting: every action is converted into the
same command dataclasses the wire protocol carries, so a scripted run and
a live operator exercise identical code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .allocation import Wrench
from .config import ScorpionConfig
from .control import ControlMode
from .telemetry import (
    EmergencyStopCmd,
    JoystickCmd,
    ManipCmd,
    SetHoldSetpointCmd,
    SetModeCmd,
    SimSession,
    TelemetryFrame,
    TrimFeedforwardCmd,
)
from .vehicle import DT

MODE_NAMES = {m.name.lower(): m for m in ControlMode}

_VEC6_VERBS = ("hold", "joystick", "trim")


class MissionError(ValueError):
    """Script problem; message starts with `origin:line:`."""

    def __init__(self, origin: str, lineno: int, msg: str):
        super().__init__(f"{origin}:{lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class MissionAction:
    time_s: float
    verb: str
    args: tuple
    lineno: int = 0


@dataclass(frozen=True)
class MissionScript:
    """Ordered timed actions plus run length and RNG seed."""

    actions: tuple[MissionAction, ...]
    duration_s: float
    seed: int | None = None
    name: str = "mission"


def _number(tok: str, origin: str, lineno: int, what: str) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise MissionError(origin, lineno, f"bad {what} {tok!r}") from None
    if not math.isfinite(value):
        raise MissionError(origin, lineno, f"bad {what} {tok!r}")
    return value


def _vec6(toks: list[str], origin: str, lineno: int, verb: str) -> tuple:
    if len(toks) != 6:
        raise MissionError(origin, lineno,
                           f"{verb} expects 6 numbers, got {len(toks)}")
    return tuple(_number(t, origin, lineno, f"{verb} component") for t in toks)


def _parse_action(toks: list[str], origin: str, lineno: int) -> MissionAction:
    t = _number(toks[1], origin, lineno, "time")
    if t < 0:
        raise MissionError(origin, lineno, f"negative time {toks[1]}")
    if len(toks) < 3:
        raise MissionError(origin, lineno, "missing action verb")
    verb, rest = toks[2], toks[3:]

    if verb == "mode":
        if len(rest) != 1 or rest[0] not in MODE_NAMES:
            raise MissionError(
                origin, lineno,
                f"mode expects one of {sorted(MODE_NAMES)}, got {rest!r}")
        args: tuple = (rest[0],)
    elif verb in _VEC6_VERBS:
        args = _vec6(rest, origin, lineno, verb)
    elif verb == "manip":
        if len(rest) != 2:
            raise MissionError(origin, lineno,
                               f"manip expects 2 numbers, got {len(rest)}")
        args = tuple(_number(r, origin, lineno, "manip rate") for r in rest)
    elif verb == "estop":
        if rest:
            raise MissionError(origin, lineno, "estop takes no arguments")
        args = ()
    elif verb == "disturb":
        args = _parse_disturb(rest, origin, lineno)
    elif verb == "scene":
        if len(rest) != 1 or not rest[0].replace("_", "").isalnum():
            raise MissionError(origin, lineno, f"bad scene name {rest!r}")
        args = (rest[0],)
    else:
        raise MissionError(origin, lineno, f"unknown verb {verb!r}")
    return MissionAction(time_s=t, verb=verb, args=args, lineno=lineno)


def _parse_disturb(rest: list[str], origin: str, lineno: int) -> tuple:
    if rest == ["off"]:
        return ("off",)
    if rest and rest[0] == "step":
        return ("step", _vec6(rest[1:], origin, lineno, "disturb step"))
    if rest and rest[0] == "sine":
        if len(rest) != 9 or rest[7] != "freq":
            raise MissionError(
                origin, lineno,
                "disturb sine expects 6 amplitudes then `freq <hz>`")
        amps = _vec6(rest[1:7], origin, lineno, "disturb sine")
        freq = _number(rest[8], origin, lineno, "frequency")
        if freq <= 0:
            raise MissionError(origin, lineno, "frequency must be > 0")
        return ("sine", amps, freq)
    raise MissionError(origin, lineno,
                       "disturb expects `off`, `step ...` or `sine ...`")


def parse_mission(text: str, origin: str = "mission") -> MissionScript:
    seed: int | None = None
    duration: float | None = None
    actions: list[MissionAction] = []
    seen: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        key = toks[0]
        if key in ("seed", "duration"):
            if key in seen:
                raise MissionError(origin, lineno,
                                   f"duplicate {key} (first on line {seen[key]})")
            seen[key] = lineno
            if len(toks) != 2:
                raise MissionError(origin, lineno, f"{key} expects one value")
            if key == "seed":
                value = _number(toks[1], origin, lineno, "seed")
                if value != int(value):
                    raise MissionError(origin, lineno, "seed must be an integer")
                seed = int(value)
            else:
                duration = _number(toks[1], origin, lineno, "duration")
        elif key == "at":
            action = _parse_action(toks, origin, lineno)
            if actions and action.time_s < actions[-1].time_s:
                raise MissionError(
                    origin, lineno,
                    f"time {action.time_s:g} before previous "
                    f"{actions[-1].time_s:g} (line {actions[-1].lineno})")
            actions.append(action)
        else:
            raise MissionError(origin, lineno, f"unknown directive {key!r}")

    if duration is None:
        raise MissionError(origin, 0, "missing `duration` header")
    if duration <= 0:
        raise MissionError(origin, seen["duration"],
                           f"duration must be > 0, got {duration:g}")
    return MissionScript(actions=tuple(actions), duration_s=duration,
                         seed=seed, name=origin)


def load_mission(path: str | Path) -> MissionScript:
    path = Path(path)
    return parse_mission(path.read_text(), origin=path.name)


def builtin_mission(name: str) -> MissionScript:
    """Load one of the mission scripts shipped with the package."""
    ref = resources.files("scorpion").joinpath(f"missions/{name}.mission")
    try:
        text = ref.read_text()
    except FileNotFoundError:
        available = sorted(
            p.name.removesuffix(".mission")
            for p in resources.files("scorpion").joinpath("missions").iterdir()
        )
        raise ValueError(f"no builtin mission {name!r}; have {available}") from None
    return parse_mission(text, origin=f"{name}.mission")


def builtin_mission_names() -> list[str]:
    ref = resources.files("scorpion").joinpath("missions")
    return sorted(p.name.removesuffix(".mission") for p in ref.iterdir()
                  if p.name.endswith(".mission"))


# -- execution ----------------------------------------------------------------


class _Disturbance:
    """Active disturbance profile; one `disturb` line replaces the whole."""

    def __init__(self):
        self.step = np.zeros(6)
        self.sine = np.zeros(6)
        self.freq = 0.0

    def set(self, args: tuple) -> None:
        kind = args[0]
        self.step = np.zeros(6)
        self.sine = np.zeros(6)
        self.freq = 0.0
        if kind == "step":
            self.step = np.asarray(args[1], dtype=float)
        elif kind == "sine":
            self.sine = np.asarray(args[1], dtype=float)
            self.freq = args[2]

    def active(self) -> bool:
        return bool(self.step.any() or self.sine.any())

    def wrench(self, t: float) -> Wrench:
        w = self.step + self.sine * math.sin(2.0 * math.pi * self.freq * t)
        return Wrench(*w)


def _submit(session: SimSession, action: MissionAction) -> None:
    verb, args = action.verb, action.args
    if verb == "mode":
        session.submit(SetModeCmd(mode=int(MODE_NAMES[args[0]])))
    elif verb == "hold":
        session.submit(SetHoldSetpointCmd(pose=args))
    elif verb == "joystick":
        session.submit(JoystickCmd(axes=args))
    elif verb == "manip":
        session.submit(ManipCmd(yaw_rate=args[0], jaw_rate=args[1]))
    elif verb == "trim":
        session.submit(TrimFeedforwardCmd(wrench=args))
    elif verb == "estop":
        session.submit(EmergencyStopCmd())


def run_mission(
    script: MissionScript,
    config: ScorpionConfig | None = None,
    on_frame=None,
    on_scene=None,
) -> list[TelemetryFrame]:
    """Execute a script tick by tick; returns every telemetry frame.

    `on_frame(frame)` is called after each tick (live publishing hook);
    `on_scene(name)` whenever a scene action fires.  Runs as fast as the
    host allows — pacing is the caller's concern.
    """
    cfg = config or ScorpionConfig()
    session = SimSession(config=cfg, seed=script.seed)
    disturbance = _Disturbance()
    base_env = session.env

    ticks = int(round(script.duration_s / DT))
    frames: list[TelemetryFrame] = []
    pending = list(script.actions)

    for tick in range(ticks):
        t = tick * DT
        while pending and pending[0].time_s <= t + 1e-9:
            action = pending.pop(0)
            if action.verb == "disturb":
                disturbance.set(action.args)
                session.env = (
                    replace(base_env, current=disturbance.wrench(t))
                    if disturbance.active() else base_env
                )
            elif action.verb == "scene":
                if on_scene is not None:
                    on_scene(action.args[0])
            else:
                _submit(session, action)
        if disturbance.freq:
            session.env = replace(base_env, current=disturbance.wrench(t))
        frame = session.tick()
        frames.append(frame)
        if on_frame is not None:
            on_frame(frame)
    return frames
