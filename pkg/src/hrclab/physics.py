"""Slider-pendulum-ball simulation.

A slider translates along a vertical rod, a pendulum (beam) is pinned to the
slider and rotates in the plane, and a ball rolls along the beam.  Two
actuators: a force on the slider and a torque on the pendulum.  The model is
deliberately asymmetric: torque drives the ball directly through the beam
tilt, while slider force only modulates the effective gravity felt by the
ball.

State fields follow the trajectory-CSV / wire-protocol schema:

    C_x   slider position along the rod (m), zero at rod center
    P_z   pendulum angle (rad), zero = horizontal; P_z > 0 tilts the
          +B_y end of the beam upward, so the ball rolls toward -B_y
    B_y   ball position along the beam (m), zero at beam center

Equations of motion (slider actuator is gravity-compensated, so zero force
holds position; ball is a rolling solid sphere, hence the 5/7 factor):

    C_x_ddot = (F - b_s * C_x_dot) / m_s
    P_z_ddot = (tau - b_p * P_z_dot - m_b * g * B_y * cos(P_z)) / I_p
    B_y_ddot = (5/7) * (B_y * P_z_dot**2 - (g + C_x_ddot) * sin(P_z))
               - b_b * B_y_dot

The rolling-resistance rate b_b matters beyond realism: the balance agents
observe positions only, and without any dissipation in the ball loop no
position-feedback policy can stabilize the ball (the closed-loop
characteristic polynomial loses its first-order coefficient).

Integration is semi-implicit Euler at the control rate (velocities first,
then positions with the new velocities).  Both the ball and the slider have
inelastic end stops: position clamped, velocity zeroed on contact, and the
beam rotation itself is limited by hard stops the same way (a physical rig
cannot wind up indefinitely, and bounded angles keep observations bounded).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Iterable, TextIO

import numpy as np

from .errors import ConfigError, SimulationFault

STATE_CSV_HEADER = "t,C_x,C_x_dot,P_z,P_z_dot,B_y,B_y_dot"

SLIDER_CHANNEL = "slider_force"
PENDULUM_CHANNEL = "pendulum_torque"
CHANNELS = (SLIDER_CHANNEL, PENDULUM_CHANNEL)


@dataclass(frozen=True)
class PhysicsParams:
    """Physical constants and actuator limits.  All SI units.

    Defaults are sized so that a competent controller holding the 0.2 s
    control rate with five discrete actuator levels can center the system
    well inside a 40 s episode.
    """

    slider_mass: float = 1.0            # kg
    pendulum_inertia: float = 0.4       # kg*m^2, about the pivot
    ball_mass: float = 0.05             # kg
    pendulum_half_length: float = 0.5   # m, ball end stop at +/- this
    slider_half_range: float = 0.5      # m, slider end stop at +/- this
    gravity: float = 9.81               # m/s^2
    slider_damping: float = 1.0         # N*s/m
    pendulum_damping: float = 0.3       # N*m*s/rad
    ball_rolling_damping: float = 0.5   # 1/s, rolling-resistance rate on the ball
    pendulum_angle_limit: float = math.pi / 3   # rad, rotation end stop
    force_limit: float = 3.0            # N
    torque_limit: float = 1.0           # N*m
    dt: float = 0.2                     # s, control/sampling period

    def __post_init__(self) -> None:
        for name in ("slider_mass", "pendulum_inertia", "ball_mass",
                     "pendulum_half_length", "slider_half_range", "gravity",
                     "pendulum_angle_limit", "dt"):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"PhysicsParams.{name} must be > 0, got {getattr(self, name)}")
        for name in ("slider_damping", "pendulum_damping", "ball_rolling_damping",
                     "force_limit", "torque_limit"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"PhysicsParams.{name} must be >= 0, got {getattr(self, name)}")

    def channel_limit(self, channel: str) -> float:
        if channel == SLIDER_CHANNEL:
            return self.force_limit
        if channel == PENDULUM_CHANNEL:
            return self.torque_limit
        raise ConfigError(f"unknown control channel {channel!r}")


@dataclass(frozen=True)
class EnvState:
    """Full physical state; the hidden state of the task POMDP."""

    C_x: float = 0.0
    C_x_dot: float = 0.0
    P_z: float = 0.0
    P_z_dot: float = 0.0
    B_y: float = 0.0
    B_y_dot: float = 0.0
    t: float = 0.0

    def is_finite(self) -> bool:
        return all(math.isfinite(getattr(self, f.name)) for f in fields(self))

    def csv_row(self) -> str:
        vals = (self.t, self.C_x, self.C_x_dot, self.P_z, self.P_z_dot, self.B_y, self.B_y_dot)
        return ",".join(repr(v) for v in vals)


@dataclass(frozen=True)
class Observation:
    """What the robot sees each step: ball, angle, slider, and the partner's
    previous normalized action (0 when no partner is present)."""

    B_y: float
    P_z: float
    C_x: float
    partner_prev_action: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.B_y, self.P_z, self.C_x, self.partner_prev_action], dtype=np.float64)


@dataclass(frozen=True)
class ControlInput:
    """Physical actuator commands (pre-clamp)."""

    slider_force: float = 0.0
    pendulum_torque: float = 0.0


# Interval per state field used by reset(); velocity fields default to the
# degenerate [0, 0] interval.
@dataclass(frozen=True)
class InitRanges:
    C_x: tuple[float, float] = (0.0, 0.0)
    C_x_dot: tuple[float, float] = (0.0, 0.0)
    P_z: tuple[float, float] = (0.0, 0.0)
    P_z_dot: tuple[float, float] = (0.0, 0.0)
    B_y: tuple[float, float] = (0.0, 0.0)
    B_y_dot: tuple[float, float] = (0.0, 0.0)


# Sampled in this fixed order so a given seed always yields the same state.
_RESET_FIELD_ORDER = ("C_x", "C_x_dot", "P_z", "P_z_dot", "B_y", "B_y_dot")


def reset(params: PhysicsParams, init_ranges: InitRanges = InitRanges(),
          rng: np.random.Generator | int | None = 0) -> EnvState:
    """Sample an initial state uniformly per field from ``init_ranges``.

    Raises ConfigError if a range exceeds the state invariant bounds
    (|B_y| <= pendulum_half_length, |C_x| <= slider_half_range).
    """
    gen = np.random.default_rng(rng)
    bounds = {"B_y": params.pendulum_half_length, "C_x": params.slider_half_range,
              "P_z": params.pendulum_angle_limit}
    values = {}
    for name in _RESET_FIELD_ORDER:
        lo, hi = getattr(init_ranges, name)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise ConfigError(f"init range for {name} is not a valid interval: [{lo}, {hi}]")
        if name in bounds and (abs(lo) > bounds[name] or abs(hi) > bounds[name]):
            raise ConfigError(
                f"init range for {name} [{lo}, {hi}] exceeds bound +/-{bounds[name]}")
        values[name] = lo if lo == hi else float(gen.uniform(lo, hi))
    return EnvState(t=0.0, **values)


def step(state: EnvState, u: ControlInput, params: PhysicsParams) -> EnvState:
    """Advance one semi-implicit Euler step of length ``params.dt``.

    Inputs are clamped to the actuator limits.  End stops are inelastic:
    the ball is held to +/- pendulum_half_length and the slider to
    +/- slider_half_range with the corresponding velocity zeroed.
    """
    if not state.is_finite():
        raise SimulationFault(f"non-finite state passed to step: {state}")
    if not (math.isfinite(u.slider_force) and math.isfinite(u.pendulum_torque)):
        raise SimulationFault(f"non-finite control input: {u}")
    force = min(max(u.slider_force, -params.force_limit), params.force_limit)
    torque = min(max(u.pendulum_torque, -params.torque_limit), params.torque_limit)

    g = params.gravity
    slider_acc = (force - params.slider_damping * state.C_x_dot) / params.slider_mass
    pend_acc = (torque - params.pendulum_damping * state.P_z_dot
                - params.ball_mass * g * state.B_y * math.cos(state.P_z)) / params.pendulum_inertia
    ball_acc = (5.0 / 7.0) * (state.B_y * state.P_z_dot ** 2
                              - (g + slider_acc) * math.sin(state.P_z)) \
        - params.ball_rolling_damping * state.B_y_dot

    dt = params.dt
    c_dot = state.C_x_dot + slider_acc * dt
    p_dot = state.P_z_dot + pend_acc * dt
    b_dot = state.B_y_dot + ball_acc * dt
    c = state.C_x + c_dot * dt
    p = state.P_z + p_dot * dt
    b = state.B_y + b_dot * dt

    half = params.pendulum_half_length
    if b > half:
        b, b_dot = half, 0.0
    elif b < -half:
        b, b_dot = -half, 0.0
    alim = params.pendulum_angle_limit
    if p > alim:
        p, p_dot = alim, 0.0
    elif p < -alim:
        p, p_dot = -alim, 0.0
    srange = params.slider_half_range
    if c > srange:
        c, c_dot = srange, 0.0
    elif c < -srange:
        c, c_dot = -srange, 0.0

    return EnvState(C_x=c, C_x_dot=c_dot, P_z=p, P_z_dot=p_dot,
                    B_y=b, B_y_dot=b_dot, t=state.t + dt)


def observe(state: EnvState, partner_prev_action: float = 0.0) -> Observation:
    """Project the state onto what the robot observes."""
    return Observation(B_y=state.B_y, P_z=state.P_z, C_x=state.C_x,
                       partner_prev_action=partner_prev_action)


def write_trajectory_csv(states: Iterable[EnvState], out: TextIO) -> None:
    """Write a trajectory with the documented header (see STATE_CSV_HEADER)."""
    out.write(STATE_CSV_HEADER + "\n")
    for s in states:
        out.write(s.csv_row() + "\n")


def load_physics_config(path: str) -> PhysicsParams:
    """Load PhysicsParams from a plain-text key-value file.

    Schema: one ``key = value`` pair per line, ``#`` starts a comment,
    blank lines ignored.  Keys are the PhysicsParams field names; missing
    keys keep their defaults; unknown keys are a ConfigError.
    """
    known = {f.name for f in fields(PhysicsParams)}
    overrides: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown physics parameter {key!r}")
            try:
                overrides[key] = float(val.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {val.strip()!r}") from exc
    return replace(PhysicsParams(), **overrides)
