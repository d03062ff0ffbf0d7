"""Partner abstraction: nobody, a scripted surrogate, or a live human.

The surrogate stands in for a human operator.  It perceives a noisy, delayed
copy of the true state (rates are estimated by differencing successive
perceived positions, so perception noise also corrupts the rate estimate,
which reproduces the overcorrecting behavior of an unsure operator), runs a
proportional-derivative law on its assigned observable, optionally blends in
a ball-correction term when the shared high-level task is active, and
applies per-episode gain drift plus low-pass action smoothing.

Skill profiles encode that human perception of translation is better than
rotation: a profile's noise is per observable, so the same profile is
competent on the slider channel and sloppy on the pendulum channel.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .physics import PENDULUM_CHANNEL, SLIDER_CHANNEL, EnvState
from .rewards import BALL_TASK, DecompositionTree, RoleAssignment, total_reward

ABSENT = "absent"
SURROGATE = "surrogate"
REMOTE = "remote"


@dataclass(frozen=True)
class PartnerSpec:
    """Partner kind plus the surrogate's imperfection and control knobs."""

    kind: str = ABSENT
    assigned_channel: str = PENDULUM_CHANNEL
    # per-observable perception noise std devs (m, rad, m)
    perception_noise: dict[str, float] = field(
        default_factory=lambda: {"C_x": 0.0, "P_z": 0.0, "B_y": 0.0})
    reaction_delay: int = 0          # whole control steps
    gain_drift_rate: float = 0.0     # per-episode relative drift of gains
    action_smoothing: float = 0.0    # low-pass coefficient in [0, 1]
    kp: float = 3.0                  # proportional gain on the assigned observable
    kd: float = 1.5                  # derivative gain
    kb: float = 1.0                  # ball-correction gain when the ball task is active
    kb_rate: float = 0.8             # ball-rate weight inside the correction term

    def __post_init__(self) -> None:
        if self.kind not in (ABSENT, SURROGATE, REMOTE):
            raise ConfigError(f"unknown partner kind {self.kind!r}")
        if self.assigned_channel not in (SLIDER_CHANNEL, PENDULUM_CHANNEL):
            raise ConfigError(f"unknown partner channel {self.assigned_channel!r}")
        if any(v < 0.0 for v in self.perception_noise.values()):
            raise ConfigError(f"perception noise must be >= 0, got {self.perception_noise}")
        if self.reaction_delay < 0:
            raise ConfigError(f"reaction delay must be >= 0, got {self.reaction_delay}")
        if not 0.0 <= self.action_smoothing <= 1.0:
            raise ConfigError(f"action smoothing must be in [0, 1], got {self.action_smoothing}")


@dataclass(frozen=True)
class SkillProfile:
    """Named preset of surrogate imperfections."""

    name: str
    perception_noise: dict[str, float]
    reaction_delay: int = 0
    gain_drift_rate: float = 0.0
    action_smoothing: float = 0.0
    kp: float = 3.0
    kd: float = 1.5
    kb: float = 1.0
    kb_rate: float = 0.8


SKILL_PROFILES: dict[str, SkillProfile] = {
    # no imperfections at all; upper bound on partner competence
    "ideal": SkillProfile(
        name="ideal",
        perception_noise={"C_x": 0.0, "P_z": 0.0, "B_y": 0.0},
    ),
    # crisp translation perception, mediocre rotation perception
    "skilled_translation": SkillProfile(
        name="skilled_translation",
        perception_noise={"C_x": 0.002, "P_z": 0.02, "B_y": 0.005},
        reaction_delay=1,
        gain_drift_rate=0.05,
        action_smoothing=0.2,
    ),
    # struggles to tell whether the beam is level; keeps readjusting
    "weak_rotation": SkillProfile(
        name="weak_rotation",
        perception_noise={"C_x": 0.003, "P_z": 0.05, "B_y": 0.01},
        reaction_delay=1,
        gain_drift_rate=0.1,
        action_smoothing=0.2,
    ),
}


def make_surrogate(profile: str | SkillProfile, channel: str) -> PartnerSpec:
    """Build a surrogate PartnerSpec from a named or explicit skill profile."""
    if isinstance(profile, str):
        try:
            profile = SKILL_PROFILES[profile]
        except KeyError:
            raise ConfigError(
                f"unknown skill profile {profile!r}; known: {sorted(SKILL_PROFILES)}") from None
    return PartnerSpec(
        kind=SURROGATE,
        assigned_channel=channel,
        perception_noise=dict(profile.perception_noise),
        reaction_delay=profile.reaction_delay,
        gain_drift_rate=profile.gain_drift_rate,
        action_smoothing=profile.action_smoothing,
        kp=profile.kp, kd=profile.kd, kb=profile.kb, kb_rate=profile.kb_rate,
    )


def absent_partner() -> PartnerSpec:
    return PartnerSpec(kind=ABSENT)


@dataclass(frozen=True)
class PerceivedState:
    """What the surrogate believes it sees: delayed, noisy positions and the
    rates it estimates from them."""

    C_x: float
    P_z: float
    B_y: float
    C_x_rate: float
    P_z_rate: float
    B_y_rate: float


def partner_action(spec: PartnerSpec, view: PerceivedState, active_tasks: Iterable,
                   drift_factor: float = 1.0, prev_action: float = 0.0) -> float:
    """Normalized action in [-1, 1] from one perceived state.

    PD on the assigned observable; when the ball task is active, an additive
    correction toward the perceived ball position (with a rate component,
    since an undamped pure-position correction just swaps the ball's drift
    for a standing oscillation).  The slider can influence the ball only
    through the beam tilt, so its correction is modulated by the sign of
    sin(P_z); the pendulum acts on the ball directly.
    """
    if spec.kind == ABSENT:
        return 0.0
    if spec.kind == REMOTE:
        raise ConfigError("remote partner actions arrive via the session server")
    ball_value = view.B_y + spec.kb_rate * view.B_y_rate
    if spec.assigned_channel == PENDULUM_CHANNEL:
        pos, rate = view.P_z, view.P_z_rate
        ball_term = spec.kb * ball_value
    else:
        pos, rate = view.C_x, view.C_x_rate
        ball_term = spec.kb * ball_value * float(np.sin(view.P_z))
    raw = -drift_factor * (spec.kp * pos + spec.kd * rate)
    if tuple(BALL_TASK) in {tuple(t) for t in active_tasks}:
        raw += drift_factor * ball_term
    s = spec.action_smoothing
    blended = (1.0 - s) * raw + s * prev_action
    return min(max(blended, -1.0), 1.0)


class SurrogatePartner:
    """Stateful wrapper that feeds partner_action: keeps the perception
    history for delay, the previous action for smoothing, and the
    per-episode drifted gain factor."""

    def __init__(self, spec: PartnerSpec, rng: np.random.Generator | int | None = 0,
                 dt: float = 0.2):
        if spec.kind == REMOTE:
            raise ConfigError("SurrogatePartner cannot wrap a remote spec")
        self.spec = spec
        self.rng = np.random.default_rng(rng)
        self.dt = dt
        self._history: deque[tuple[float, float, float]] = deque()
        self._prev_action = 0.0
        self._drift_factor = 1.0

    def start_episode(self) -> None:
        self._history.clear()
        self._prev_action = 0.0
        rate = self.spec.gain_drift_rate
        if self.spec.kind == SURROGATE and rate > 0.0:
            self._drift_factor = 1.0 + float(self.rng.uniform(-rate, rate))
        else:
            self._drift_factor = 1.0

    def _perceive(self, state: EnvState) -> PerceivedState:
        noise = self.spec.perception_noise
        noisy = (
            state.C_x + (self.rng.normal(0.0, noise["C_x"]) if noise.get("C_x", 0.0) > 0 else 0.0),
            state.P_z + (self.rng.normal(0.0, noise["P_z"]) if noise.get("P_z", 0.0) > 0 else 0.0),
            state.B_y + (self.rng.normal(0.0, noise["B_y"]) if noise.get("B_y", 0.0) > 0 else 0.0),
        )
        self._history.append(noisy)
        # reading used this step: reaction_delay steps in the past (oldest
        # reading held while the history is still filling)
        idx = max(0, len(self._history) - 1 - self.spec.reaction_delay)
        cur = self._history[idx]
        prev = self._history[idx - 1] if idx > 0 else None
        if prev is None:
            rates = (0.0, 0.0, 0.0)
        else:
            rates = tuple((c - p) / self.dt for c, p in zip(cur, prev))
        # history older than the delay window is never read again
        while len(self._history) > self.spec.reaction_delay + 2:
            self._history.popleft()
        return PerceivedState(C_x=cur[0], P_z=cur[1], B_y=cur[2],
                              C_x_rate=rates[0], P_z_rate=rates[1], B_y_rate=rates[2])

    def act(self, state: EnvState, active_tasks: Iterable) -> float:
        if self.spec.kind == ABSENT:
            return 0.0
        view = self._perceive(state)
        action = partner_action(self.spec, view, active_tasks,
                                drift_factor=self._drift_factor,
                                prev_action=self._prev_action)
        self._prev_action = action
        return action


class RecordedPartner:
    """Replays a fixed per-episode sequence of normalized actions; used to
    re-run live sessions offline."""

    def __init__(self, episodes: list[list[float]]):
        self._episodes = episodes
        self._episode = -1
        self._step = 0

    def start_episode(self) -> None:
        self._episode += 1
        self._step = 0

    def act(self, state: EnvState, active_tasks: Iterable) -> float:
        try:
            a = self._episodes[self._episode][self._step]
        except IndexError:
            raise ConfigError(
                f"recorded action stream exhausted at episode {self._episode}, "
                f"step {self._step}") from None
        self._step += 1
        return min(max(a, -1.0), 1.0)


def human_reward(obs, assignment: RoleAssignment, active_tasks,
                 tree: DecompositionTree) -> float:
    """The human-side reward; shown on displays and used to tune surrogates,
    never fed to a live human as a training signal."""
    return total_reward(obs, assignment, active_tasks, tree, member="human")
