"""Experiment-wide configuration and its JSON override file.

Every default in the training pipeline can be overridden from a single JSON
document; see ``ExperimentConfig.from_file`` for the schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace

from .dqn import AgentConfig
from .errors import ConfigError
from .physics import InitRanges, PhysicsParams
from .rewards import DEFAULT_ANGLE_RANGE


@dataclass(frozen=True)
class ConvergenceCriterion:
    """A stage converges when the moving mean of the last ``window`` episode
    rewards reaches ``threshold`` times the stage's maximum attainable
    reward; ``patience`` caps the episodes spent trying."""

    window: int = 3
    threshold: float = 0.9
    patience: int = 60

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")


@dataclass(frozen=True)
class ExperimentConfig:
    physics: PhysicsParams = PhysicsParams()
    init_ranges: InitRanges = InitRanges(
        C_x=(-0.2, 0.2), P_z=(-0.1, 0.1), B_y=(-0.2, 0.2))
    agent: AgentConfig = AgentConfig()
    convergence: ConvergenceCriterion = ConvergenceCriterion()
    angle_range: float = DEFAULT_ANGLE_RANGE   # rad, pendulum reward range
    episode_seconds: float = 40.0
    stage2_epsilon_start: float = 0.3          # exploration restart after a reward update
    action_levels: tuple[float, ...] = (-1.0, -0.5, 0.0, 0.5, 1.0)
    eval_episodes: int = 3                     # greedy validation rollouts per seed

    def __post_init__(self) -> None:
        if self.episode_seconds < self.physics.dt:
            raise ConfigError("episode_seconds must cover at least one control step")
        if self.eval_episodes < 1:
            raise ConfigError(f"eval_episodes must be >= 1, got {self.eval_episodes}")
        if self.angle_range <= 0.0:
            raise ConfigError(f"angle_range must be > 0, got {self.angle_range}")

    @property
    def steps_per_episode(self) -> int:
        return int(round(self.episode_seconds / self.physics.dt))

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        """Load overrides from JSON.

        Schema (all keys optional): top-level scalars ``angle_range``,
        ``episode_seconds``, ``stage2_epsilon_start``, ``action_levels``,
        ``eval_episodes``; sections ``physics``, ``agent``, ``convergence``,
        ``init_ranges`` holding field-name/value pairs of the corresponding
        dataclass (init_ranges values are two-element [lo, hi] lists).
        """
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config document must be a JSON object")
        return cls.from_dict(doc, where=path)

    @classmethod
    def from_dict(cls, doc: dict, where: str = "<config>") -> "ExperimentConfig":
        cfg = cls()
        known_sections = {
            "physics": (PhysicsParams, cfg.physics),
            "agent": (AgentConfig, cfg.agent),
            "convergence": (ConvergenceCriterion, cfg.convergence),
            "init_ranges": (InitRanges, cfg.init_ranges),
        }
        scalars = {"angle_range", "episode_seconds", "stage2_epsilon_start",
                   "action_levels", "eval_episodes"}
        updates: dict = {}
        for key, value in doc.items():
            if key in known_sections:
                klass, current = known_sections[key]
                if not isinstance(value, dict):
                    raise ConfigError(f"{where}: section {key!r} must be an object")
                names = {f.name for f in fields(klass)}
                for sub in value:
                    if sub not in names:
                        raise ConfigError(f"{where}: unknown key {key}.{sub}")
                coerced = {
                    sub: _coerce_field(klass, sub, v, where=f"{where}: {key}.{sub}")
                    for sub, v in value.items()
                }
                updates[key] = replace(current, **coerced)
            elif key in scalars:
                updates[key] = tuple(value) if key == "action_levels" else value
            else:
                raise ConfigError(f"{where}: unknown config key {key!r}")
        try:
            return replace(cfg, **updates)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc


def _coerce_field(klass, name: str, value, where: str):
    if klass is InitRanges:
        try:
            lo, hi = value
            return (float(lo), float(hi))
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected [lo, hi]") from None
    if klass is AgentConfig and name == "hidden_sizes":
        return tuple(int(v) for v in value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    for f in fields(klass):
        if f.name == name:
            return int(value) if f.type in ("int",) else float(value)
    raise ConfigError(f"{where}: unknown field {name}")


DEFAULT_CONFIG = ExperimentConfig()
