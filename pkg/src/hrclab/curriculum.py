"""The six staged training cases, the training loop, and outcome metrics.

Case layout (robot channel / partner channel, stage reward sets):

  learn task first   1: robot slider alone, then slider+ball with partner
                     2: robot pendulum+ball alone, then same with partner
  learn human first  3: robot slider with partner, then both add ball
                     4: mirror of 3 with channels swapped
  learn together     5: robot slider+ball with partner, single stage
                     6: mirror of 5 with channels swapped

The partner always owns the other low-level channel; in every stage where
it is present it also pursues the ball task once the robot does (and from
the start in cases 5 and 6).

A stage converges when the moving mean of recent episode rewards reaches a
fraction of the stage's maximum attainable reward; exhausting the patience
cap is a recorded outcome (converged=False), not an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .config import ConvergenceCriterion, ExperimentConfig
from .dqn import ActionSet, AgentConfig, DQNAgent, Transition
from .errors import ConfigError
from .physics import (PENDULUM_CHANNEL, SLIDER_CHANNEL, ControlInput, EnvState,
                      InitRanges, Observation, PhysicsParams, observe, reset, step)
from .partners import (PartnerSpec, SurrogatePartner, absent_partner, human_reward,
                       make_surrogate)
from .rewards import (BALL_TASK, PENDULUM_TASK, SLIDER_TASK, DecompositionTree,
                      RoleAssignment, TaskId, build_slider_pendulum_tree,
                      max_total_reward, total_reward)

CASE_IDS = (1, 2, 3, 4, 5, 6)

CATEGORY_CASES = {
    "learn_task_first": (1, 2),
    "learn_human_first": (3, 4),
    "learn_together": (5, 6),
}


@dataclass(frozen=True)
class StageConfig:
    robot_active_tasks: frozenset[TaskId]
    partner_present: bool
    partner_active_tasks: frozenset[TaskId]
    convergence: ConvergenceCriterion
    max_episodes: int
    epsilon_start: float | None = None   # None: agent config default

    def __post_init__(self) -> None:
        if not self.partner_present and self.partner_active_tasks:
            raise ConfigError("absent partner cannot have active tasks")
        if self.max_episodes < 1:
            raise ConfigError(f"max_episodes must be >= 1, got {self.max_episodes}")


@dataclass(frozen=True)
class TrainingCase:
    case_id: int
    robot_channel: str
    partner_channel: str
    stages: tuple[StageConfig, ...]

    def __post_init__(self) -> None:
        if self.robot_channel == self.partner_channel:
            raise ConfigError("robot and partner must control distinct channels")


def build_case(case_id: int, convergence: ConvergenceCriterion = ConvergenceCriterion(),
               stage2_epsilon_start: float | None = 0.3) -> TrainingCase:
    """Stage schedule for one of the six cases."""
    if case_id not in CASE_IDS:
        raise ConfigError(f"case id must be in {CASE_IDS}, got {case_id}")
    robot_on_slider = case_id in (1, 3, 5)
    robot_low = SLIDER_TASK if robot_on_slider else PENDULUM_TASK
    partner_low = PENDULUM_TASK if robot_on_slider else SLIDER_TASK
    robot_full = frozenset({robot_low, BALL_TASK})
    partner_full = frozenset({partner_low, BALL_TASK})

    def stage(robot_tasks, partner_present, partner_tasks, epsilon_start=None):
        return StageConfig(
            robot_active_tasks=frozenset(robot_tasks),
            partner_present=partner_present,
            partner_active_tasks=frozenset(partner_tasks) if partner_present else frozenset(),
            convergence=convergence,
            max_episodes=convergence.patience,
            epsilon_start=epsilon_start,
        )

    if case_id in (1, 2):
        # learn task first: robot alone on its responsibility, partner joins later
        first = {robot_low} if robot_on_slider else robot_full
        stages = (stage(first, False, ()),
                  stage(robot_full, True, partner_full, stage2_epsilon_start))
    elif case_id in (3, 4):
        # learn human first: low-level tasks together, then the ball on top
        stages = (stage({robot_low}, True, {partner_low}),
                  stage(robot_full, True, partner_full, stage2_epsilon_start))
    else:
        # learn together: the whole task at once
        stages = (stage(robot_full, True, partner_full),)

    return TrainingCase(
        case_id=case_id,
        robot_channel=SLIDER_CHANNEL if robot_on_slider else PENDULUM_CHANNEL,
        partner_channel=PENDULUM_CHANNEL if robot_on_slider else SLIDER_CHANNEL,
        stages=stages,
    )


def case_assignment(case: TrainingCase) -> RoleAssignment:
    """Role assignment covering every stage of the case: each member owns its
    low-level channel task, and both share the ball task."""
    robot_on_slider = case.robot_channel == SLIDER_CHANNEL
    robot_low = SLIDER_TASK if robot_on_slider else PENDULUM_TASK
    partner_low = PENDULUM_TASK if robot_on_slider else SLIDER_TASK
    return RoleAssignment(
        robot_tasks=frozenset({robot_low, BALL_TASK}),
        human_tasks=frozenset({partner_low, BALL_TASK}),
    )


def convergence_check(history, criterion: ConvergenceCriterion, max_reward: float) -> bool:
    """True when the trailing-window mean reward reaches the threshold."""
    if len(history) < criterion.window:
        return False
    tail = list(history)[-criterion.window:]
    return sum(tail) / criterion.window >= criterion.threshold * max_reward


@dataclass(frozen=True)
class EpisodeSetup:
    """Everything one episode needs besides the agent and the partner."""

    params: PhysicsParams
    init_ranges: InitRanges
    tree: DecompositionTree
    assignment: RoleAssignment
    robot_tasks: frozenset[TaskId]
    partner_tasks: frozenset[TaskId]
    robot_channel: str
    partner_channel: str
    steps: int


@dataclass
class EpisodeTrace:
    states: list[EnvState]            # initial state plus one per step
    robot_levels: list[float]         # normalized robot action taken each step
    partner_actions: list[float]      # normalized partner action each step
    rewards_r: list[float]
    rewards_h: list[float]

    @property
    def episode_reward(self) -> float:
        return sum(self.rewards_r)


class EpisodeAborted(Exception):
    """Raised by a step hook to invalidate the episode (e.g. operator loss)."""


def run_episode(setup: EpisodeSetup, agent: DQNAgent, partner, epsilon: float,
                reset_rng: np.random.Generator, train: bool = True,
                pre_step: Callable | None = None,
                post_step: Callable | None = None) -> EpisodeTrace:
    """Run one fixed-length episode; optionally train the agent per step.

    ``pre_step(step_idx, state, last_reward_r, last_reward_h)`` runs before
    the members act (the live session broadcasts and paces here);
    ``post_step(step_idx, trace)`` runs after each transition.
    """
    state = reset(setup.params, setup.init_ranges, reset_rng)
    trace = EpisodeTrace(states=[state], robot_levels=[], partner_actions=[],
                         rewards_r=[], rewards_h=[])
    partner_prev = 0.0
    reward_r = reward_h = 0.0
    levels = agent.action_set.levels
    robot_limit = setup.params.channel_limit(setup.robot_channel)
    partner_limit = setup.params.channel_limit(setup.partner_channel)

    for k in range(setup.steps):
        if pre_step is not None:
            pre_step(k, state, reward_r, reward_h)
        obs = observe(state, partner_prev)
        action_idx = agent.act(obs, epsilon)
        robot_level = levels[action_idx]
        partner_level = partner.act(state, setup.partner_tasks)

        controls = {setup.robot_channel: robot_level * robot_limit,
                    setup.partner_channel: partner_level * partner_limit}
        state = step(state, ControlInput(**controls), setup.params)

        next_obs = observe(state, partner_level)
        reward_r = total_reward(next_obs, setup.assignment, setup.robot_tasks,
                                setup.tree, member="robot")
        reward_h = (human_reward(next_obs, setup.assignment, setup.partner_tasks, setup.tree)
                    if setup.partner_tasks else 0.0)

        if train:
            agent.replay.push(Transition(obs, action_idx, reward_r, next_obs))
            if len(agent.replay) >= agent.config.batch_size:
                agent.train_batch(agent.replay.sample(agent.config.batch_size, agent.rng))

        trace.states.append(state)
        trace.robot_levels.append(robot_level)
        trace.partner_actions.append(partner_level)
        trace.rewards_r.append(reward_r)
        trace.rewards_h.append(reward_h)
        partner_prev = partner_level
        if post_step is not None:
            post_step(k, trace)
    return trace


@dataclass(frozen=True)
class StageResult:
    episodes: int
    episode_rewards: tuple[float, ...]
    converged: bool
    partner_present: bool
    max_attainable_reward: float


def stage_setup(case: TrainingCase, stage: StageConfig, config: ExperimentConfig,
                tree: DecompositionTree, assignment: RoleAssignment) -> EpisodeSetup:
    return EpisodeSetup(
        params=config.physics,
        init_ranges=config.init_ranges,
        tree=tree,
        assignment=assignment,
        robot_tasks=stage.robot_active_tasks,
        partner_tasks=stage.partner_active_tasks if stage.partner_present else frozenset(),
        robot_channel=case.robot_channel,
        partner_channel=case.partner_channel,
        steps=config.steps_per_episode,
    )


def run_stage(case: TrainingCase, stage: StageConfig, agent: DQNAgent, partner,
              config: ExperimentConfig, tree: DecompositionTree,
              assignment: RoleAssignment, reset_rng: np.random.Generator) -> StageResult:
    """Train until the stage converges or the patience cap is spent.

    The replay buffer is cleared on entry: transitions rewarded under a
    previous stage's reward function would poison the new targets.
    """
    agent.replay.clear()
    setup = stage_setup(case, stage, config, tree, assignment)
    max_reward = setup.steps * max_total_reward(assignment, stage.robot_active_tasks,
                                                tree, member="robot")
    rewards: list[float] = []
    converged = False
    for episode in range(stage.max_episodes):
        partner.start_episode()
        epsilon = config.agent.epsilon_at(episode, start=stage.epsilon_start)
        trace = run_episode(setup, agent, partner, epsilon, reset_rng, train=True)
        rewards.append(trace.episode_reward)
        if convergence_check(rewards, stage.convergence, max_reward):
            converged = True
            break
    return StageResult(episodes=len(rewards), episode_rewards=tuple(rewards),
                       converged=converged, partner_present=stage.partner_present,
                       max_attainable_reward=max_reward)


def make_partner(spec_or_profile, channel: str, rng, dt: float):
    """Normalize a profile name / SkillProfile / PartnerSpec into a runnable
    partner on the given channel."""
    if isinstance(spec_or_profile, PartnerSpec):
        spec = replace(spec_or_profile, assigned_channel=channel) \
            if spec_or_profile.kind != "absent" else spec_or_profile
    else:
        spec = make_surrogate(spec_or_profile, channel)
    return SurrogatePartner(spec, rng=rng, dt=dt)


@dataclass(frozen=True)
class CaseMetrics:
    """Training-process and performance record for one case."""

    case_id: int
    human_involved_episodes: float
    total_episodes: float
    involvement: float            # fraction of episodes with the partner present
    error_translation: float      # time-averaged |C_x| over greedy validation (m)
    error_rotation: float         # time-averaged |P_z| (rad)
    error_ball: float             # time-averaged |B_y| (m)
    error_total: float
    converged: bool
    wall_time: float              # seconds a real-time run of those episodes takes

    def __post_init__(self) -> None:
        if self.total_episodes > 0:
            expect = self.human_involved_episodes / self.total_episodes
            if abs(self.involvement - expect) > 1e-12:
                raise ConfigError("involvement must equal involved/total episodes")
        if abs(self.error_total - (self.error_translation + self.error_rotation
                                   + self.error_ball)) > 1e-12:
            raise ConfigError("error_total must be the sum of the three component errors")


def _metrics(case_id, involved, total, errors, converged, episode_seconds) -> CaseMetrics:
    et, er, eb = errors
    return CaseMetrics(
        case_id=case_id,
        human_involved_episodes=involved,
        total_episodes=total,
        involvement=(involved / total) if total else 0.0,
        error_translation=et, error_rotation=er, error_ball=eb,
        error_total=et + er + eb,
        converged=converged,
        wall_time=total * episode_seconds,
    )


def evaluate_policy(agent: DQNAgent, partner, setup: EpisodeSetup,
                    eval_rngs: list[np.random.Generator]) -> tuple[float, float, float]:
    """Greedy validation: time-averaged absolute deviations of slider, angle,
    and ball over fixed-length rollouts, averaged across the given seeds."""
    sums = np.zeros(3)
    count = 0
    for rng in eval_rngs:
        partner.start_episode()
        trace = run_episode(setup, agent, partner, epsilon=0.0, reset_rng=rng, train=False)
        for s in trace.states[1:]:
            sums += (abs(s.C_x), abs(s.P_z), abs(s.B_y))
            count += 1
    avg = sums / count
    return float(avg[0]), float(avg[1]), float(avg[2])


@dataclass
class SeedResult:
    seed: int
    metrics: CaseMetrics
    stage_results: tuple[StageResult, ...]
    validation_trace: EpisodeTrace


@dataclass
class CaseRunResult:
    case_id: int
    seed_results: list[SeedResult]
    aggregate: CaseMetrics


def run_case(case_id: int, seeds, partner_spec="ideal",
             config: ExperimentConfig = ExperimentConfig()) -> CaseRunResult:
    """Run every stage of a case for each seed, then validate greedily.

    The network carries across stages; replay does not.  Episodes count as
    human-involved when the stage has the partner present.  Failure to
    converge within patience is recorded, not raised.
    """
    case = build_case(case_id, config.convergence, config.stage2_epsilon_start)
    tree = build_slider_pendulum_tree(config.physics, config.angle_range)
    assignment = case_assignment(case)

    seed_results = []
    for seed in seeds:
        ss = np.random.SeedSequence([case_id, int(seed)])
        agent_ss, partner_ss, reset_ss, eval_ss = ss.spawn(4)
        agent = DQNAgent(
            ActionSet(channel=case.robot_channel, levels=config.action_levels),
            config.agent,
            rng=np.random.default_rng(agent_ss),
            obs_scale=observation_scale(config),
        )
        reset_rng = np.random.default_rng(reset_ss)
        partner_rng = np.random.default_rng(partner_ss)

        stage_results = []
        involved = 0
        for stage in case.stages:
            partner = (make_partner(partner_spec, case.partner_channel,
                                    partner_rng, config.physics.dt)
                       if stage.partner_present
                       else SurrogatePartner(absent_partner(), rng=None, dt=config.physics.dt))
            result = run_stage(case, stage, agent, partner, config, tree,
                               assignment, reset_rng)
            stage_results.append(result)
            if stage.partner_present:
                involved += result.episodes
        total = sum(r.episodes for r in stage_results)
        converged = all(r.converged for r in stage_results)

        final_setup = stage_setup(case, case.stages[-1], config, tree, assignment)
        eval_partner = make_partner(partner_spec, case.partner_channel,
                                    np.random.default_rng(eval_ss), config.physics.dt) \
            if case.stages[-1].partner_present \
            else SurrogatePartner(absent_partner(), rng=None, dt=config.physics.dt)
        eval_rngs = [np.random.default_rng(child)
                     for child in eval_ss.spawn(config.eval_episodes)]
        errors = evaluate_policy(agent, eval_partner, final_setup, eval_rngs)

        eval_partner.start_episode()
        validation_trace = run_episode(final_setup, agent, eval_partner, epsilon=0.0,
                                       reset_rng=np.random.default_rng(eval_ss),
                                       train=False)
        metrics = _metrics(case_id, involved, total, errors, converged,
                           config.episode_seconds)
        seed_results.append(SeedResult(seed=int(seed), metrics=metrics,
                                       stage_results=tuple(stage_results),
                                       validation_trace=validation_trace))

    agg = aggregate_metrics(case_id, [r.metrics for r in seed_results],
                            config.episode_seconds)
    return CaseRunResult(case_id=case_id, seed_results=seed_results, aggregate=agg)


def aggregate_metrics(case_id: int, per_seed: list[CaseMetrics],
                      episode_seconds: float) -> CaseMetrics:
    """Mean over seeds; involvement recomputed from the summed episode counts
    so the accounting invariant holds exactly."""
    n = len(per_seed)
    involved = sum(m.human_involved_episodes for m in per_seed) / n
    total = sum(m.total_episodes for m in per_seed) / n
    errors = tuple(sum(getattr(m, f) for m in per_seed) / n
                   for f in ("error_translation", "error_rotation", "error_ball"))
    return _metrics(case_id, involved, total, errors,
                    all(m.converged for m in per_seed), episode_seconds)


def observation_scale(config: ExperimentConfig) -> np.ndarray:
    """Per-component divisor normalizing observations to about [-1, 1]."""
    return np.array([config.physics.pendulum_half_length,
                     config.angle_range,
                     config.physics.slider_half_range,
                     1.0])


def three_factor_summary(metrics_by_case: dict[int, CaseMetrics]) -> dict:
    """Category-level strategy comparison over the three axes.

    Axes are min-max normalized and oriented so larger is better: higher
    team performance, fewer human-involved episodes, less total training
    time.  A degenerate (zero-range) axis maps every category to 0.5.
    """
    missing = [c for c in CASE_IDS if c not in metrics_by_case]
    if missing:
        raise ConfigError(f"three_factor_summary needs all six cases; missing {missing}")

    raw = {}
    for category, ids in CATEGORY_CASES.items():
        ms = [metrics_by_case[c] for c in ids]
        raw[category] = {
            "involvement": sum(m.human_involved_episodes for m in ms) / len(ms),
            "time": sum(m.wall_time for m in ms) / len(ms),
            "performance": sum(1.0 / (1.0 + m.error_total) for m in ms) / len(ms),
        }

    def normalize(values: dict[str, float], higher_is_better: bool) -> dict[str, float]:
        lo, hi = min(values.values()), max(values.values())
        if hi == lo:
            return {k: 0.5 for k in values}
        return {k: ((v - lo) if higher_is_better else (hi - v)) / (hi - lo)
                for k, v in values.items()}

    axes = {
        "involvement": normalize({c: r["involvement"] for c, r in raw.items()}, False),
        "time": normalize({c: r["time"] for c, r in raw.items()}, False),
        "performance": normalize({c: r["performance"] for c, r in raw.items()}, True),
    }
    return {
        category: {
            "raw": raw[category],
            "axes": {axis: axes[axis][category] for axis in axes},
        }
        for category in CATEGORY_CASES
    }
