"""Task decomposition trees and the hierarchical reward mechanism.

A task is decomposed into levels; node (i, j) is subtask j at level i.
Each node carries a cosine reward over one observable:

    reward(x) = alpha * cos(clamp(beta * x, -pi/2, pi/2)) + omega

The clamp keeps rewards in [omega, alpha + omega] and flat-zero-slope beyond
the feasible range, so large errors never earn a rebound.  Team members are
assigned task sets and per-task weights; a member's total reward is the
weighted sum of its active subtask rewards.

Shipped tree (two levels): leaf (1,1) centers the slider via the force
channel, leaf (1,2) levels the pendulum via the torque channel, and root
(2,1) centers the ball, contributed to by both leaves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .physics import PENDULUM_CHANNEL, SLIDER_CHANNEL, PhysicsParams

TaskId = tuple[int, int]

# Default feasible pendulum angle for reward normalization: past ~45 deg the
# ball saturates against an end stop almost immediately.
DEFAULT_ANGLE_RANGE = math.pi / 4

SLIDER_TASK: TaskId = (1, 1)
PENDULUM_TASK: TaskId = (1, 2)
BALL_TASK: TaskId = (2, 1)


@dataclass(frozen=True)
class RewardParams:
    """Gain, error scale, and offset of one subtask's cosine reward."""

    alpha: float = 1.0
    beta: float = math.pi
    omega: float = 0.0

    def __post_init__(self) -> None:
        if self.beta <= 0.0:
            raise ConfigError(f"RewardParams.beta must be > 0, got {self.beta}")
        if self.alpha < 0.0:
            raise ConfigError(f"RewardParams.alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True)
class TaskNode:
    """One subtask in the decomposition tree.

    ``observable`` names the Observation/EnvState field the reward reads.
    Leaves (no children) must map to exactly one action channel; higher
    nodes are reached only through their children's channels.
    """

    level: int
    index: int
    observable: str
    reward: RewardParams = RewardParams()
    children: tuple[TaskId, ...] = ()
    action_channels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.level < 1 or self.index < 1:
            raise ConfigError(f"task indices must be positive, got ({self.level}, {self.index})")

    @property
    def task_id(self) -> TaskId:
        return (self.level, self.index)


@dataclass(frozen=True)
class DecompositionTree:
    nodes: dict[TaskId, TaskNode] = field(default_factory=dict)

    def node(self, task_id: TaskId) -> TaskNode:
        try:
            return self.nodes[tuple(task_id)]
        except KeyError:
            raise ConfigError(f"task {tuple(task_id)} not in decomposition tree") from None

    def leaves(self) -> list[TaskNode]:
        return [n for n in self.nodes.values() if not n.children]


@dataclass(frozen=True)
class RoleAssignment:
    """Which member owns which tasks, with per-task summation weights."""

    robot_tasks: frozenset[TaskId]
    human_tasks: frozenset[TaskId]
    delta_robot: dict[TaskId, float] = field(default_factory=dict)
    delta_human: dict[TaskId, float] = field(default_factory=dict)

    def tasks_for(self, member: str) -> frozenset[TaskId]:
        if member == "robot":
            return self.robot_tasks
        if member == "human":
            return self.human_tasks
        raise ConfigError(f"unknown team member {member!r}")

    def delta_for(self, member: str) -> dict[TaskId, float]:
        return self.delta_robot if member == "robot" else self.delta_human

    def validate_against(self, tree: DecompositionTree) -> list[str]:
        """Leaf tasks must belong to exactly one member; sharing is allowed
        only at higher levels."""
        problems = []
        for leaf in tree.leaves():
            tid = leaf.task_id
            owners = (tid in self.robot_tasks) + (tid in self.human_tasks)
            if owners != 1:
                problems.append(f"leaf task {tid} must belong to exactly one member, has {owners}")
        return problems


def subtask_reward(x: float, p: RewardParams) -> float:
    """Cosine reward of one subtask at observable value ``x``."""
    arg = p.beta * x
    if arg > math.pi / 2:
        arg = math.pi / 2
    elif arg < -math.pi / 2:
        arg = -math.pi / 2
    return p.alpha * math.cos(arg) + p.omega


def total_reward(obs, assignment: RoleAssignment, active_tasks, tree: DecompositionTree,
                 member: str = "robot") -> float:
    """Weighted sum of subtask rewards over ``active_tasks`` for one member.

    ``obs`` is anything with the observable fields as attributes
    (Observation or EnvState).  ``active_tasks`` must be a subset of the
    member's assigned tasks.
    """
    member_tasks = assignment.tasks_for(member)
    deltas = assignment.delta_for(member)
    acc = 0.0
    for tid in sorted(active_tasks):
        tid = tuple(tid)
        if tid not in member_tasks:
            raise ConfigError(f"task {tid} is active but not assigned to the {member}")
        node = tree.node(tid)
        try:
            x = getattr(obs, node.observable)
        except AttributeError:
            raise ConfigError(
                f"observable {node.observable!r} of task {tid} not present on {type(obs).__name__}") from None
        acc += deltas.get(tid, 1.0) * subtask_reward(x, node.reward)
    return acc


def max_total_reward(assignment: RoleAssignment, active_tasks, tree: DecompositionTree,
                     member: str = "robot") -> float:
    """Per-step reward ceiling: every active subtask at zero error."""
    deltas = assignment.delta_for(member)
    return sum(deltas.get(tuple(tid), 1.0)
               * (tree.node(tid).reward.alpha + tree.node(tid).reward.omega)
               for tid in active_tasks)


def build_slider_pendulum_tree(params: PhysicsParams,
                               angle_range: float = DEFAULT_ANGLE_RANGE) -> DecompositionTree:
    """The shipped two-level tree with range-normalized betas.

    beta is pi / (2 * range) per observable, so the reward falls from
    alpha + omega at zero error to omega at the edge of the feasible range.
    """
    if angle_range <= 0.0:
        raise ConfigError(f"angle_range must be > 0, got {angle_range}")
    slider = TaskNode(level=1, index=1, observable="C_x",
                      reward=RewardParams(beta=math.pi / (2 * params.slider_half_range)),
                      action_channels=(SLIDER_CHANNEL,))
    pendulum = TaskNode(level=1, index=2, observable="P_z",
                        reward=RewardParams(beta=math.pi / (2 * angle_range)),
                        action_channels=(PENDULUM_CHANNEL,))
    ball = TaskNode(level=2, index=1, observable="B_y",
                    reward=RewardParams(beta=math.pi / (2 * params.pendulum_half_length)),
                    children=(SLIDER_TASK, PENDULUM_TASK))
    return DecompositionTree(nodes={n.task_id: n for n in (slider, pendulum, ball)})


def validate_tree(tree: DecompositionTree) -> list[str]:
    """Check the decomposition rules; returns violations (empty == valid).

    1. every non-leaf has >= 1 child exactly one level below it;
    2. declared (level, index) ids are unique and match the node keys;
    3. every leaf maps to exactly one action channel, and non-leaves to none.
    """
    violations = []
    for key, node in tree.nodes.items():
        if tuple(key) != node.task_id:
            violations.append(f"node stored under {tuple(key)} declares id {node.task_id}")
        if node.children:
            for child_id in node.children:
                child_id = tuple(child_id)
                if child_id not in tree.nodes:
                    violations.append(f"node {node.task_id} references missing child {child_id}")
                elif tree.nodes[child_id].level != node.level - 1:
                    violations.append(
                        f"child {child_id} of node {node.task_id} is at level "
                        f"{tree.nodes[child_id].level}, expected {node.level - 1}")
            if node.action_channels:
                violations.append(
                    f"non-leaf {node.task_id} maps to action channels {node.action_channels}")
        else:
            if len(node.action_channels) != 1:
                violations.append(
                    f"leaf {node.task_id} must map to exactly one action channel, "
                    f"has {len(node.action_channels)}")
            for ch in node.action_channels:
                if ch not in (SLIDER_CHANNEL, PENDULUM_CHANNEL):
                    violations.append(f"leaf {node.task_id} maps to unknown channel {ch!r}")
    return violations


def tree_to_dict(tree: DecompositionTree) -> dict:
    """Serializable form of the tree (documented schema, see tree_from_dict)."""
    return {
        "nodes": [
            {
                "id": list(node.task_id),
                "observable": node.observable,
                "alpha": node.reward.alpha,
                "beta": node.reward.beta,
                "omega": node.reward.omega,
                "children": [list(c) for c in node.children],
                "action_channels": list(node.action_channels),
            }
            for _, node in sorted(tree.nodes.items())
        ]
    }


def tree_from_dict(doc: dict) -> DecompositionTree:
    """Rebuild a tree from its dict form.

    Schema: {"nodes": [{"id": [i, j], "observable": str, "alpha": float,
    "beta": float, "omega": float, "children": [[i, j], ...],
    "action_channels": [str, ...]}, ...]}
    """
    try:
        entries = doc["nodes"]
    except (TypeError, KeyError):
        raise ConfigError("tree document must be a mapping with a 'nodes' list") from None
    nodes = {}
    for entry in entries:
        try:
            level, index = entry["id"]
            node = TaskNode(
                level=int(level), index=int(index),
                observable=str(entry["observable"]),
                reward=RewardParams(alpha=float(entry.get("alpha", 1.0)),
                                    beta=float(entry["beta"]),
                                    omega=float(entry.get("omega", 0.0))),
                children=tuple((int(i), int(j)) for i, j in entry.get("children", [])),
                action_channels=tuple(str(c) for c in entry.get("action_channels", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad tree node entry {entry!r}: {exc}") from exc
        if node.task_id in nodes:
            raise ConfigError(f"duplicate task id {node.task_id} in tree document")
        nodes[node.task_id] = node
    return DecompositionTree(nodes=nodes)


def save_tree(tree: DecompositionTree, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_dict(tree), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_tree(path: str) -> DecompositionTree:
    with open(path, "r", encoding="utf-8") as fh:
        return tree_from_dict(json.load(fh))
