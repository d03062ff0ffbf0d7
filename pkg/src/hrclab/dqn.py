"""Discrete-action deep Q-learning built on a from-scratch numpy MLP.

The value network maps a 4-component observation to one Q-value per discrete
action level.  Hidden layers use the rectifier, the output is linear, and
all arithmetic is 64-bit.  Training is plain stochastic gradient descent on
the mean-squared error between predicted Q-values and bootstrapped targets
computed with a periodically synced frozen copy of the network.

Episode truncation at the time limit is not a task failure, so targets
always bootstrap from the successor observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SimulationFault, WeightFormatError
from .physics import Observation

WEIGHT_FORMAT_VERSION = "hrclab-qnet v1"


@dataclass(frozen=True)
class ActionSet:
    """Ordered normalized action levels in [-1, 1] for one control channel."""

    channel: str
    levels: tuple[float, ...] = (-1.0, -0.5, 0.0, 0.5, 1.0)

    def __post_init__(self) -> None:
        if list(self.levels) != sorted(set(self.levels)):
            raise ValueError(f"action levels must be strictly increasing, got {self.levels}")
        if 0.0 not in self.levels:
            raise ValueError(f"action levels must contain 0, got {self.levels}")
        if any(abs(v) > 1.0 for v in self.levels):
            raise ValueError(f"action levels must lie in [-1, 1], got {self.levels}")

    def __len__(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class Transition:
    obs: Observation
    action_index: int
    reward: float
    next_obs: Observation


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.9
    learning_rate: float = 0.01
    epsilon_start: float = 0.9
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.95      # multiplicative, per episode
    batch_size: int = 32
    target_sync_period: int = 200    # steps
    replay_capacity: int = 10_000
    hidden_sizes: tuple[int, ...] = (64, 64)

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")

    def epsilon_at(self, episode: int, start: float | None = None) -> float:
        """Exploration rate for a 0-based episode index within a stage."""
        e0 = self.epsilon_start if start is None else start
        return max(self.epsilon_end, e0 * self.epsilon_decay ** episode)


class QNetwork:
    """Fully connected rectifier network, float64 weights."""

    def __init__(self, layer_sizes: list[int], rng: np.random.Generator | int | None = 0):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        gen = np.random.default_rng(rng)
        self.layer_sizes = list(layer_sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            scale = math.sqrt(2.0 / fan_in)
            self.weights.append(gen.normal(0.0, scale, size=(fan_out, fan_in)))
            self.biases.append(np.zeros(fan_out, dtype=np.float64))

    @property
    def n_actions(self) -> int:
        return self.layer_sizes[-1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values for a single observation vector."""
        if not np.all(np.isfinite(x)):
            raise SimulationFault(f"non-finite observation passed to forward: {x}")
        h = np.asarray(x, dtype=np.float64)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = w @ h + b
            if i != last:
                np.maximum(h, 0.0, out=h)
        return h

    def forward_batch(self, xs: np.ndarray) -> np.ndarray:
        """Q-values for a (batch, input) array; returns (batch, actions)."""
        if not np.all(np.isfinite(xs)):
            raise SimulationFault("non-finite observation batch passed to forward_batch")
        h = np.asarray(xs, dtype=np.float64)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if i != last:
                np.maximum(h, 0.0, out=h)
        return h

    def copy(self) -> "QNetwork":
        dup = QNetwork.__new__(QNetwork)
        dup.layer_sizes = list(self.layer_sizes)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup

    def copy_from(self, other: "QNetwork") -> None:
        if other.layer_sizes != self.layer_sizes:
            raise ValueError("cannot copy weights between differently shaped networks")
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform batch sampling
    (without replacement within a batch)."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._next] = transition
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError(f"cannot sample {batch_size} from buffer of {len(self._items)}")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]

    def clear(self) -> None:
        self._items.clear()
        self._next = 0


def td_target(reward: float, gamma: float, next_q: np.ndarray) -> float:
    """Bellman backup target: reward + gamma * max over next-state Q-values."""
    return reward + gamma * float(np.max(next_q))


def select_action(net: QNetwork, obs_vec: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy action index; greedy ties resolve to the lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(net.n_actions))
    return int(np.argmax(net.forward(obs_vec)))


class DQNAgent:
    """Online network, frozen target network, replay, and the SGD update."""

    def __init__(self, action_set: ActionSet, config: AgentConfig = AgentConfig(),
                 rng: np.random.Generator | int | None = 0,
                 obs_scale: np.ndarray | None = None):
        gen = np.random.default_rng(rng)
        self.action_set = action_set
        self.config = config
        # per-component divisor applied to observation vectors before the net
        self.obs_scale = (np.ones(4) if obs_scale is None
                          else np.asarray(obs_scale, dtype=np.float64))
        sizes = [4, *config.hidden_sizes, len(action_set)]
        self.net = QNetwork(sizes, gen)
        self.target_net = self.net.copy()
        self.replay = ReplayBuffer(config.replay_capacity)
        self.rng = gen
        self.steps_trained = 0

    def normalize(self, obs: Observation) -> np.ndarray:
        return obs.as_vector() / self.obs_scale

    def q_values(self, obs: Observation) -> np.ndarray:
        return self.net.forward(self.normalize(obs))

    def act(self, obs: Observation, epsilon: float) -> int:
        return select_action(self.net, self.normalize(obs), epsilon, self.rng)

    def sync_target(self) -> None:
        self.target_net.copy_from(self.net)

    def train_batch(self, batch: list[Transition]) -> float:
        """One SGD step on the batch; returns the pre-step MSE loss."""
        if not batch:
            raise ValueError("train_batch requires a non-empty batch")
        xs = np.stack([self.normalize(t.obs) for t in batch])
        next_xs = np.stack([self.normalize(t.next_obs) for t in batch])
        actions = np.array([t.action_index for t in batch])
        rewards = np.array([t.reward for t in batch], dtype=np.float64)

        next_q = self.target_net.forward_batch(next_xs)
        targets = rewards + self.config.gamma * next_q.max(axis=1)

        # forward with cached pre/post activations
        net = self.net
        acts = [xs]
        h = xs
        last = len(net.weights) - 1
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            h = h @ w.T + b
            if i != last:
                h = np.maximum(h, 0.0)
            acts.append(h)

        n = len(batch)
        q_sel = acts[-1][np.arange(n), actions]
        err = q_sel - targets
        loss = float(np.mean(err ** 2))

        # backprop: dL/dq on the selected outputs only
        delta = np.zeros_like(acts[-1])
        delta[np.arange(n), actions] = 2.0 * err / n
        grads_w = [np.empty(0)] * len(net.weights)
        grads_b = [np.empty(0)] * len(net.biases)
        for i in range(last, -1, -1):
            grads_w[i] = delta.T @ acts[i]
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ net.weights[i]) * (acts[i] > 0.0)

        for g in grads_w + grads_b:
            if not np.all(np.isfinite(g)):
                raise SimulationFault(
                    f"non-finite gradient during train_batch (loss={loss}, batch={n})")

        lr = self.config.learning_rate
        for i in range(len(net.weights)):
            net.weights[i] -= lr * grads_w[i]
            net.biases[i] -= lr * grads_b[i]

        self.steps_trained += 1
        if self.steps_trained % self.config.target_sync_period == 0:
            self.sync_target()
        return loss


def loss_and_gradients(net: QNetwork, xs: np.ndarray, actions: np.ndarray,
                       targets: np.ndarray) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and parameter gradients without applying an update.

    Same arithmetic as DQNAgent.train_batch; exposed for gradient audits.
    """
    acts = [np.asarray(xs, dtype=np.float64)]
    h = acts[0]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = h @ w.T + b
        if i != last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    n = xs.shape[0]
    err = acts[-1][np.arange(n), actions] - targets
    loss = float(np.mean(err ** 2))
    delta = np.zeros_like(acts[-1])
    delta[np.arange(n), actions] = 2.0 * err / n
    grads_w = [np.empty(0)] * len(net.weights)
    grads_b = [np.empty(0)] * len(net.biases)
    for i in range(last, -1, -1):
        grads_w[i] = delta.T @ acts[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * (acts[i] > 0.0)
    return loss, grads_w, grads_b


def save_weights(net: QNetwork, path: str) -> None:
    """Write the self-describing text weight file.

    Layout: version line; ``layers: <sizes>``; ``activation: relu``; then for
    each layer a ``W<i> rows=<r> cols=<c>`` header followed by r row-major
    lines, and a ``b<i> n=<r>`` header followed by one line.  Values are
    shortest round-trip decimal, exact at 64-bit.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(WEIGHT_FORMAT_VERSION + "\n")
        fh.write("layers: " + " ".join(str(s) for s in net.layer_sizes) + "\n")
        fh.write("activation: relu\n")
        for i, (w, b) in enumerate(zip(net.weights, net.biases), start=1):
            fh.write(f"W{i} rows={w.shape[0]} cols={w.shape[1]}\n")
            for row in w:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write(f"b{i} n={b.shape[0]}\n")
            fh.write(" ".join(repr(float(v)) for v in b) + "\n")


def load_weights(path: str) -> QNetwork:
    """Load a weight file written by save_weights; strict about structure."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    pos = 0

    def take(what: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise WeightFormatError(f"truncated weight file: expected {what}")
        line = lines[pos]
        pos += 1
        return line

    version = take("version line")
    if version != WEIGHT_FORMAT_VERSION:
        raise WeightFormatError(f"unsupported weight format version {version!r}")
    header = take("layers header")
    if not header.startswith("layers: "):
        raise WeightFormatError(f"expected 'layers:' header, got {header!r}")
    try:
        sizes = [int(s) for s in header[len("layers: "):].split()]
    except ValueError:
        raise WeightFormatError(f"bad layer sizes in header {header!r}") from None
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise WeightFormatError(f"bad layer sizes {sizes}")
    activation = take("activation line")
    if activation != "activation: relu":
        raise WeightFormatError(f"unsupported activation line {activation!r}")

    def parse_row(line: str, n: int, what: str) -> np.ndarray:
        parts = line.split()
        if len(parts) != n:
            raise WeightFormatError(f"{what}: expected {n} values, got {len(parts)}")
        try:
            return np.array([float(p) for p in parts], dtype=np.float64)
        except ValueError:
            raise WeightFormatError(f"{what}: non-numeric value") from None

    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        wh = take(f"W{i} header")
        if wh != f"W{i} rows={fan_out} cols={fan_in}":
            raise WeightFormatError(
                f"W{i} header mismatch: got {wh!r}, expected rows={fan_out} cols={fan_in}")
        w = np.stack([parse_row(take(f"W{i} row {r}"), fan_in, f"W{i} row {r}")
                      for r in range(fan_out)])
        bh = take(f"b{i} header")
        if bh != f"b{i} n={fan_out}":
            raise WeightFormatError(f"b{i} header mismatch: got {bh!r}, expected n={fan_out}")
        b = parse_row(take(f"b{i} values"), fan_out, f"b{i} values")
        weights.append(w)
        biases.append(b)
    if pos != len(lines):
        raise WeightFormatError(f"trailing data after layer {len(sizes) - 1} in weight file")

    net = QNetwork.__new__(QNetwork)
    net.layer_sizes = sizes
    net.weights = weights
    net.biases = biases
    return net
