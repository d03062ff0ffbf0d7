"""Independent reference implementations used only to check the package.

Everything here is written straight from the declared models, separately
from the package code paths it audits: a dense RK4 integrator for the
dynamics, a plain-loop MLP forward pass, central finite differences for
gradients, and exact value iteration for a tiny chain MDP.
"""

from __future__ import annotations

import math

import numpy as np


def dynamics_rhs(y, force, torque, p):
    """Time derivative of (C_x, C_x_dot, P_z, P_z_dot, B_y, B_y_dot) for the
    unconstrained slider-pendulum-ball model."""
    c, c_dot, z, z_dot, b, b_dot = y
    c_dd = (force - p.slider_damping * c_dot) / p.slider_mass
    z_dd = (torque - p.pendulum_damping * z_dot
            - p.ball_mass * p.gravity * b * math.cos(z)) / p.pendulum_inertia
    b_dd = (5.0 / 7.0) * (b * z_dot ** 2 - (p.gravity + c_dd) * math.sin(z)) \
        - p.ball_rolling_damping * b_dot
    return np.array([c_dot, c_dd, z_dot, z_dd, b_dot, b_dd])


def rk4_trajectory(y0, force, torque, p, horizon, dt_fine, sample_every):
    """Integrate with classic RK4 at dt_fine; return states sampled every
    ``sample_every`` fine steps (including t=0)."""
    y = np.asarray(y0, dtype=np.float64)
    n_steps = int(round(horizon / dt_fine))
    samples = [y.copy()]
    for i in range(1, n_steps + 1):
        k1 = dynamics_rhs(y, force, torque, p)
        k2 = dynamics_rhs(y + 0.5 * dt_fine * k1, force, torque, p)
        k3 = dynamics_rhs(y + 0.5 * dt_fine * k2, force, torque, p)
        k4 = dynamics_rhs(y + dt_fine * k3, force, torque, p)
        y = y + (dt_fine / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % sample_every == 0:
            samples.append(y.copy())
    return np.stack(samples)


def mlp_forward_reference(weights, biases, x):
    """Scalar-loop re-evaluation of the rectifier MLP forward pass."""
    h = [float(v) for v in x]
    n_layers = len(weights)
    for layer in range(n_layers):
        w, b = weights[layer], biases[layer]
        out = []
        for row in range(w.shape[0]):
            acc = float(b[row])
            for col in range(w.shape[1]):
                acc += float(w[row, col]) * h[col]
            if layer != n_layers - 1:
                acc = acc if acc > 0.0 else 0.0
            out.append(acc)
        h = out
    return np.array(h)


def finite_difference_gradients(loss_fn, net, h=1e-5):
    """Central-difference gradients of ``loss_fn(net)`` w.r.t. every
    parameter of the network, parameter by parameter."""
    grads_w, grads_b = [], []
    for w in net.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + h
            up = loss_fn(net)
            w[idx] = orig - h
            dn = loss_fn(net)
            w[idx] = orig
            g[idx] = (up - dn) / (2 * h)
        grads_w.append(g)
    for b in net.biases:
        g = np.zeros_like(b)
        for idx in np.ndindex(b.shape):
            orig = b[idx]
            b[idx] = orig + h
            up = loss_fn(net)
            b[idx] = orig - h
            dn = loss_fn(net)
            b[idx] = orig
            g[idx] = (up - dn) / (2 * h)
        grads_b.append(g)
    return grads_w, grads_b


class ChainMDP:
    """Deterministic 4-state, 2-action chain: action 1 moves right, action 0
    moves left (both clamped to the chain); reward 1.0 on arriving at the
    last state, else 0.  Continuing task."""

    n_states = 4
    n_actions = 2

    def step(self, state, action):
        nxt = min(self.n_states - 1, state + 1) if action == 1 else max(0, state - 1)
        reward = 1.0 if nxt == self.n_states - 1 else 0.0
        return nxt, reward

    def one_hot(self, state):
        v = np.zeros(self.n_states)
        v[state] = 1.0
        return v

    def q_star(self, gamma, tol=1e-13):
        """Exact action values by value iteration on the tabular model."""
        q = np.zeros((self.n_states, self.n_actions))
        while True:
            nxt = np.empty_like(q)
            for s in range(self.n_states):
                for a in range(self.n_actions):
                    s2, r = self.step(s, a)
                    nxt[s, a] = r + gamma * q[s2].max()
            if np.max(np.abs(nxt - q)) < tol:
                return nxt
            q = nxt

    def bellman_backup(self, q, gamma):
        """One application of the optimality backup to a tabular Q."""
        nxt = np.empty_like(q)
        for s in range(self.n_states):
            for a in range(self.n_actions):
                s2, r = self.step(s, a)
                nxt[s, a] = r + gamma * q[s2].max()
        return nxt
