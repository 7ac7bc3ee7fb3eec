"""Inverted pendulum on a cart: dynamics, transition samples and evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PendulumParams",
    "SampleSource",
    "pendulum_acceleration",
    "pendulum_step",
    "collect_samples",
    "evaluate_balancing",
    "preprocess_states",
    "write_samples",
    "read_samples",
]

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class PendulumParams:
    """Physical constants in SI units. Defaults follow the classic LSPI setup."""

    gravity: float = 9.8
    pendulum_mass: float = 2.0
    cart_mass: float = 8.0
    length: float = 0.5
    timestep: float = 0.1
    noise: float = 10.0
    forces: tuple = (-50.0, 0.0, 50.0)
    initial_band: float = 0.2

    def __post_init__(self):
        if self.timestep <= 0:
            raise ValueError("timestep must be positive")
        if self.pendulum_mass + self.cart_mass <= 0:
            raise ValueError("total mass must be positive")

    @property
    def alpha(self) -> float:
        return 1.0 / (self.pendulum_mass + self.cart_mass)

    @property
    def num_actions(self) -> int:
        return len(self.forces)


@dataclass(frozen=True, eq=False)
class SampleSource:
    """Ordered transition samples ``(s, a, s', r, terminal)``.

    States are 2-D rows ``(theta, theta_dot)`` for the pendulum, or integer
    state indices for finite MDPs.
    """

    states: np.ndarray
    actions: np.ndarray
    next_states: np.ndarray
    rewards: np.ndarray
    terminal: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.actions)
        if n == 0:
            raise ValueError("a sample source needs at least one sample")
        term = np.zeros(n, dtype=bool) if self.terminal is None else np.asarray(self.terminal, dtype=bool)
        object.__setattr__(self, "terminal", term)
        object.__setattr__(self, "actions", np.asarray(self.actions, dtype=int))
        object.__setattr__(self, "rewards", np.asarray(self.rewards, dtype=float))
        for name in ("states", "next_states", "rewards", "terminal"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} rows, expected {n}")

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, i):
        return self.states[i], self.actions[i], self.next_states[i], self.rewards[i], bool(self.terminal[i])


def pendulum_acceleration(params: PendulumParams, theta, theta_dot, force):
    """Angular acceleration; works on scalars or arrays."""
    m, l, alpha = params.pendulum_mass, params.length, params.alpha
    cos = np.cos(theta)
    num = params.gravity * np.sin(theta) - alpha * m * l * theta_dot**2 * np.sin(2 * theta) / 2 - alpha * cos * force
    den = 4 * l / 3 - alpha * m * l * cos**2
    return num / den


def pendulum_step(params: PendulumParams, state, force, noise_draw):
    """One Euler step. ``noise_draw`` is the caller's uniform action noise.

    Returns ``((theta, theta_dot), terminal)``; vectorised over leading axes
    when ``state`` has shape ``(..., 2)``.
    """
    noise_draw = np.asarray(noise_draw, dtype=float)
    if np.any(np.abs(noise_draw) > params.noise):
        raise ValueError(f"noise draw exceeds the +/-{params.noise} N band")
    state = np.asarray(state, dtype=float)
    theta, theta_dot = state[..., 0], state[..., 1]
    acc = pendulum_acceleration(params, theta, theta_dot, force + noise_draw)
    theta_dot = theta_dot + params.timestep * acc
    theta = theta + params.timestep * theta_dot
    nxt = np.stack([theta, theta_dot], axis=-1)
    terminal = np.abs(theta) > HALF_PI
    if nxt.ndim == 1:
        return nxt, bool(terminal)
    return nxt, terminal


def _initial_states(params: PendulumParams, rng, n):
    return rng.uniform(-params.initial_band, params.initial_band, size=(n, 2))


def collect_samples(params: PendulumParams, count: int, seed: int) -> SampleSource:
    """Transitions from random-action episodes started near the upright position.

    Reward is 1 for a surviving transition and 0 for the one that ends the
    episode.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    states = np.empty((count, 2))
    next_states = np.empty((count, 2))
    actions = np.empty(count, dtype=int)
    terminal = np.empty(count, dtype=bool)
    forces = np.asarray(params.forces)
    state = _initial_states(params, rng, 1)[0]
    for i in range(count):
        a = int(rng.integers(params.num_actions))
        nxt, done = pendulum_step(params, state, forces[a], rng.uniform(-params.noise, params.noise))
        states[i], actions[i], next_states[i], terminal[i] = state, a, nxt, done
        state = _initial_states(params, rng, 1)[0] if done else nxt
    rewards = np.where(terminal, 0.0, 1.0)
    return SampleSource(states, actions, next_states, rewards, terminal)


def evaluate_balancing(params: PendulumParams, policy, episodes: int, max_steps: int, seed: int) -> float:
    """Mean number of surviving steps over ``episodes`` noisy episodes.

    ``policy`` maps an ``(n, 2)`` batch of raw states to ``n`` action indices;
    all episodes run side by side.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    rng = np.random.default_rng(seed)
    forces = np.asarray(params.forces)
    state = _initial_states(params, rng, episodes)
    alive = np.ones(episodes, dtype=bool)
    survived = np.zeros(episodes, dtype=int)
    for _ in range(max_steps):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        acts = np.asarray(policy(state[idx]), dtype=int)
        noise = rng.uniform(-params.noise, params.noise, size=idx.size)
        nxt, done = pendulum_step(params, state[idx], forces[acts], noise)
        state[idx] = nxt
        survived[idx[~done]] += 1
        alive[idx[done]] = False
    return float(survived.mean())


def preprocess_states(states) -> np.ndarray:
    """Map raw ``(theta, theta_dot)`` rows into ``[0, 1]^2``.

    The angle is rescaled from ``[-pi/2, pi/2]``; the velocity is clipped to
    ``[-1, 1]`` first. Angles past the terminal boundary are clipped.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    theta = np.clip((states[:, 0] + HALF_PI) / math.pi, 0.0, 1.0)
    vel = (np.clip(states[:, 1], -1.0, 1.0) + 1.0) / 2.0
    return np.stack([theta, vel], axis=1)


def write_samples(source: SampleSource, path) -> None:
    """One line per sample: ``i,theta,theta_dot,action,theta',theta_dot',reward,terminal``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(len(source)):
            s, a, s2, r, done = source[i]
            fields = [str(i), *(f"{v:.17g}" for v in s), str(a), *(f"{v:.17g}" for v in s2), f"{r:.17g}", str(int(done))]
            fh.write(",".join(fields) + "\n")


def read_samples(path) -> SampleSource:
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return SampleSource(
        states=data[:, 1:3],
        actions=data[:, 3].astype(int),
        next_states=data[:, 4:6],
        rewards=data[:, 6],
        terminal=data[:, 7].astype(bool),
    )
