"""Finite MDPs, exact policy evaluation and the classical solvers used as oracles.

State-action pairs are flattened as ``s * A + a`` everywhere in the package, so
a Q-function is a plain vector of length ``S * A`` and the policy transition
matrix is ``(S*A, S*A)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DimensionError",
    "Mdp",
    "Policy",
    "PolicyIterationResult",
    "build_policy_transition",
    "bellman_apply",
    "solve_exact_q",
    "value_iteration",
    "greedy_from_values",
    "classical_policy_iteration",
    "distance_metrics",
    "normalized",
]

_STOCHASTIC_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when a policy, Q-vector or feature matrix does not fit the MDP."""


@dataclass(frozen=True, eq=False)
class Mdp:
    """Finite discounted MDP.

    ``transitions[s, a, s']`` is the probability of landing in ``s'`` and
    ``rewards[s, a]`` the expected reward, which must lie in ``[0, 1]``.
    """

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float

    def __post_init__(self):
        P = np.array(self.transitions, dtype=float)
        R = np.array(self.rewards, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise DimensionError(f"transitions must have shape (S, A, S), got {P.shape}")
        if R.shape != P.shape[:2]:
            raise DimensionError(f"rewards must have shape {P.shape[:2]}, got {R.shape}")
        if np.any(P < 0):
            raise ValueError("transition probabilities must be non-negative")
        if np.max(np.abs(P.sum(axis=2) - 1.0)) > _STOCHASTIC_TOL:
            raise ValueError("every transition row must sum to 1")
        if np.any(R < 0) or np.any(R > 1):
            raise ValueError("rewards must lie in [0, 1]")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must lie in [0, 1), got {self.discount}")
        P.flags.writeable = False
        R.flags.writeable = False
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "rewards", R)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_pairs(self) -> int:
        return self.num_states * self.num_actions

    @property
    def horizon(self) -> float:
        """Effective horizon ``1 / (1 - gamma)``."""
        return 1.0 / (1.0 - self.discount)

    @property
    def reward_vector(self) -> np.ndarray:
        return self.rewards.reshape(-1)

    def transition_matrix(self) -> np.ndarray:
        """``P`` viewed as an ``(S*A, S)`` matrix."""
        return self.transitions.reshape(self.num_pairs, self.num_states)

    def with_discount(self, discount: float) -> "Mdp":
        return Mdp(self.transitions, self.rewards, discount)


@dataclass(frozen=True, eq=False)
class Policy:
    """Stochastic policy stored as an ``(S, A)`` row-stochastic matrix.

    Deterministic policies are the one-hot special case; build them with
    :meth:`deterministic`.
    """

    probs: np.ndarray

    def __post_init__(self):
        pi = np.array(self.probs, dtype=float)
        if pi.ndim != 2:
            raise DimensionError(f"policy matrix must be 2-D, got shape {pi.shape}")
        if np.any(pi < 0):
            raise ValueError("policy probabilities must be non-negative")
        if np.max(np.abs(pi.sum(axis=1) - 1.0)) > _STOCHASTIC_TOL:
            raise ValueError("every policy row must sum to 1")
        pi.flags.writeable = False
        object.__setattr__(self, "probs", pi)

    @classmethod
    def deterministic(cls, actions, num_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=int)
        if np.any(actions < 0) or np.any(actions >= num_actions):
            raise DimensionError("action index out of range")
        pi = np.zeros((actions.size, num_actions))
        pi[np.arange(actions.size), actions] = 1.0
        return cls(pi)

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> "Policy":
        return cls(np.full((num_states, num_actions), 1.0 / num_actions))

    @property
    def num_states(self) -> int:
        return self.probs.shape[0]

    @property
    def num_actions(self) -> int:
        return self.probs.shape[1]

    @property
    def is_deterministic(self) -> bool:
        return bool(np.all((self.probs == 0.0) | (self.probs == 1.0)))

    @property
    def actions(self) -> np.ndarray:
        """Chosen action per state; only meaningful for deterministic policies."""
        if not self.is_deterministic:
            raise ValueError("stochastic policy has no single action per state")
        return np.argmax(self.probs, axis=1)

    def same_as(self, other: "Policy") -> bool:
        return self.probs.shape == other.probs.shape and np.array_equal(self.probs, other.probs)

    def check_fits(self, mdp: Mdp) -> None:
        if self.probs.shape != (mdp.num_states, mdp.num_actions):
            raise DimensionError(
                f"policy shape {self.probs.shape} does not match MDP "
                f"({mdp.num_states}, {mdp.num_actions})"
            )


class PolicyIterationResult(NamedTuple):
    policy: Policy
    iterations: int
    converged: bool
    q_history: list


def normalized(v: np.ndarray) -> np.ndarray:
    """Unit vector along ``v``; the zero vector is returned unchanged."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v.copy()


def build_policy_transition(mdp: Mdp, policy: Policy) -> np.ndarray:
    """``P^pi[(s,a), (s',a')] = p(s, a, s') * pi(s', a')``."""
    policy.check_fits(mdp)
    S, A = mdp.num_states, mdp.num_actions
    Ppi = mdp.transitions[:, :, :, None] * policy.probs[None, None, :, :]
    return Ppi.reshape(S * A, S * A)


def _check_q(mdp: Mdp, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (mdp.num_pairs,):
        raise DimensionError(f"Q-vector must have length {mdp.num_pairs}, got shape {q.shape}")
    return q


def bellman_apply(mdp: Mdp, policy: Policy, q: np.ndarray) -> np.ndarray:
    q = _check_q(mdp, q)
    return mdp.reward_vector + mdp.discount * (build_policy_transition(mdp, policy) @ q)


def solve_exact_q(mdp: Mdp, policy: Policy) -> np.ndarray:
    """Dense direct solve of ``(I - gamma P^pi) Q = R``."""
    Ppi = build_policy_transition(mdp, policy)
    system = np.eye(mdp.num_pairs) - mdp.discount * Ppi
    return np.linalg.solve(system, mdp.reward_vector)


def greedy_from_values(values: np.ndarray, atol: float = 0.0) -> Policy:
    """Deterministic greedy policy from an ``(S, A)`` score table.

    Scores within ``atol`` of the row maximum count as ties, and ties go to
    the lowest action index.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise DimensionError(f"score table must be (S, A), got shape {values.shape}")
    best = values.max(axis=1, keepdims=True)
    actions = np.argmax(values >= best - atol, axis=1)
    return Policy.deterministic(actions, values.shape[1])


def value_iteration(mdp: Mdp, tol: float = 1e-10, max_iters: int = 1_000_000):
    """Optimal Q-function and a greedy optimal policy.

    Iterates the optimality operator until the sup-norm residual drops to
    ``tol``; returns ``(Q*, pi*)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    S, A = mdp.num_states, mdp.num_actions
    P = mdp.transition_matrix()
    R = mdp.reward_vector
    q = np.zeros(S * A)
    for _ in range(max_iters):
        v = q.reshape(S, A).max(axis=1)
        q_next = R + mdp.discount * (P @ v)
        residual = np.max(np.abs(q_next - q))
        q = q_next
        if residual <= tol:
            break
    else:
        raise RuntimeError("value iteration did not reach the requested tolerance")
    # one extra application contracts the error by gamma
    q = R + mdp.discount * (P @ q.reshape(S, A).max(axis=1))
    return q, greedy_from_values(q.reshape(S, A), atol=tol)


def classical_policy_iteration(
    mdp: Mdp,
    max_iters: int = 1000,
    initial: Policy | None = None,
    atol: float = 1e-10,
) -> PolicyIterationResult:
    """Exact policy iteration with dense evaluation.

    ``iterations`` counts evaluations; the loop stops as soon as the greedy
    policy equals the one just evaluated.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    S, A = mdp.num_states, mdp.num_actions
    policy = initial if initial is not None else Policy.deterministic(np.zeros(S, dtype=int), A)
    policy.check_fits(mdp)
    history = []
    for it in range(1, max_iters + 1):
        q = solve_exact_q(mdp, policy)
        history.append(q)
        improved = _greedy_keeping_current(q.reshape(S, A), policy, atol)
        if improved.same_as(policy):
            return PolicyIterationResult(policy, it, True, history)
        policy = improved
    return PolicyIterationResult(policy, max_iters, False, history)


def _greedy_keeping_current(values: np.ndarray, current: Policy, atol: float) -> Policy:
    # A deterministic current action that is still (near-)optimal is kept, so
    # equal-valued alternatives cannot make the loop cycle.
    greedy = greedy_from_values(values, atol=atol)
    if not current.is_deterministic:
        return greedy
    cur = current.actions
    rows = np.arange(values.shape[0])
    keep = values[rows, cur] >= values.max(axis=1) - atol
    return Policy.deterministic(np.where(keep, cur, greedy.actions), values.shape[1])


def distance_metrics(q1: np.ndarray, q2: np.ndarray):
    """Sup-norm, l2-norm and uniform-weighted l2 (rho) norm of ``q1 - q2``."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if q1.shape != q2.shape:
        raise DimensionError(f"length mismatch: {q1.shape} vs {q2.shape}")
    diff = q1 - q2
    l2 = float(np.linalg.norm(diff))
    return float(np.max(np.abs(diff), initial=0.0)), l2, l2 / np.sqrt(diff.size)
