"""Quantum policy iteration on a finite MDP, simulated through its error models.

Each iteration prepares noisy copies of the normalised value-function state
``|Q^pi>``, measures them ``shots`` times and picks, per state, the action
observed most often.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .mdp import Mdp, Policy, build_policy_transition, distance_metrics, normalized, solve_exact_q, value_iteration
from .quantum import StatePreparation, sample_rounds, shots_for, solver_state

__all__ = [
    "QpiConfig",
    "QpiRecord",
    "QpiTrace",
    "Theorem6Check",
    "qpi_evaluate",
    "qpi_improve",
    "run_qpi",
    "check_theorem6",
    "policy_hash",
]


@dataclass(frozen=True)
class QpiConfig:
    """Run settings.

    ``shots="auto"`` uses :func:`shots_for` on ``S*A``. ``rounds`` is the number
    of fresh solver states the shots are spread over (``"all"`` means one per
    shot). ``initial`` is ``"uniform"`` (the uniformly random stochastic
    policy) or ``"random"`` (a seeded random deterministic policy).
    """

    epsilon: float = 1e-2
    shots: int | str = "auto"
    max_iterations: int = 5
    seed: int = 0
    rounds: int | str = 1000
    early_stop: bool = True
    initial: str = "uniform"
    optimal_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.initial not in ("uniform", "random"):
            raise ValueError(f"unknown initial policy {self.initial!r}")

    def resolved_shots(self, n: int) -> int:
        return shots_for(n, self.epsilon) if self.shots == "auto" else int(self.shots)

    def resolved_rounds(self, shots: int) -> int:
        return shots if self.rounds == "all" else min(int(self.rounds), shots)


@dataclass
class QpiRecord:
    iteration: int
    policy: Policy
    counts: np.ndarray
    q_hat: np.ndarray
    q_exact: np.ndarray
    tomography_error: float
    rho_gap: float
    next_policy: Policy
    next_sup_gap: float


@dataclass
class QpiTrace:
    records: list = field(default_factory=list)
    initial: Policy | None = None
    q_star: np.ndarray | None = None
    shots: int = 0
    stopped_early: bool = False

    @property
    def final_policy(self) -> Policy:
        return self.records[-1].next_policy if self.records else self.initial

    def converged_iteration(self, tol: float = 1e-6):
        """First iteration whose improved policy is optimal, or ``None``."""
        for rec in self.records:
            if rec.next_sup_gap <= tol:
                return rec.iteration
        return None


class Theorem6Check(tuple):
    __slots__ = ()

    def __new__(cls, lhs, rhs, holds, vacuous):
        return super().__new__(cls, (lhs, rhs, holds, vacuous))

    lhs = property(lambda self: self[0])
    rhs = property(lambda self: self[1])
    holds = property(lambda self: self[2])
    vacuous = property(lambda self: self[3])


def policy_hash(policy: Policy) -> str:
    return hashlib.sha256(np.ascontiguousarray(policy.probs).tobytes()).hexdigest()[:16]


def evaluation_state(mdp: Mdp, policy: Policy, epsilon: float) -> StatePreparation:
    A = np.eye(mdp.num_pairs) - mdp.discount * build_policy_transition(mdp, policy)
    return solver_state(A, mdp.reward_vector, epsilon, system="evaluation")


def qpi_evaluate(mdp: Mdp, policy: Policy, epsilon: float, rng) -> np.ndarray:
    """One noisy copy of ``|Q^pi>``."""
    return evaluation_state(mdp, policy, epsilon).prepare(rng)


def qpi_improve(counts: np.ndarray, num_states: int, num_actions: int, previous: Policy | None = None) -> Policy:
    """Per-state argmax of the histogram; ties go to the lowest action.

    A state with no counts at all keeps its previous action (action 0 if
    there is no previous deterministic choice).
    """
    table = np.asarray(counts).reshape(num_states, num_actions)
    actions = np.argmax(table, axis=1)
    empty = table.sum(axis=1) == 0
    if np.any(empty):
        if previous is not None and previous.is_deterministic:
            fallback = previous.actions
        elif previous is not None:
            fallback = np.argmax(previous.probs, axis=1)
        else:
            fallback = np.zeros(num_states, dtype=int)
        actions = np.where(empty, fallback, actions)
    return Policy.deterministic(actions, num_actions)


def _initial_policy(mdp: Mdp, config: QpiConfig, rng) -> Policy:
    if config.initial == "uniform":
        return Policy.uniform(mdp.num_states, mdp.num_actions)
    return Policy.deterministic(rng.integers(mdp.num_actions, size=mdp.num_states), mdp.num_actions)


def _rho_distance_of_states(q_star: np.ndarray, q: np.ndarray) -> float:
    return distance_metrics(normalized(q_star), normalized(q))[2]


def run_qpi(mdp: Mdp, config: QpiConfig, q_star: np.ndarray | None = None) -> QpiTrace:
    """Run the loop for ``config.max_iterations`` improvements.

    Exact ``Q^pi`` and ``Q*`` are logged next to the noisy quantities so the
    error bound can be checked afterwards; they never feed the algorithm.
    """
    rng = np.random.default_rng(config.seed)
    S, A = mdp.num_states, mdp.num_actions
    if q_star is None:
        q_star, _ = value_iteration(mdp)
    shots = config.resolved_shots(S * A)
    rounds = config.resolved_rounds(shots)
    policy = _initial_policy(mdp, config, rng)
    trace = QpiTrace(initial=policy, q_star=q_star, shots=shots)
    for t in range(config.max_iterations):
        prep = evaluation_state(mdp, policy, config.epsilon)
        counts = sample_rounds(prep, shots, rounds, rng)
        improved = qpi_improve(counts, S, A, previous=policy)
        q_exact = solve_exact_q(mdp, policy)
        q_hat = np.sqrt(counts / shots)
        tomo = float(np.max(np.abs(q_hat - normalized(q_exact))))
        next_gap = distance_metrics(solve_exact_q(mdp, improved), q_star)[0]
        trace.records.append(
            QpiRecord(
                iteration=t + 1,
                policy=policy,
                counts=counts,
                q_hat=q_hat,
                q_exact=q_exact,
                tomography_error=tomo,
                rho_gap=_rho_distance_of_states(q_star, q_exact),
                next_policy=improved,
                next_sup_gap=next_gap,
            )
        )
        repeated = improved.same_as(policy)
        policy = improved
        if config.early_stop and repeated:
            trace.stopped_early = True
            break
    return trace


def check_theorem6(trace: QpiTrace, mdp: Mdp, tail: int, start: int | None = None):
    """Both sides of the QPI error bound over a window of iterations.

    The window is the last ``tail`` records, or ``tail`` records from
    ``start`` (0-based) when given. ``vacuous`` flags a right-hand side at or
    above ``2 / sqrt(S*A)``, where the bound says nothing useful.
    """
    n = len(trace.records)
    if tail < 1 or tail > n:
        raise ValueError(f"window of {tail} iterations does not fit a trace of {n}")
    lo = n - tail if start is None else start
    if lo < 0 or lo + tail > n:
        raise ValueError("window out of range")
    window = trace.records[lo : lo + tail]
    gamma = mdp.discount
    lhs = max(r.rho_gap for r in window)
    rhs = 2 * math.sqrt(2) * gamma * mdp.horizon**2 * max(r.tomography_error for r in window)
    vacuous = rhs >= 2 / math.sqrt(mdp.num_pairs)
    return Theorem6Check(lhs, rhs, lhs <= rhs + 1e-9, vacuous)


def check_all_windows(trace: QpiTrace, mdp: Mdp) -> list:
    """:func:`check_theorem6` on every contiguous window of the trace."""
    n = len(trace.records)
    return [check_theorem6(trace, mdp, tail, start) for tail in range(1, n + 1) for start in range(n - tail + 1)]
