"""Approximate quantum policy iteration with linear value functions.

Policy evaluation solves an LSTDQ system for the weights ``w`` of
``Q ~ Phi w``; the solver is replaced by its noise model, and the policy is
improved from measurements of states built out of the noisy weight state.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .environments.pendulum import SampleSource, preprocess_states
from .features import FourierFeatures
from .mdp import Mdp, Policy, build_policy_transition
from .qpi import qpi_improve
from .quantum import SingularSystemError, StatePreparation, sample_rounds, tomography_estimate

__all__ = [
    "LstdqSystem",
    "QapiConfig",
    "QapiRecord",
    "QapiTrace",
    "STRATEGIES",
    "pendulum_features",
    "build_lstdq_model_based",
    "build_lstdq_model_free",
    "clipped_solve",
    "weight_state",
    "solve_weights_sim",
    "improve_global",
    "improve_tomography",
    "improve_per_state",
    "greedy_actions",
    "run_qapi",
]

STRATEGIES = ("global", "tomography", "per_state")


@dataclass(frozen=True, eq=False)
class LstdqSystem:
    """``matrix w = vector`` built from features rescaled by ``scale``.

    The unscaled weights are ``scale * w``: features ``scale * Phi`` with
    weights ``w`` give the same values as ``Phi`` with ``scale * w``.
    """

    matrix: np.ndarray
    vector: np.ndarray
    provenance: str
    scale: float = 1.0
    warning: str | None = None

    @property
    def num_features(self) -> int:
        return self.vector.size


def pendulum_features(degree: int, num_actions: int = 3) -> FourierFeatures:
    """Fourier features on raw pendulum states (preprocessing built in)."""
    return FourierFeatures(degree, num_actions, dim=2, preprocess=preprocess_states)


def _rank_warning(Phi) -> str | None:
    rank = np.linalg.matrix_rank(Phi)
    if rank < Phi.shape[1]:
        return f"feature matrix has rank {rank} < {Phi.shape[1]}; clipping will be active"
    return None


def build_lstdq_model_based(mdp: Mdp, features, policy: Policy) -> LstdqSystem:
    """``A = Phi^T (Phi - gamma P^pi Phi)``, ``b = Phi^T R`` with ``|Phi| = 1``."""
    Phi = np.asarray(features, dtype=float)
    if Phi.shape[0] != mdp.num_pairs:
        raise ValueError(f"features need {mdp.num_pairs} rows, got {Phi.shape[0]}")
    norm = np.linalg.norm(Phi, 2)
    if norm == 0:
        raise ValueError("feature matrix is zero")
    scale = 1.0 / norm
    Phs = Phi * scale
    nxt = build_policy_transition(mdp, policy) @ Phs
    A = Phs.T @ (Phs - mdp.discount * nxt)
    b = Phs.T @ mdp.reward_vector
    return LstdqSystem(A, b, "model_based", scale, _rank_warning(Phi))


def build_lstdq_model_free(
    source: SampleSource,
    features,
    next_actions,
    discount: float,
    scale: float | None = None,
) -> LstdqSystem:
    """Sample-based LSTDQ system.

    ``next_actions[i]`` is the deterministic policy's action at the next
    state of sample ``i``. Terminal samples get a zero next-feature row.
    Both feature matrices share one rescaling, by default
    ``1 / max(|Phi~|, |P~Phi|)``.
    """
    if len(source) == 0:
        raise ValueError("empty sample source")
    next_actions = np.asarray(next_actions, dtype=int)
    if next_actions.shape != (len(source),):
        raise ValueError("one next action per sample is required")
    Phi = features(source.states, source.actions)
    nxt = features(source.next_states, next_actions)
    nxt[source.terminal] = 0.0
    if scale is None:
        top = max(np.linalg.norm(Phi, 2), np.linalg.norm(nxt, 2))
        if top == 0:
            raise ValueError("feature matrices are zero")
        scale = 1.0 / top
    Phi = Phi * scale
    nxt = nxt * scale
    A = Phi.T @ (Phi - discount * nxt)
    b = Phi.T @ source.rewards
    return LstdqSystem(A, b, "model_free", scale, _rank_warning(Phi))


def clipped_solve(system: LstdqSystem, clip: float) -> np.ndarray:
    """Solution with singular values below ``clip * s_max`` raised to that floor."""
    if not 0 < clip < 1:
        raise ValueError("clip must lie in (0, 1)")
    U, s, Vt = np.linalg.svd(system.matrix)
    if s[0] == 0 or not np.all(np.isfinite(s)):
        raise SingularSystemError("LSTDQ")
    s = np.maximum(s, clip * s[0])
    return Vt.T @ ((U.T @ system.vector) / s)


def weight_state(system: LstdqSystem, epsilon: float, clip: float) -> StatePreparation:
    w = clipped_solve(system, clip)
    norm = np.linalg.norm(w)
    if norm == 0 or not np.isfinite(norm):
        raise SingularSystemError("LSTDQ")
    return StatePreparation(w / norm, epsilon)


def solve_weights_sim(system: LstdqSystem, epsilon: float, clip: float, rng) -> np.ndarray:
    """One noisy weight state within ``epsilon`` of the clipped solution."""
    return weight_state(system, epsilon, clip).prepare(rng)


def _fallback_actions(previous, n):
    if previous is None:
        return np.zeros(n, dtype=int)
    return np.asarray(previous, dtype=int)


def improve_global(prep: StatePreparation, features, shots: int, rng, num_states: int, num_actions: int, fresh: bool = True, previous: Policy | None = None) -> Policy:
    """Measure ``|Phi w>`` over state-action pairs, then per-state argmax."""
    Phi = np.asarray(features, dtype=float)
    rounds = shots if fresh else 1
    counts = sample_rounds(prep, shots, rounds, rng, transform=Phi)
    return qpi_improve(counts, num_states, num_actions, previous=previous)


def improve_tomography(prep: StatePreparation, per_state, shots: int, rng, fresh: bool = True) -> np.ndarray:
    """Signed tomography of the weight state, then ``argmax_a Phi(s) w~``.

    ``per_state`` is the ``(n, A, K)`` stack of ``Phi(s)``.
    """
    est = tomography_estimate(prep, shots, rng, signed=True, rounds=shots if fresh else 1)
    return np.argmax(np.asarray(per_state) @ est, axis=1)


def improve_per_state(
    prep: StatePreparation,
    per_state,
    shots: int,
    rng,
    fresh: bool = True,
    previous=None,
    chunk_draws: int = 200_000,
) -> np.ndarray:
    """For every state measure ``|Phi(s) w>`` over actions ``shots`` times.

    With ``fresh`` each measurement uses its own noisy weight state. States
    whose vector is zero, or that receive no counts, keep ``previous``.
    """
    Phi_s = np.asarray(per_state, dtype=float)
    n, A, K = Phi_s.shape
    actions = _fallback_actions(previous, n).copy()
    if A == 1:
        return np.zeros(n, dtype=int)
    step = max(1, chunk_draws // shots) if fresh else n
    w_cached = None if fresh else prep.prepare(rng)
    for lo in range(0, n, step):
        block = Phi_s[lo : lo + step]
        c = block.shape[0]
        if fresh:
            W = prep.prepare(rng, size=c * shots).reshape(c, shots, K)
            amps = np.einsum("cak,cmk->cma", block, W)
            probs = amps**2
            tot = probs.sum(axis=2, keepdims=True)
            ok = tot[..., 0] > 0
            cdf = np.cumsum(np.divide(probs, tot, out=np.zeros_like(probs), where=tot > 0), axis=2)
            u = rng.random((c, shots))[..., None]
            drawn = np.minimum((cdf < u).sum(axis=2), A - 1)
            counts = np.zeros((c, A), dtype=np.int64)
            for a in range(A):
                counts[:, a] = np.sum((drawn == a) & ok, axis=1)
        else:
            amps = block @ w_cached
            probs = amps**2
            tot = probs.sum(axis=1, keepdims=True)
            counts = np.zeros((c, A), dtype=np.int64)
            live = tot[:, 0] > 0
            if np.any(live):
                p = probs[live] / tot[live]
                counts[live] = rng.multinomial(shots, p)
        has = counts.sum(axis=1) > 0
        actions[lo : lo + c] = np.where(has, np.argmax(counts, axis=1), actions[lo : lo + c])
    return actions


def greedy_actions(weights, per_state) -> np.ndarray:
    """``argmax_a Phi(s) w`` with ties to the lowest action."""
    return np.argmax(np.asarray(per_state) @ np.asarray(weights), axis=1)


@dataclass(frozen=True)
class QapiConfig:
    """``shots`` is ``M``, measurements per state (per pair for ``global``).

    ``fresh`` draws a new noisy weight state for every measurement; turning
    it off reuses one per iteration.
    """

    epsilon: float = 1e-2
    shots: int = 100
    max_iterations: int = 8
    seed: int = 0
    strategy: str = "per_state"
    clip: float = 1e-3
    fresh: bool = True
    early_stop: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.clip < 1:
            raise ValueError("clip must lie in (0, 1)")
        if self.shots < 1:
            raise ValueError("shots must be at least 1")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


@dataclass
class QapiRecord:
    iteration: int
    actions_hash: str
    weights: np.ndarray
    next_actions: np.ndarray
    changed: int
    score: float | None = None


@dataclass
class QapiTrace:
    records: list = field(default_factory=list)
    initial: np.ndarray | None = None
    stopped_early: bool = False

    @property
    def final_actions(self) -> np.ndarray:
        return self.records[-1].next_actions if self.records else self.initial


def _hash(actions) -> str:
    return hashlib.sha256(np.ascontiguousarray(actions, dtype=np.int64).tobytes()).hexdigest()[:16]


def _improve(config, prep, per_state, rng, previous, features_matrix=None, shape=None):
    if config.strategy == "per_state":
        return improve_per_state(prep, per_state, config.shots, rng, fresh=config.fresh, previous=previous)
    if config.strategy == "tomography":
        return improve_tomography(prep, per_state, config.shots, rng, fresh=config.fresh)
    if features_matrix is None:
        raise ValueError("the global strategy needs a finite state space")
    S, A = shape
    prev = Policy.deterministic(previous, A)
    return improve_global(prep, features_matrix, config.shots, rng, S, A, fresh=config.fresh, previous=prev).actions


def run_qapi(environment, features, config: QapiConfig, discount: float | None = None, initial=None, evaluate=None) -> QapiTrace:
    """Iterate noisy evaluation and measured improvement.

    ``environment`` is a finite :class:`Mdp` with ``features`` an ``(S*A, K)``
    matrix, or a :class:`SampleSource` with a feature map and ``discount``;
    in the sample case the policy lives on the next states of the source.
    ``evaluate(prep, rng)``, when given, scores each improved policy from
    the weight state it was built from; the score is recorded.
    """
    rng = np.random.default_rng(config.seed)
    finite = isinstance(environment, Mdp)
    if finite:
        mdp = environment
        Phi = np.asarray(features, dtype=float)
        S, A = mdp.num_states, mdp.num_actions
        per_state = Phi.reshape(S, A, -1)
        n = S
    else:
        if discount is None:
            raise ValueError("a sample source needs an explicit discount")
        source = environment
        A = features.num_actions
        per_state = features.per_state(source.next_states)
        n = len(source)
    if initial is None:
        actions = rng.integers(A, size=n)
    else:
        actions = np.asarray(initial, dtype=int).copy()
        if actions.shape != (n,):
            raise ValueError(f"initial actions must have shape ({n},)")
    trace = QapiTrace(initial=actions.copy())
    for t in range(config.max_iterations):
        if finite:
            system = build_lstdq_model_based(mdp, Phi, Policy.deterministic(actions, A))
        else:
            system = build_lstdq_model_free(source, features, actions, discount)
        prep = weight_state(system, config.epsilon, config.clip)
        new = _improve(config, prep, per_state, rng, actions, Phi if finite else None, (n, A))
        score = None if evaluate is None else float(evaluate(prep, rng))
        changed = int(np.sum(new != actions))
        trace.records.append(QapiRecord(t + 1, _hash(new), prep.exact.copy(), new.copy(), changed, score))
        actions = new
        if config.early_stop and changed == 0:
            trace.stopped_early = True
            break
    return trace
