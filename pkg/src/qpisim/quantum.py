"""Error models standing in for the quantum subroutines.

A linear-system solver returns the exact normalised solution moved by at most
``epsilon`` in l2 norm, and measuring a state draws a multinomial histogram
from its squared amplitudes. Every random draw comes from an explicit
``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseModel",
    "SingularSystemError",
    "StatePreparation",
    "perturb_unit",
    "simulate_solver_state",
    "solver_state",
    "measure_state",
    "sample_rounds",
    "tomography_estimate",
    "shots_for",
]

SHOT_LOG = math.log  # natural log in the shot-count formula


class SingularSystemError(np.linalg.LinAlgError):
    def __init__(self, system: str):
        super().__init__(f"{system} system is singular at working precision")
        self.system = system


@dataclass(frozen=True)
class NoiseModel:
    epsilon: float
    shots: int
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.shots < 1:
            raise ValueError("shots must be at least 1")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def perturb_unit(x: np.ndarray, epsilon: float, rng, size: int | None = None) -> np.ndarray:
    """Noisy copies of the unit vector ``x`` within l2 distance ``epsilon``.

    A direction uniform on the sphere is scaled by ``u * r`` with ``u`` uniform
    in ``[0, 1]`` and the result renormalised. ``r = epsilon * sqrt(1 - epsilon^2/4)``
    is the largest radius for which renormalising can never land further than
    ``epsilon`` from ``x``. With ``size`` the result has shape ``(size, n)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    batch = 1 if size is None else size
    z = rng.standard_normal((batch, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    radius = epsilon * math.sqrt(1.0 - epsilon**2 / 4.0)
    u = rng.random(batch)
    y = x[None, :] + (u * radius)[:, None] * z
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return y[0] if size is None else y


def _solve(A, b, system):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.any(b):
        raise ValueError(f"{system} right-hand side is zero")
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(system) from exc
    if not np.all(np.isfinite(x)) or np.linalg.cond(A) > 1 / np.finfo(float).eps:
        raise SingularSystemError(system)
    return x / np.linalg.norm(x)


@dataclass(frozen=True, eq=False)
class StatePreparation:
    """Repeatable producer of an epsilon-accurate copy of ``exact``."""

    exact: np.ndarray
    epsilon: float

    def prepare(self, rng, size: int | None = None) -> np.ndarray:
        if self.epsilon == 0:
            return self.exact.copy() if size is None else np.tile(self.exact, (size, 1))
        return perturb_unit(self.exact, self.epsilon, rng, size)


def solver_state(A, b, epsilon: float, system: str = "evaluation") -> StatePreparation:
    """Exact normalised solution of ``A x = b`` wrapped with its noise level."""
    return StatePreparation(_solve(A, b, system), epsilon)


def simulate_solver_state(A, b, epsilon: float, rng, system: str = "evaluation") -> np.ndarray:
    """One noisy output of the linear-system solver: a unit vector within
    ``epsilon`` of ``A^-1 b / |A^-1 b|``."""
    return solver_state(A, b, epsilon, system).prepare(rng)


def measure_state(amplitudes, shots: int, rng) -> np.ndarray:
    """Histogram of ``shots`` computational-basis measurements."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    norm = np.linalg.norm(amplitudes)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"amplitudes must form a unit vector, norm is {norm}")
    probs = amplitudes**2
    return rng.multinomial(shots, probs / probs.sum())


def sample_rounds(prep: StatePreparation, shots: int, rounds: int, rng, transform=None, chunk: int = 65536):
    """Histogram from ``shots`` measurements spread over ``rounds`` fresh preparations.

    ``rounds == shots`` reproduces one preparation per measurement. Each
    prepared vector can be mapped through ``transform`` (a matrix applied on
    the left) before normalising and measuring.
    """
    if not 1 <= rounds <= shots:
        raise ValueError("rounds must lie between 1 and shots")
    n = prep.exact.size if transform is None else transform.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    per_round = np.full(rounds, shots // rounds, dtype=np.int64)
    per_round[: shots % rounds] += 1
    done = 0
    while done < rounds:
        batch = min(chunk, rounds - done)
        states = prep.prepare(rng, size=batch)
        if transform is not None:
            states = states @ transform.T
        probs = states**2
        norms = probs.sum(axis=1, keepdims=True)
        probs = np.divide(probs, norms, out=np.zeros_like(probs), where=norms > 0)
        k = per_round[done : done + batch]
        if np.all(k == 1):
            cdf = np.cumsum(probs, axis=1)
            u = rng.random(batch) * cdf[:, -1]
            idx = np.minimum((cdf < u[:, None]).sum(axis=1), n - 1)
            counts += np.bincount(idx, minlength=n)
        else:
            for row, m in zip(probs, k):
                counts += rng.multinomial(m, row / row.sum())
        done += batch
    return counts


def tomography_estimate(
    prep: StatePreparation,
    shots: int,
    rng,
    signed: bool = False,
    sign_resolution: float | None = None,
    rounds: int = 1,
) -> np.ndarray:
    """l_inf tomography: entries ``sigma(k) * sqrt(count_k / shots)``.

    Without ``signed`` all entries are non-negative. With it, a component of
    the exact state whose magnitude exceeds ``sign_resolution`` (default
    ``epsilon / 2`` of the preparation) gets its true sign and the rest get a
    fair coin; a wrong sign costs at most twice the magnitude, so this is the
    resolution an l_inf error of ``epsilon`` needs.
    """
    counts = sample_rounds(prep, shots, rounds, rng)
    est = np.sqrt(counts / counts.sum())
    if signed:
        res = prep.epsilon / 2 if sign_resolution is None else sign_resolution
        sign = np.where(prep.exact >= 0, 1.0, -1.0)
        coin = rng.choice([-1.0, 1.0], size=est.size)
        est *= np.where(np.abs(prep.exact) > res, sign, coin)
    return est


def shots_for(n: int, epsilon: float) -> int:
    """``ceil(36 ln(n) / epsilon^2)`` measurements for l_inf tomography."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    value = 36.0 * SHOT_LOG(n) / epsilon**2
    # absorbs round-off such as ln(e^2) = 2.0000000000000004
    return math.ceil(value - 1e-9 * value)
