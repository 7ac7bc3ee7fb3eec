"""Feature maps phi(s, a) with unit norm per state-action pair."""

from __future__ import annotations

import itertools

import numpy as np

__all__ = ["FourierFeatures", "TabularFeatures"]


class FourierFeatures:
    """Per-action Fourier basis on ``[0, 1]^d``.

    For each action block there is one cosine and one sine feature per
    coefficient vector ``c`` in ``{0..k-1}^d``, all scaled by ``k^(-d/2)`` so
    that every feature vector has unit norm. Only the block of the chosen
    action is non-zero. Layout: ``index = a * 2k^d + part * k^d + j`` with
    ``part`` 0 for cosine and 1 for sine. An optional ``preprocess`` maps raw
    states into the unit cube before the basis is evaluated.
    """

    def __init__(self, degree: int, num_actions: int, dim: int = 2, preprocess=None):
        if degree < 1:
            raise ValueError("degree must be at least 1")
        self.degree = degree
        self.num_actions = num_actions
        self.dim = dim
        self.preprocess = preprocess
        self.coeffs = np.array(list(itertools.product(range(degree), repeat=dim)), dtype=float)
        self.block = 2 * len(self.coeffs)
        self.scale = 1.0 / np.sqrt(len(self.coeffs))

    @property
    def num_features(self) -> int:
        return self.num_actions * self.block

    def _basis(self, states: np.ndarray) -> np.ndarray:
        if self.preprocess is not None:
            states = self.preprocess(states)
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != self.dim:
            raise ValueError(f"states must have {self.dim} columns")
        if np.any(states < 0) or np.any(states > 1):
            raise ValueError("Fourier features need states preprocessed into [0, 1]^d")
        arg = np.pi * states @ self.coeffs.T
        return np.concatenate([np.cos(arg), np.sin(arg)], axis=1) * self.scale

    def __call__(self, states, actions) -> np.ndarray:
        """Feature rows for paired ``states`` (n, d) and ``actions`` (n,)."""
        basis = self._basis(states)
        actions = np.broadcast_to(np.asarray(actions, dtype=int), (basis.shape[0],))
        out = np.zeros((basis.shape[0], self.num_features))
        cols = actions[:, None] * self.block + np.arange(self.block)[None, :]
        np.put_along_axis(out, cols, basis, axis=1)
        return out

    def per_state(self, states) -> np.ndarray:
        """``(n, A, K)`` stack of the matrices ``Phi(s)``."""
        basis = self._basis(states)
        n = basis.shape[0]
        out = np.zeros((n, self.num_actions, self.num_features))
        for a in range(self.num_actions):
            out[:, a, a * self.block : (a + 1) * self.block] = basis
        return out


class TabularFeatures:
    """Rows of an explicit ``(S*A, K)`` matrix, indexed by integer states."""

    def __init__(self, matrix, num_states: int, num_actions: int):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape[0] != num_states * num_actions:
            raise ValueError(f"feature matrix needs {num_states * num_actions} rows, has {matrix.shape[0]}")
        self.matrix = matrix
        self.num_states = num_states
        self.num_actions = num_actions

    @classmethod
    def identity(cls, num_states: int, num_actions: int) -> "TabularFeatures":
        return cls(np.eye(num_states * num_actions), num_states, num_actions)

    @property
    def num_features(self) -> int:
        return self.matrix.shape[1]

    def __call__(self, states, actions) -> np.ndarray:
        states = np.asarray(states, dtype=int).reshape(-1)
        actions = np.broadcast_to(np.asarray(actions, dtype=int), states.shape)
        return self.matrix[states * self.num_actions + actions]

    def per_state(self, states) -> np.ndarray:
        states = np.asarray(states, dtype=int).reshape(-1)
        return self.matrix.reshape(self.num_states, self.num_actions, -1)[states]
