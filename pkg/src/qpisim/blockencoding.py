"""Dense, desk-scale checks of block-encoding constructions.

An encoding is represented by a pair of isometries whose overlap matrix
``row_map^T col_map`` is ``A / (alpha * beta)``. Products and linear
combinations of encodings are checked through explicit unitaries built from
unitary dilations of the encoded blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import Mdp, Policy, build_policy_transition

__all__ = [
    "MAX_DIMENSION",
    "DimensionOverflowError",
    "OraclePair",
    "EncodingReport",
    "compute_cP",
    "lemma_oracle_pair",
    "build_oracle_pair_P",
    "build_oracle_pair_projection",
    "build_oracle_pair_features",
    "build_projection_pi",
    "reconstruct_block",
    "transpose_report",
    "dilation_unitary",
    "combine_encodings",
    "encode_policy_transition",
    "encode_evaluation_matrix",
    "condition_number",
    "singular_values",
]

MAX_DIMENSION = 2**20


class DimensionOverflowError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class OraclePair:
    """Isometries realising the row and column oracles of an encoding.

    Both maps send basis inputs into a shared space ``C^m x C^n x C^3``; the
    last factor is a flag (0 for encoded amplitudes, 1 and 2 for the row and
    column garbage), which keeps the two garbage parts orthogonal to each
    other and to every encoded outcome.
    """

    row_map: np.ndarray
    col_map: np.ndarray
    alpha: float
    beta: float
    p: float

    @property
    def mu(self) -> float:
        return self.alpha * self.beta

    def isometry_error(self) -> float:
        err = 0.0
        for m in (self.row_map, self.col_map):
            gram = m.T @ m
            err = max(err, float(np.max(np.abs(gram - np.eye(gram.shape[0])))))
        return err


@dataclass(frozen=True, eq=False)
class EncodingReport:
    """``block`` is the recovered top-left block, ``matrix`` the encoded ``A``."""

    mu: float
    reconstruction_error: float
    kappa: float
    block: np.ndarray
    matrix: np.ndarray

    @property
    def fitted_mu(self) -> float:
        """Normalisation read off the recovered block by least squares."""
        return float(np.vdot(self.matrix, self.matrix) / np.vdot(self.matrix, self.block))


def compute_cP(mdp: Mdp) -> float:
    """Largest column sum of ``P`` as an ``(S*A) x S`` matrix."""
    return float(mdp.transition_matrix().sum(axis=0).max())


def _check_dimension(total: int) -> None:
    if total > MAX_DIMENSION:
        raise DimensionOverflowError(f"dense construction needs dimension {total}, cap is {MAX_DIMENSION}")


def lemma_oracle_pair(matrix, p: float, alpha: float | None = None, beta: float | None = None) -> OraclePair:
    """Oracle pair for ``A`` with the exponent split ``p``.

    Row ``i`` is sent to amplitudes ``sign(A_ij) |A_ij|^p`` and column ``j`` to
    ``|A_ij|^(1-p)`` (with ``0^0 = 1``), each padded by garbage to the common
    norms ``alpha >= max_i |A_i^p|`` and ``beta >= max_j |A^(1-p)_j|``.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2:
        raise ValueError("matrix must be 2-D")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    m, n = A.shape
    _check_dimension(3 * m * n)
    mag = np.abs(A)
    sign = np.where(A < 0, -1.0, 1.0)
    safe = np.where(mag > 0, mag, 1.0)
    row_amp = sign * (safe**p if p > 0 else 1.0) * ((mag > 0) | (p == 0))
    col_amp = (safe ** (1 - p)) * ((mag > 0) | (p == 1))
    row_norms = np.linalg.norm(row_amp, axis=1)
    col_norms = np.linalg.norm(col_amp, axis=0)
    alpha = float(row_norms.max()) if alpha is None else float(alpha)
    beta = float(col_norms.max()) if beta is None else float(beta)
    if alpha < row_norms.max() - 1e-12 or beta < col_norms.max() - 1e-12:
        raise ValueError("alpha and beta must bound the row and column norms")
    if alpha == 0 or beta == 0:
        raise ValueError("cannot encode the zero matrix")
    # flat index of (i, j, flag) is (i * n + j) * 3 + flag
    dim = 3 * m * n
    row_map = np.zeros((dim, m))
    col_map = np.zeros((dim, n))
    ii, jj = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    flat = (ii * n + jj) * 3
    row_map[flat, ii] = row_amp / alpha
    col_map[flat, jj] = col_amp / beta
    row_map[np.arange(m) * n * 3 + 1, np.arange(m)] = np.sqrt(np.clip(1 - (row_norms / alpha) ** 2, 0, None))
    col_map[np.arange(n) * 3 + 2, np.arange(n)] = np.sqrt(np.clip(1 - (col_norms / beta) ** 2, 0, None))
    return OraclePair(row_map, col_map, alpha, beta, p)


def build_oracle_pair_P(mdp: Mdp) -> OraclePair:
    """Square-root split of ``P``: ``alpha = 1`` and ``beta = sqrt(c_P)``."""
    return lemma_oracle_pair(mdp.transition_matrix(), 0.5, alpha=1.0, beta=math.sqrt(compute_cP(mdp)))


def build_projection_pi(policy: Policy, num_states: int, num_actions: int) -> np.ndarray:
    """``(S*A) x S`` matrix with entries ``1[s = s'] pi(s, a)``."""
    if policy.probs.shape != (num_states, num_actions):
        raise ValueError(f"policy shape {policy.probs.shape} does not match ({num_states}, {num_actions})")
    out = np.zeros((num_states * num_actions, num_states))
    rows = np.arange(num_states * num_actions)
    out[rows, rows // num_actions] = policy.probs.reshape(-1)
    return out


def build_oracle_pair_projection(policy: Policy, num_states: int, num_actions: int) -> OraclePair:
    return lemma_oracle_pair(build_projection_pi(policy, num_states, num_actions), 0.5, alpha=1.0, beta=1.0)


def build_oracle_pair_features(features) -> OraclePair:
    """``p = 1`` split of a feature matrix with unit rows.

    The column side is a uniform superposition over all rows, so the
    normalisation is ``sqrt(number of rows)``; for tabular features this is
    ``sqrt(K)``.
    """
    Phi = np.asarray(features, dtype=float)
    norms = np.linalg.norm(Phi, axis=1)
    if np.any(norms > 1 + 1e-12):
        raise ValueError("feature rows must have norm at most 1")
    return lemma_oracle_pair(Phi, 1.0, alpha=1.0)


def singular_values(matrix) -> np.ndarray:
    return np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)


def condition_number(matrix, clip_threshold: float | None = None) -> float:
    """``s_max / s_min``; with ``clip_threshold`` small values are floored at
    ``clip_threshold * s_max`` first."""
    s = singular_values(matrix)
    if s.size == 0 or s[0] == 0:
        raise ValueError("condition number of a zero matrix is undefined")
    if clip_threshold is not None:
        if not 0 < clip_threshold <= 1:
            raise ValueError("clip_threshold must lie in (0, 1]")
        s = np.maximum(s, clip_threshold * s[0])
    if s[-1] == 0:
        return math.inf
    return float(s[0] / s[-1])


def _kappa(matrix) -> float:
    try:
        return condition_number(matrix)
    except ValueError:
        return math.inf


def reconstruct_block(pair: OraclePair, matrix) -> EncodingReport:
    A = np.asarray(matrix, dtype=float)
    block = pair.row_map.T @ pair.col_map
    if block.shape != A.shape:
        raise ValueError(f"encoded block is {block.shape}, matrix is {A.shape}")
    err = float(np.max(np.abs(block - A / pair.mu)))
    return EncodingReport(pair.mu, err, _kappa(A), block, A)


def transpose_report(report: EncodingReport) -> EncodingReport:
    """Encoding of ``A^T`` from one of ``A`` (the adjoint unitary)."""
    return EncodingReport(report.mu, report.reconstruction_error, report.kappa, report.block.T, report.matrix.T)


def _psd_sqrt(M):
    w, v = np.linalg.eigh((M + M.T) / 2)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.T


def dilation_unitary(block) -> np.ndarray:
    """Unitary ``[[B, sqrt(I - BB^T)], [sqrt(I - B^T B), -B^T]]`` for a square contraction ``B``."""
    B = np.asarray(block, dtype=float)
    n = B.shape[0]
    if B.shape != (n, n):
        raise ValueError("dilation needs a square block")
    if np.linalg.norm(B, 2) > 1 + 1e-9:
        raise ValueError("block must be a contraction")
    U = np.block([[B, _psd_sqrt(np.eye(n) - B @ B.T)], [_psd_sqrt(np.eye(n) - B.T @ B), -B.T]])
    return U


def _padded(B, n):
    out = np.zeros((n, n))
    out[: B.shape[0], : B.shape[1]] = B
    return out


def _householder_with_first_column(v):
    """Real orthogonal matrix whose first column is the unit vector ``v``."""
    v = np.asarray(v, dtype=float)
    e = np.zeros_like(v)
    e[0] = 1.0
    u = v - e
    if np.linalg.norm(u) < 1e-15:
        return np.eye(v.size)
    u /= np.linalg.norm(u)
    return np.eye(v.size) - 2 * np.outer(u, u)


def _product_block(blocks, n):
    """Top-left block of the product of dilations acting on separate ancillas."""
    k = len(blocks)
    us = [dilation_unitary(_padded(B, n)) for B in blocks]
    # ancilla qubits first (one per factor), system last
    dim = (2**k) * n
    total = np.eye(dim)
    for idx, U in enumerate(us):
        U4 = U.reshape(2, n, 2, n)
        full = np.einsum("aibj,xy,zw->xaziybwj", U4, np.eye(2**idx), np.eye(2 ** (k - idx - 1)))
        total = total @ full.reshape(dim, dim)
    return total[:n, :n], total


def _lcu_block(blocks, weights, n):
    """``PREP^T SELECT PREP`` restricted to all-zero ancillas."""
    L = len(blocks)
    us = [dilation_unitary(_padded(B, n)) for B in blocks]
    amps = np.sqrt(np.abs(weights) / np.sum(np.abs(weights)))
    prep = _householder_with_first_column(amps)
    signs = np.sign(weights)
    dim = L * 2 * n
    select = np.zeros((dim, dim))
    for i, U in enumerate(us):
        select[i * 2 * n : (i + 1) * 2 * n, i * 2 * n : (i + 1) * 2 * n] = signs[i] * U
    P = np.kron(prep, np.eye(2 * n))
    total = P.T @ select @ P
    return total[:n, :n], total


def combine_encodings(reports, mode: str, coefficients=None) -> EncodingReport:
    """Product (in the given order) or linear combination of encodings.

    The combined block is recovered from an explicit unitary, so the
    reported error checks the arithmetic rule ``mu = prod mu_i`` or
    ``mu = sum |lambda_i| mu_i`` numerically.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to combine")
    if mode == "product":
        for left, right in zip(reports, reports[1:]):
            if left.matrix.shape[1] != right.matrix.shape[0]:
                raise ValueError(f"cannot multiply {left.matrix.shape} by {right.matrix.shape}")
        n = max(max(r.matrix.shape) for r in reports)
        _check_dimension((2 ** len(reports)) * n)
        full, _ = _product_block([r.block for r in reports], n)
        matrix = reports[0].matrix
        for r in reports[1:]:
            matrix = matrix @ r.matrix
        mu = float(np.prod([r.mu for r in reports]))
    elif mode == "linear_combination":
        if coefficients is None or len(coefficients) != len(reports):
            raise ValueError("one coefficient per encoding is required")
        shape = reports[0].matrix.shape
        if any(r.matrix.shape != shape for r in reports):
            raise ValueError("linear combination needs equal shapes")
        lam = np.asarray(coefficients, dtype=float)
        if not np.any(lam):
            raise ValueError("all coefficients are zero")
        n = max(shape)
        _check_dimension(len(reports) * 2 * n)
        mus = np.array([r.mu for r in reports])
        full, _ = _lcu_block([r.block for r in reports], lam * mus, n)
        matrix = sum(c * r.matrix for c, r in zip(lam, reports))
        mu = float(np.sum(np.abs(lam) * mus))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    block = full[: matrix.shape[0], : matrix.shape[1]]
    err = float(np.max(np.abs(block - matrix / mu)))
    return EncodingReport(mu, err, _kappa(matrix), block, matrix)


def encode_policy_transition(mdp: Mdp, policy: Policy) -> EncodingReport:
    """``P^pi = P Pi^T`` as a product of the ``P`` and projection encodings."""
    S, A = mdp.num_states, mdp.num_actions
    rep_p = reconstruct_block(build_oracle_pair_P(mdp), mdp.transition_matrix())
    proj = build_projection_pi(policy, S, A)
    rep_pi = reconstruct_block(build_oracle_pair_projection(policy, S, A), proj)
    combined = combine_encodings([rep_p, transpose_report(rep_pi)], "product")
    exact = build_policy_transition(mdp, policy)
    err = max(combined.reconstruction_error, float(np.max(np.abs(combined.matrix - exact))))
    return EncodingReport(combined.mu, err, combined.kappa, combined.block, exact)


def encode_evaluation_matrix(mdp: Mdp, policy: Policy) -> EncodingReport:
    """``I - gamma P^pi`` as a linear combination of ``I`` and ``P^pi``."""
    n = mdp.num_pairs
    ident = EncodingReport(1.0, 0.0, 1.0, np.eye(n), np.eye(n))
    return combine_encodings([ident, encode_policy_transition(mdp, policy)], "linear_combination", [1.0, -mdp.discount])
