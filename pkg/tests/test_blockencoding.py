import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_mdp, random_policy
from qpisim.blockencoding import (
    DimensionOverflowError,
    EncodingReport,
    build_oracle_pair_P,
    build_oracle_pair_features,
    build_oracle_pair_projection,
    build_projection_pi,
    combine_encodings,
    compute_cP,
    condition_number,
    dilation_unitary,
    encode_evaluation_matrix,
    encode_policy_transition,
    lemma_oracle_pair,
    reconstruct_block,
    transpose_report,
)
from qpisim.environments import builtin_map, frozenlake_to_mdp
from qpisim.mdp import Mdp, Policy, build_policy_transition


def identity_report(n):
    return EncodingReport(1.0, 0.0, 1.0, np.eye(n), np.eye(n))


def test_cP_self_loop():
    assert compute_cP(Mdp(np.ones((1, 1, 1)), np.zeros((1, 1)), 0.5)) == 1.0


@pytest.mark.parametrize("name", ["4x4", "8x8", "diagonal8"])
def test_cP_exhaustive_on_lakes(name):
    mdp = frozenlake_to_mdp(builtin_map(name), 0.9)
    P = mdp.transitions
    by_hand = max(P[:, :, t].sum() for t in range(mdp.num_states))
    assert compute_cP(mdp) == by_hand
    assert compute_cP(mdp) <= 8


def test_cP_exceeds_four_next_to_holes(lake4):
    # a hole keeps its 4 self-loops and collects moves from walkable neighbours
    assert compute_cP(lake4) > 4


def test_oracle_pair_P_is_isometric_and_exact(lake4):
    pair = build_oracle_pair_P(lake4)
    assert pair.isometry_error() <= 1e-10
    rep = reconstruct_block(pair, lake4.transition_matrix())
    assert rep.reconstruction_error <= 1e-10
    assert rep.mu == pytest.approx(math.sqrt(compute_cP(lake4)))


def test_deterministic_rows_have_one_encoded_entry(lake4):
    pair = build_oracle_pair_P(lake4)
    encoded = pair.row_map.reshape(64, 16, 3, 64)[:, :, 0, :]
    for i in range(64):
        assert np.count_nonzero(encoded[:, :, i]) == 1


def test_garbage_is_orthogonal_to_encoded_outcomes(lake4):
    pair = build_oracle_pair_P(lake4)
    col = pair.col_map.reshape(64, 16, 3, 16)
    row = pair.row_map.reshape(64, 16, 3, 64)
    assert not np.any(col[:, :, 1, :]) and not np.any(row[:, :, 2, :])


def test_identity_encoding():
    pair = lemma_oracle_pair(np.eye(5), 0.5)
    rep = reconstruct_block(pair, np.eye(5))
    assert rep.mu == 1.0 and rep.reconstruction_error == 0.0


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 6), st.sampled_from([0.0, 0.25, 0.5, 1.0]))
@settings(max_examples=60, deadline=None)
def test_generic_construction_recovers_any_matrix(seed, m, n, p):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n)) * (rng.random((m, n)) > 0.3)
    if not np.any(A):
        A[0, 0] = 1.0
    pair = lemma_oracle_pair(A, p)
    assert pair.isometry_error() <= 1e-10
    assert reconstruct_block(pair, A).reconstruction_error <= 1e-10


def test_projection_matrix():
    pol = Policy.deterministic([1, 0, 2], 3)
    Pi = build_projection_pi(pol, 3, 3)
    assert np.count_nonzero(Pi) == 3 and set(Pi[Pi != 0]) == {1.0}


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 4))
@settings(max_examples=40, deadline=None)
def test_projection_factorises_policy_transition(seed, S, A):
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, S, A, 0.5)
    pol = random_policy(rng, S, A)
    Pi = build_projection_pi(pol, S, A)
    assert np.max(np.abs(mdp.transition_matrix() @ Pi.T - build_policy_transition(mdp, pol))) <= 1e-12
    pair = build_oracle_pair_projection(pol, S, A)
    assert reconstruct_block(pair, Pi).reconstruction_error <= 1e-10


def test_policy_transition_mu_is_policy_independent(lake4):
    rng = np.random.default_rng(0)
    mus = []
    for _ in range(3):
        rep = encode_policy_transition(lake4, random_policy(rng, 16, 4))
        assert rep.reconstruction_error <= 1e-10
        mus.append(rep.fitted_mu)
        assert rep.mu == pytest.approx(math.sqrt(compute_cP(lake4)), abs=1e-12)
    assert max(mus) - min(mus) <= 1e-9
    assert abs(mus[0] - math.sqrt(compute_cP(lake4))) <= 1e-9


def test_tabular_features_encoding():
    Phi = np.eye(12)
    rep = reconstruct_block(build_oracle_pair_features(Phi), Phi)
    assert rep.mu == pytest.approx(math.sqrt(12))
    assert np.max(np.abs(rep.block - Phi / math.sqrt(12))) <= 1e-10


def test_general_features_encoding_normalisation_is_sqrt_rows():
    rng = np.random.default_rng(1)
    Phi = rng.normal(size=(20, 4))
    Phi /= np.linalg.norm(Phi, axis=1, keepdims=True)
    rep = reconstruct_block(build_oracle_pair_features(Phi), Phi)
    assert rep.reconstruction_error <= 1e-10
    assert rep.mu == pytest.approx(math.sqrt(20))
    assert rep.mu >= np.linalg.norm(Phi, 2)


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_dilation_is_unitary(seed, n):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    B /= np.linalg.norm(B, 2) * rng.uniform(1.0, 3.0)
    U = dilation_unitary(B)
    assert np.max(np.abs(U.T @ U - np.eye(2 * n))) <= 1e-9
    assert np.array_equal(U[:n, :n], B)


def test_dilation_rejects_non_contraction():
    with pytest.raises(ValueError):
        dilation_unitary(2 * np.eye(2))


def test_product_of_identities():
    rep = combine_encodings([identity_report(4), identity_report(4)], "product")
    assert rep.mu == 1.0 and rep.reconstruction_error == 0.0


def test_linear_combination_for_evaluation_matrix(lake4):
    pol = Policy.uniform(16, 4)
    ppi = encode_policy_transition(lake4, pol)
    rep = combine_encodings([identity_report(64), ppi], "linear_combination", [1.0, -0.9])
    assert rep.mu == pytest.approx(1 + 0.9 * ppi.mu, abs=1e-12)
    assert rep.reconstruction_error <= 1e-10
    assert np.allclose(rep.matrix, np.eye(64) - 0.9 * build_policy_transition(lake4, pol))
    assert encode_evaluation_matrix(lake4, pol).reconstruction_error <= 1e-10


def test_lstd_matrix_product(lake4):
    rng = np.random.default_rng(2)
    Phi = rng.normal(size=(64, 6))
    Phi /= np.linalg.norm(Phi, axis=1, keepdims=True)
    fphi = reconstruct_block(build_oracle_pair_features(Phi), Phi)
    amat = encode_evaluation_matrix(lake4, random_policy(rng, 16, 4))
    rep = combine_encodings([transpose_report(fphi), amat, fphi], "product")
    assert rep.mu == pytest.approx(fphi.mu**2 * amat.mu, rel=1e-12)
    dense = Phi.T @ amat.matrix @ Phi
    assert np.max(np.abs(rep.block * rep.mu - dense)) <= 1e-9


@given(st.integers(0, 2**32 - 1), st.lists(st.floats(-2, 2).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=3))
@settings(max_examples=30, deadline=None)
def test_linear_combination_mu_identity(seed, coeffs):
    rng = np.random.default_rng(seed)
    reports = []
    for _ in coeffs:
        A = rng.normal(size=(3, 3))
        reports.append(reconstruct_block(lemma_oracle_pair(A, 0.5), A))
    rep = combine_encodings(reports, "linear_combination", coeffs)
    assert rep.mu == pytest.approx(sum(abs(c) * r.mu for c, r in zip(coeffs, reports)))
    assert rep.reconstruction_error <= 1e-10


def test_combine_dimension_mismatch():
    a = identity_report(3)
    b = identity_report(4)
    with pytest.raises(ValueError):
        combine_encodings([a, b], "product")
    with pytest.raises(ValueError):
        combine_encodings([a, b], "linear_combination", [1, 1])
    with pytest.raises(ValueError):
        combine_encodings([a], "sum")


def test_dimension_cap():
    with pytest.raises(DimensionOverflowError):
        lemma_oracle_pair(np.ones((1024, 1024)), 0.5)


def test_condition_numbers(lake4):
    assert condition_number(np.eye(3)) == 1.0
    rng = np.random.default_rng(0)
    A = rng.normal(size=(10, 10))
    A[:, 0] = A[:, 1]
    assert condition_number(A, clip_threshold=1e-3) <= 1000 + 1e-6
    with pytest.raises(ValueError):
        condition_number(np.zeros((2, 2)))


def test_doubly_stochastic_policy_transition_meets_spectral_interval():
    # the [1 - gamma, 1 + gamma] interval holds when |P^pi| <= 1 in 2-norm,
    # which a doubly stochastic P^pi guarantees
    rng = np.random.default_rng(4)
    for _ in range(20):
        S, A, gamma = int(rng.integers(2, 6)), int(rng.integers(1, 4)), float(rng.uniform(0, 0.99))
        P = np.zeros((S, A, S))
        for a in range(A):
            P[:, a, :] = np.eye(S)[rng.permutation(S)]
        mdp = Mdp(P, rng.random((S, A)), gamma)
        pol = Policy.uniform(S, A)
        s = np.linalg.svd(np.eye(S * A) - gamma * build_policy_transition(mdp, pol), compute_uv=False)
        assert s[-1] >= 1 - gamma - 1e-9 and s[0] <= 1 + gamma + 1e-9
