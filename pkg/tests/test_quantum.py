import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpisim.mdp import Policy, build_policy_transition, normalized, solve_exact_q
from qpisim.quantum import (
    NoiseModel,
    SingularSystemError,
    StatePreparation,
    measure_state,
    perturb_unit,
    sample_rounds,
    shots_for,
    simulate_solver_state,
    solver_state,
    tomography_estimate,
)


@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(1e-6, 0.99))
@settings(max_examples=200, deadline=None)
def test_solver_output_is_unit_and_within_epsilon(seed, n, eps):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + n * np.eye(n)
    b = rng.normal(size=n)
    x = normalized(np.linalg.solve(A, b))
    xh = simulate_solver_state(A, b, eps, rng)
    assert abs(np.linalg.norm(xh) - 1) <= 1e-12
    assert np.linalg.norm(xh - x) <= eps + 1e-12


def test_perturbation_reaches_close_to_the_bound():
    rng = np.random.default_rng(0)
    x = normalized(np.ones(3))
    ys = perturb_unit(x, 0.5, rng, size=20000)
    d = np.linalg.norm(ys - x, axis=1)
    assert d.max() <= 0.5 + 1e-12
    assert d.max() > 0.45


def test_identity_system():
    rng = np.random.default_rng(1)
    b = np.array([3.0, 4.0])
    out = simulate_solver_state(np.eye(2), b, 0.01, rng)
    assert np.linalg.norm(out - b / 5) <= 0.01


def test_vanishing_noise():
    rng = np.random.default_rng(2)
    b = np.array([1.0, 2.0, 2.0])
    out = simulate_solver_state(np.eye(3), b, 1e-12, rng)
    assert np.allclose(out, b / 3, atol=1e-11)


def test_evaluation_system_matches_oracle(lake4):
    rng = np.random.default_rng(3)
    pol = Policy.uniform(16, 4)
    A = np.eye(64) - 0.9 * build_policy_transition(lake4, pol)
    out = simulate_solver_state(A, lake4.reward_vector, 1e-2, rng)
    assert np.linalg.norm(out - normalized(solve_exact_q(lake4, pol))) <= 1e-2


def test_singular_system_names_the_system():
    with pytest.raises(SingularSystemError) as info:
        solver_state(np.zeros((2, 2)), np.ones(2), 0.1, system="weights")
    assert "weights" in str(info.value)


def test_zero_rhs_rejected():
    with pytest.raises(ValueError):
        solver_state(np.eye(2), np.zeros(2), 0.1)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(1.0, 10)
    with pytest.raises(ValueError):
        NoiseModel(0.1, 0)


def test_determinism_for_equal_seeds():
    a = simulate_solver_state(np.eye(4), np.arange(1.0, 5.0), 0.1, NoiseModel(0.1, 5, seed=9).rng())
    b = simulate_solver_state(np.eye(4), np.arange(1.0, 5.0), 0.1, NoiseModel(0.1, 5, seed=9).rng())
    assert np.array_equal(a, b)


def test_measure_basis_state():
    rng = np.random.default_rng(0)
    counts = measure_state(np.eye(5)[0], 1000, rng)
    assert counts[0] == 1000 and counts.sum() == 1000


def test_measure_uniform_within_five_sigma():
    rng = np.random.default_rng(0)
    counts = measure_state(np.full(4, 0.5), 10000, rng)
    sigma = math.sqrt(10000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 2500) <= 5 * sigma)


def test_measure_single_shot():
    counts = measure_state(normalized(np.ones(7)), 1, np.random.default_rng(4))
    assert counts.sum() == 1 and np.count_nonzero(counts) == 1


def test_measure_requires_unit_vector():
    with pytest.raises(ValueError):
        measure_state(np.ones(3), 5, np.random.default_rng(0))


def test_total_variation_shrinks_with_shots():
    x = normalized(np.arange(1.0, 9.0))
    p = x**2
    rng = np.random.default_rng(5)
    tv = [0.5 * np.abs(measure_state(x, m, rng) / m - p).sum() for m in (10**2, 10**4, 10**6)]
    assert tv[0] > tv[1] > tv[2]


@given(st.integers(1, 50), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_rounds_preserve_total_shots(rounds, seed):
    rng = np.random.default_rng(seed)
    prep = StatePreparation(normalized(np.arange(1.0, 6.0)), 0.05)
    counts = sample_rounds(prep, 50, rounds, rng)
    assert counts.sum() == 50


def test_tomography_one_hot():
    est = tomography_estimate(StatePreparation(np.eye(6)[2], 0.0), 500, np.random.default_rng(0))
    assert np.array_equal(est, np.eye(6)[2])


@given(st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=50, deadline=None)
def test_tomography_estimate_is_unit_norm(seed, signed):
    rng = np.random.default_rng(seed)
    x = normalized(rng.normal(size=9))
    est = tomography_estimate(StatePreparation(x, 0.05), 300, rng, signed=signed)
    assert abs(np.linalg.norm(est) - 1) <= 1e-12


def test_signed_tomography_uses_true_sign_above_resolution():
    x = normalized(np.array([0.9, -0.4, 0.001, -0.001]))
    rng = np.random.default_rng(7)
    for _ in range(20):
        est = tomography_estimate(StatePreparation(x, 0.01), 20000, rng, signed=True)
        assert est[0] > 0 and est[1] < 0


def test_tomography_linf_contract():
    rng = np.random.default_rng(11)
    n, eps = 32, 0.05
    m = shots_for(n, eps)
    hits = 0
    for _ in range(100):
        x = normalized(rng.random(n) + 0.1)
        est = tomography_estimate(StatePreparation(x, 0.0), m, rng)
        hits += np.max(np.abs(est - x)) <= eps
    assert hits >= 95


def test_shots_for_examples():
    assert shots_for(round(math.e**2), 1.0) == math.ceil(36 * math.log(7))
    assert shots_for(64, 1e-2) == 1_497_198
    assert shots_for(256, 1e-2) == math.ceil(36 * math.log(256) * 1e4)


def test_shots_for_at_e_squared(monkeypatch):
    # n = e^2 is not an integer, so patch the log; ln(e^2) evaluates to 2.0000000000000004
    from qpisim import quantum

    monkeypatch.setattr(quantum, "SHOT_LOG", lambda n: math.log(math.e**2))
    assert quantum.shots_for(2, 1.0) == 72


def test_shots_for_validation():
    with pytest.raises(ValueError):
        shots_for(1, 0.1)
    with pytest.raises(ValueError):
        shots_for(10, 0.0)
