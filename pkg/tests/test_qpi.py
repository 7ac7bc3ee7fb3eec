import math

import numpy as np
import pytest

from conftest import random_mdp
from qpisim.mdp import Mdp, Policy, normalized, solve_exact_q, value_iteration
from qpisim.qpi import (
    QpiConfig,
    check_all_windows,
    check_theorem6,
    policy_hash,
    qpi_evaluate,
    qpi_improve,
    run_qpi,
)
from qpisim.quantum import measure_state


def test_evaluate_with_vanishing_noise(lake4):
    pol = Policy.uniform(16, 4)
    q = qpi_evaluate(lake4, pol, 1e-12, np.random.default_rng(0))
    assert np.max(np.abs(q - normalized(solve_exact_q(lake4, pol)))) <= 1e-10


def test_evaluate_within_epsilon(lake4):
    rng = np.random.default_rng(1)
    pol = Policy.uniform(16, 4)
    exact = normalized(solve_exact_q(lake4, pol))
    for _ in range(50):
        assert np.linalg.norm(qpi_evaluate(lake4, pol, 1e-2, rng) - exact) <= 1e-2


def test_evaluate_gamma_zero():
    rng = np.random.default_rng(2)
    mdp = random_mdp(rng, 4, 2, 0.0)
    q = qpi_evaluate(mdp, Policy.uniform(4, 2), 0.05, rng)
    assert np.linalg.norm(q - normalized(mdp.reward_vector)) <= 0.05


def test_improve_picks_histogram_argmax():
    counts = np.array([0, 9, 1, 7, 0, 0])
    assert qpi_improve(counts, 2, 3).actions.tolist() == [1, 0]


def test_improve_ties_and_empty_rows():
    prev = Policy.deterministic([2, 1], 3)
    counts = np.array([4, 4, 0, 0, 0, 0])
    assert qpi_improve(counts, 2, 3, previous=prev).actions.tolist() == [0, 1]


def test_improve_from_large_sample_matches_greedy(lake4):
    q_star, pi_star = value_iteration(lake4)
    counts = measure_state(normalized(q_star), 10**7, np.random.default_rng(3))
    pol = qpi_improve(counts, 16, 4)
    table = q_star.reshape(16, 4)
    for s in range(16):
        top = np.sort(table[s])
        if top[-1] > 0.05 and top[-1] - top[-2] > 1e-3:
            assert pol.actions[s] == pi_star.actions[s]


def test_single_iteration_trace(lake4):
    trace = run_qpi(lake4, QpiConfig(max_iterations=1, shots=5000, seed=0))
    assert len(trace.records) == 1
    assert trace.shots == 5000


def test_zero_iterations_keeps_initial(lake4):
    trace = run_qpi(lake4, QpiConfig(max_iterations=0, shots=10))
    assert trace.records == [] and trace.final_policy.same_as(trace.initial)


def test_trace_quantities_are_consistent(lake4):
    trace = run_qpi(lake4, QpiConfig(max_iterations=3, shots=20000, seed=4, early_stop=False))
    assert len(trace.records) == 3
    for rec in trace.records:
        assert abs(np.linalg.norm(rec.q_hat) - 1) <= 1e-9
        assert rec.counts.sum() == 20000
        assert rec.tomography_error == pytest.approx(np.max(np.abs(rec.q_hat - normalized(rec.q_exact))))


def test_runs_are_deterministic(lake4):
    cfg = QpiConfig(max_iterations=2, shots=10000, seed=7)
    a, b = run_qpi(lake4, cfg), run_qpi(lake4, cfg)
    assert [policy_hash(r.next_policy) for r in a.records] == [policy_hash(r.next_policy) for r in b.records]
    assert all(np.array_equal(x.counts, y.counts) for x, y in zip(a.records, b.records))


def test_faithful_rounds_on_small_problem():
    rng = np.random.default_rng(5)
    mdp = random_mdp(rng, 3, 2, 0.5)
    trace = run_qpi(mdp, QpiConfig(max_iterations=3, shots=3000, rounds="all", seed=1))
    q_star, _ = value_iteration(mdp)
    assert np.max(np.abs(solve_exact_q(mdp, trace.final_policy) - q_star)) <= 1e-6


def test_theorem6_arithmetic(lake4):
    trace = run_qpi(lake4, QpiConfig(max_iterations=2, shots=20000, seed=0, early_stop=False))
    chk = check_theorem6(trace, lake4, 2)
    tomo = max(r.tomography_error for r in trace.records)
    assert chk.rhs == pytest.approx(2 * math.sqrt(2) * 0.9 * 100 * tomo)
    assert chk.lhs == pytest.approx(max(r.rho_gap for r in trace.records))
    assert chk.vacuous == (chk.rhs >= 2 / 8)


def test_theorem6_holds_on_converged_window(lake4):
    trace = run_qpi(lake4, QpiConfig(max_iterations=4, seed=0, early_stop=False))
    chk = check_theorem6(trace, lake4, 1)
    assert chk.lhs <= 1e-12 and chk.holds


def test_theorem6_every_window(lake4):
    trace = run_qpi(lake4, QpiConfig(max_iterations=3, seed=2, early_stop=False))
    checks = check_all_windows(trace, lake4)
    assert len(checks) == 6
    assert all(c.holds for c in checks)


def test_theorem6_window_validation(lake4):
    trace = run_qpi(lake4, QpiConfig(max_iterations=1, shots=100))
    with pytest.raises(ValueError):
        check_theorem6(trace, lake4, 2)


def test_config_validation():
    with pytest.raises(ValueError):
        QpiConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        QpiConfig(initial="greedy")
    assert QpiConfig(shots="auto").resolved_shots(64) == 1_497_198
