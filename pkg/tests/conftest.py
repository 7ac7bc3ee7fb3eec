import numpy as np
import pytest
from hypothesis import strategies as st

from qpisim.environments import builtin_map, frozenlake_to_mdp
from qpisim.mdp import Mdp, Policy


def random_mdp(rng, num_states, num_actions, discount):
    P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    R = rng.random((num_states, num_actions))
    return Mdp(P, R, discount)


def random_policy(rng, num_states, num_actions):
    return Policy(rng.dirichlet(np.ones(num_actions), size=num_states))


@st.composite
def mdps(draw, max_states=6, max_actions=3):
    seed = draw(st.integers(0, 2**32 - 1))
    S = draw(st.integers(1, max_states))
    A = draw(st.integers(1, max_actions))
    gamma = draw(st.floats(0.0, 0.99))
    rng = np.random.default_rng(seed)
    return random_mdp(rng, S, A, gamma), random_policy(rng, S, A), rng


@pytest.fixture(scope="session")
def lake4():
    return frozenlake_to_mdp(builtin_map("4x4"), 0.9)


@pytest.fixture(scope="session")
def lake8():
    return frozenlake_to_mdp(builtin_map("diagonal8"), 0.9)
