from .frozenlake import (
    ACTIONS,
    FrozenLakeSpec,
    MapParseError,
    builtin_map,
    frozenlake_to_mdp,
    generate_diagonal_map,
    load_map,
    parse_map,
    reachable_from,
)
from .pendulum import (
    PendulumParams,
    SampleSource,
    collect_samples,
    evaluate_balancing,
    pendulum_acceleration,
    pendulum_step,
    preprocess_states,
    read_samples,
    write_samples,
)
