"""Asymptotic cost formulas evaluated with constants dropped.

``polylog(x)`` is evaluated as ``ln(x)``. The numbers are meant for comparing
curves between settings; they are not running times, and none of the
speedups they suggest can be measured by a classical simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

__all__ = ["CostModel", "MissingParameterError", "estimate_cost", "COST_KINDS", "COST_NOTE"]

COST_KINDS = ("theorem5", "theorem7", "theorem8", "classical_pi", "classical_lspi")
COST_NOTE = "formula evaluation only; constants dropped, polylog(x) = ln(x); not an empirical runtime"


class MissingParameterError(ValueError):
    def __init__(self, which: str, names):
        super().__init__(f"{which} needs parameter(s): {', '.join(names)}")
        self.names = tuple(names)


@dataclass(frozen=True)
class CostModel:
    """Oracle costs and problem parameters; ``None`` means unset."""

    gamma: float | None = None
    epsilon: float | None = None
    num_states: int | None = None
    num_actions: int | None = None
    num_features: int | None = None
    num_samples: int | None = None
    bits: int | None = None
    omega: float | None = None
    shots: int | None = None
    t_p: float | None = None
    t_pi: float | None = None
    t_p_pi: float | None = None
    t_r: float | None = None
    t_phi: float | None = None
    t_phi_tilde: float | None = None
    t_r_tilde: float | None = None
    mu_p_pi: float | None = None
    mu_phi: float | None = None
    mu_phi_tilde: float | None = None
    kappa_phi: float | None = None
    kappa_phi_tilde: float | None = None

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name == "gamma":
                if not 0 <= v < 1:
                    raise ValueError("gamma must lie in [0, 1)")
            elif v <= 0:
                raise ValueError(f"{f.name} must be positive")

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.gamma)


def _need(model, which, names):
    missing = [n for n in names if getattr(model, n) is None]
    if missing:
        raise MissingParameterError(which, missing)


def _t_p_pi(model, which):
    """Cost of the ``P^pi`` encoding: given directly, else ``T_P + T_pi``."""
    if model.t_p_pi is not None:
        return model.t_p_pi
    _need(model, which, ["t_p", "t_pi"])
    return model.t_p + model.t_pi


def _polylog(x: float) -> float:
    return math.log(x)


def estimate_cost(model: CostModel, which: str) -> float:
    if which == "theorem5":
        _need(model, which, ["gamma", "epsilon", "mu_p_pi", "t_r"])
        G = model.horizon
        return (model.mu_p_pi * _t_p_pi(model, which) + model.t_r) * G * _polylog(G / model.epsilon)
    if which == "theorem7":
        _need(model, which, ["gamma", "epsilon", "mu_p_pi", "mu_phi", "kappa_phi", "t_phi", "t_r"])
        G, k, mphi = model.horizon, model.kappa_phi, model.mu_phi
        t_ppi = _t_p_pi(model, which)
        inner = mphi**2 * model.mu_p_pi * (model.t_phi + t_ppi) + k * (mphi * model.t_phi + model.t_r)
        return k**2 * inner * G * _polylog(k * G / model.epsilon)
    if which == "theorem8":
        _need(model, which, ["gamma", "epsilon", "mu_phi_tilde", "kappa_phi_tilde", "t_phi_tilde", "t_r_tilde"])
        G, k, m, t = model.horizon, model.kappa_phi_tilde, model.mu_phi_tilde, model.t_phi_tilde
        inner = m**2 * t + k * m * t + k * model.t_r_tilde
        return k**2 * inner * G * _polylog(k * G / model.epsilon)
    if which == "classical_pi":
        _need(model, which, ["num_states", "num_actions", "omega"])
        return float(model.num_states * model.num_actions) ** model.omega
    if which == "classical_lspi":
        _need(model, which, ["num_states", "num_actions", "num_features", "omega"])
        K = float(model.num_features)
        return model.num_states * model.num_actions * K**2 + K**model.omega
    raise ValueError(f"unknown cost kind {which!r}; expected one of {', '.join(COST_KINDS)}")
