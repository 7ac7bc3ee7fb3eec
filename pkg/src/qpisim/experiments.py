"""Seeded experiment runs with CSV outputs.

A config is a flat ``key = value`` text file; ``#`` starts a comment.
Physical quantities carry their unit in the key name (``timestep_s``,
``gravity_m_s2``). Each seed writes ``run_<seed>.csv``; ``summary.csv``
aggregates them and ``meta.txt`` holds everything that differs between
otherwise identical runs (timestamp, wall-clock).
"""

from __future__ import annotations

import csv
import hashlib
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .blockencoding import (
    build_oracle_pair_P,
    build_oracle_pair_features,
    build_oracle_pair_projection,
    build_projection_pi,
    compute_cP,
    condition_number,
    encode_evaluation_matrix,
    encode_policy_transition,
    reconstruct_block,
    singular_values,
)
from .costs import COST_KINDS, COST_NOTE, CostModel, MissingParameterError, estimate_cost
from .environments import (
    PendulumParams,
    builtin_map,
    collect_samples,
    evaluate_balancing,
    frozenlake_to_mdp,
    load_map,
    read_samples,
    write_samples,
)
from .mdp import Policy, distance_metrics, solve_exact_q, value_iteration
from .qapi import STRATEGIES, QapiConfig, greedy_actions, improve_per_state, pendulum_features, run_qapi
from .qpi import QpiConfig, check_all_windows, check_theorem6, policy_hash, run_qpi

__all__ = [
    "COMMANDS",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "run_seed",
    "summarize",
    "run_experiment",
    "pendulum_scorer",
]

COMMANDS = ("run-qpi", "run-qapi", "verify-blockenc", "cost-report", "collect-samples")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


# key -> (parser, default)
def _float(v):
    return float(v)


def _int(v):
    return int(v)


def _bool(v):
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _shots(v):
    return "auto" if v.strip() == "auto" else int(v)


def _rounds(v):
    return "all" if v.strip() == "all" else int(v)


def _seeds(v):
    seeds = [int(s) for s in v.replace(" ", "").split(",") if s]
    if not seeds:
        raise ValueError("empty seed list")
    return seeds


_KEYS = {
    "seeds": (_seeds, [0]),
    "workers": (_int, 1),
    "gamma": (_float, 0.9),
    "epsilon": (_float, 1e-2),
    "shots": (_shots, "auto"),
    "max_iterations": (_int, 5),
    "map": (str, "4x4"),
    "rounds": (_rounds, 1000),
    "initial": (str, "uniform"),
    "optimal_tol": (_float, 1e-6),
    "early_stop": (_bool, False),
    "environment": (str, "pendulum"),
    "strategy": (str, "per_state"),
    "clip": (_float, 1e-3),
    "degree": (_int, 4),
    "samples": (_int, 5000),
    "samples_file": (str, ""),
    "fresh": (_bool, True),
    "evaluation": (str, "greedy"),
    "eval_episodes": (_int, 10),
    "eval_max_steps": (_int, 3000),
    "success_steps": (_float, 3000.0),
    "gravity_m_s2": (_float, 9.8),
    "pendulum_mass_kg": (_float, 2.0),
    "cart_mass_kg": (_float, 8.0),
    "length_m": (_float, 0.5),
    "timestep_s": (_float, 0.1),
    "noise_n": (_float, 10.0),
    "force_n": (_float, 50.0),
    "initial_band_rad": (_float, 0.2),
    "num_policies": (_int, 3),
    "num_features": (_int, 0),
    "num_states": (_int, 0),
    "num_actions": (_int, 0),
    "num_samples": (_int, 0),
    "omega": (_float, 2.373),
    "cost_shots": (_int, 0),
    "t_p": (_float, 1.0),
    "t_pi": (_float, 1.0),
    "t_p_pi": (_float, 0.0),
    "t_r": (_float, 1.0),
    "t_phi": (_float, 1.0),
    "t_phi_tilde": (_float, 1.0),
    "t_r_tilde": (_float, 1.0),
    "mu_p_pi": (_float, 0.0),
    "mu_phi": (_float, 0.0),
    "mu_phi_tilde": (_float, 0.0),
    "kappa_phi": (_float, 1.0),
    "kappa_phi_tilde": (_float, 1.0),
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    values: dict
    text: str = ""
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seeds(self) -> list:
        return self.values["seeds"]

    @property
    def digest(self) -> str:
        return hashlib.sha256(f"{self.command}\n{self.text}".encode()).hexdigest()

    def with_seeds(self, seeds) -> "ExperimentConfig":
        vals = dict(self.values)
        vals["seeds"] = list(seeds)
        return ExperimentConfig(self.command, vals, self.text + f"\n#seeds override {seeds}", self.base_dir)


def parse_config(text: str, command: str, base_dir=None) -> ExperimentConfig:
    """Parse and validate; every problem is reported as :class:`ConfigError`."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    values = {k: d for k, (_, d) in _KEYS.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", "expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(key, "unknown key")
        if key in seen:
            raise ConfigError(key, "given twice")
        seen.add(key)
        try:
            values[key] = _KEYS[key][0](val)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    cfg = ExperimentConfig(command, values, text, base)
    _validate(cfg)
    return cfg


def load_config(path, command: str) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, command, base_dir=path.parent)


def _validate(cfg: ExperimentConfig) -> None:
    v = cfg.values
    if not 0 <= v["gamma"] < 1:
        raise ConfigError("gamma", "must lie in [0, 1)")
    if not 0 < v["epsilon"] < 1:
        raise ConfigError("epsilon", "must lie in (0, 1)")
    if v["workers"] < 1:
        raise ConfigError("workers", "must be at least 1")
    if v["max_iterations"] < 0:
        raise ConfigError("max_iterations", "must be non-negative")
    if v["shots"] != "auto" and v["shots"] < 1:
        raise ConfigError("shots", "must be at least 1 or auto")
    if cfg.command in ("run-qpi", "verify-blockenc") or (cfg.command == "run-qapi" and v["environment"] == "frozenlake"):
        _map_spec(cfg)
    if cfg.command == "run-qpi" and v["initial"] not in ("uniform", "random"):
        raise ConfigError("initial", "must be uniform or random")
    if cfg.command == "run-qapi":
        if v["environment"] not in ("pendulum", "frozenlake"):
            raise ConfigError("environment", "must be pendulum or frozenlake")
        if v["strategy"] not in STRATEGIES:
            raise ConfigError("strategy", f"must be one of {', '.join(STRATEGIES)}")
        if not 0 < v["clip"] < 1:
            raise ConfigError("clip", "must lie in (0, 1)")
        if v["evaluation"] not in ("greedy", "measured"):
            raise ConfigError("evaluation", "must be greedy or measured")
        if v["degree"] < 1:
            raise ConfigError("degree", "must be at least 1")
        if v["samples_file"] and not _resolve(cfg, v["samples_file"]).is_file():
            raise ConfigError("samples_file", f"file not found: {v['samples_file']}")
    if cfg.command in ("run-qapi", "collect-samples"):
        if v["samples"] < 1:
            raise ConfigError("samples", "must be at least 1")
        try:
            _pendulum_params(cfg)
        except ValueError as exc:
            raise ConfigError("pendulum", str(exc)) from None
    if cfg.command == "verify-blockenc" and v["num_policies"] < 1:
        raise ConfigError("num_policies", "must be at least 1")
    if cfg.command == "cost-report":
        for key in ("num_states", "num_actions"):
            if v[key] < 1:
                raise ConfigError(key, "is required and must be positive")


def _resolve(cfg, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else cfg.base_dir / p


def _map_spec(cfg):
    name = cfg["map"]
    path = _resolve(cfg, name)
    if path.is_file():
        try:
            return load_map(path)
        except ValueError as exc:
            raise ConfigError("map", str(exc)) from None
    try:
        return builtin_map(name)
    except (KeyError, ValueError):
        raise ConfigError("map", f"not a file or built-in map: {name}") from None


def _pendulum_params(cfg) -> PendulumParams:
    v = cfg.values
    f = v["force_n"]
    return PendulumParams(
        gravity=v["gravity_m_s2"],
        pendulum_mass=v["pendulum_mass_kg"],
        cart_mass=v["cart_mass_kg"],
        length=v["length_m"],
        timestep=v["timestep_s"],
        noise=v["noise_n"],
        forces=(-f, 0.0, f),
        initial_band=v["initial_band_rad"],
    )


def pendulum_scorer(params: PendulumParams, features, mode: str, episodes: int, max_steps: int, seed: int, shots: int = 100):
    """Balancing score of the policy defined by a weight state.

    ``greedy`` acts by ``argmax_a Phi(s) w`` for one noisy draw of ``w``;
    ``measured`` samples ``shots`` actions at every visited state.
    """

    def score(prep, rng):
        if mode == "greedy":
            w = prep.prepare(rng)
            policy = lambda s: greedy_actions(w, features.per_state(s))  # noqa: E731
        else:
            policy = lambda s: improve_per_state(prep, features.per_state(s), shots, rng)  # noqa: E731
        return evaluate_balancing(params, policy, episodes, max_steps, seed)

    return score


def _num(x):
    """CSV cell: ints and finite floats stay numeric, anything else is quoted text."""
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return "" if x is None else str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_NONNUMERIC, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(row.get(h)) for h in header])


# per-seed runners return (per-iteration rows, seed summary dict)


def _run_qpi_seed(cfg, seed):
    v = cfg.values
    mdp = frozenlake_to_mdp(_map_spec(cfg), v["gamma"])
    q_star, _ = value_iteration(mdp)
    qcfg = QpiConfig(
        epsilon=v["epsilon"],
        shots=v["shots"],
        max_iterations=v["max_iterations"],
        seed=seed,
        rounds=v["rounds"],
        early_stop=v["early_stop"],
        initial=v["initial"],
        optimal_tol=v["optimal_tol"],
    )
    trace = run_qpi(mdp, qcfg, q_star=q_star)
    rows = []
    for i, rec in enumerate(trace.records):
        chk = check_theorem6(trace, mdp, 1, start=i)
        rows.append(
            {
                "iteration": rec.iteration,
                "policy_hash": policy_hash(rec.policy),
                "next_policy_hash": policy_hash(rec.next_policy),
                "tomography_error": rec.tomography_error,
                "rho_gap": rec.rho_gap,
                "next_sup_gap": rec.next_sup_gap,
                "next_optimal": rec.next_sup_gap <= v["optimal_tol"],
                "theorem6_lhs": chk.lhs,
                "theorem6_rhs": chk.rhs,
                "theorem6_holds": chk.holds,
                "theorem6_vacuous": chk.vacuous,
            }
        )
    windows = check_all_windows(trace, mdp) if trace.records else []
    conv = trace.converged_iteration(v["optimal_tol"])
    summary = {
        "convergence_iteration": conv,
        "success": conv is not None,
        "iterations": len(trace.records),
        "shots": trace.shots,
        "max_tomography_error": max((r.tomography_error for r in trace.records), default=0.0),
        "theorem6_windows": len(windows),
        "theorem6_holds_rate": (sum(c.holds for c in windows) / len(windows)) if windows else 1.0,
        "theorem6_vacuous_windows": sum(c.vacuous for c in windows),
        "final_policy_hash": policy_hash(trace.final_policy),
    }
    return rows, summary


QPI_COLUMNS = [
    "iteration",
    "policy_hash",
    "next_policy_hash",
    "tomography_error",
    "rho_gap",
    "next_sup_gap",
    "next_optimal",
    "theorem6_lhs",
    "theorem6_rhs",
    "theorem6_holds",
    "theorem6_vacuous",
]


def _load_source(cfg, seed):
    v = cfg.values
    if v["samples_file"]:
        return read_samples(_resolve(cfg, v["samples_file"]))
    return collect_samples(_pendulum_params(cfg), v["samples"], seed)


def _run_qapi_seed(cfg, seed):
    v = cfg.values
    shots = 100 if v["shots"] == "auto" else v["shots"]
    qcfg = QapiConfig(
        epsilon=v["epsilon"],
        shots=shots,
        max_iterations=v["max_iterations"],
        seed=seed,
        strategy=v["strategy"],
        clip=v["clip"],
        fresh=v["fresh"],
        early_stop=v["early_stop"],
    )
    rows = []
    if v["environment"] == "pendulum":
        params = _pendulum_params(cfg)
        feats = pendulum_features(v["degree"], params.num_actions)
        source = _load_source(cfg, seed)
        scorer = pendulum_scorer(params, feats, v["evaluation"], v["eval_episodes"], v["eval_max_steps"], seed + 1_000_003, shots)
        trace = run_qapi(source, feats, qcfg, discount=v["gamma"], evaluate=scorer)
        success_iter = next((r.iteration for r in trace.records if r.score >= v["success_steps"]), None)
        for r in trace.records:
            rows.append(
                {
                    "iteration": r.iteration,
                    "actions_hash": r.actions_hash,
                    "changed_actions": r.changed,
                    "mean_episode_length": r.score,
                    "success": r.score >= v["success_steps"],
                }
            )
        summary = {
            "convergence_iteration": success_iter,
            "success": success_iter is not None,
            "iterations": len(trace.records),
            "best_episode_length": max((r.score for r in trace.records), default=0.0),
            "final_actions_hash": trace.records[-1].actions_hash if trace.records else "",
        }
    else:
        mdp = frozenlake_to_mdp(_map_spec(cfg), v["gamma"])
        q_star, _ = value_iteration(mdp)
        Phi = np.eye(mdp.num_pairs)
        trace = run_qapi(mdp, Phi, qcfg)
        conv = None
        for r in trace.records:
            pol = Policy.deterministic(r.next_actions, mdp.num_actions)
            gap = distance_metrics(solve_exact_q(mdp, pol), q_star)[0]
            ok = gap <= v["optimal_tol"]
            if ok and conv is None:
                conv = r.iteration
            rows.append(
                {
                    "iteration": r.iteration,
                    "actions_hash": r.actions_hash,
                    "changed_actions": r.changed,
                    "next_sup_gap": gap,
                    "success": ok,
                }
            )
        summary = {
            "convergence_iteration": conv,
            "success": conv is not None,
            "iterations": len(trace.records),
            "final_actions_hash": trace.records[-1].actions_hash if trace.records else "",
        }
    return rows, summary


def _run_blockenc_seed(cfg, seed):
    v = cfg.values
    mdp = frozenlake_to_mdp(_map_spec(cfg), v["gamma"])
    rng = np.random.default_rng(seed)
    S, A = mdp.num_states, mdp.num_actions
    rows = []
    c_p = compute_cP(mdp)
    pair = build_oracle_pair_P(mdp)
    rep = reconstruct_block(pair, mdp.transition_matrix())
    rows.append({"construction": "P", "policy": "", "mu": rep.mu, "reconstruction_error": rep.reconstruction_error, "isometry_error": pair.isometry_error(), "kappa": rep.kappa})
    Phi = np.eye(mdp.num_pairs)
    fpair = build_oracle_pair_features(Phi)
    frep = reconstruct_block(fpair, Phi)
    rows.append({"construction": "Phi_tabular", "policy": "", "mu": frep.mu, "reconstruction_error": frep.reconstruction_error, "isometry_error": fpair.isometry_error(), "kappa": frep.kappa})
    mus = []
    for i in range(v["num_policies"]):
        pol = Policy(rng.dirichlet(np.ones(A), size=S))
        tag = policy_hash(pol)
        ppair = build_oracle_pair_projection(pol, S, A)
        prep_ = reconstruct_block(ppair, build_projection_pi(pol, S, A))
        rows.append({"construction": "Pi", "policy": tag, "mu": prep_.mu, "reconstruction_error": prep_.reconstruction_error, "isometry_error": ppair.isometry_error(), "kappa": prep_.kappa})
        e = encode_policy_transition(mdp, pol)
        mus.append(e.fitted_mu)
        rows.append({"construction": "P_pi", "policy": tag, "mu": e.mu, "fitted_mu": e.fitted_mu, "reconstruction_error": e.reconstruction_error, "kappa": e.kappa})
        ev = encode_evaluation_matrix(mdp, pol)
        s = singular_values(ev.matrix)
        rows.append(
            {
                "construction": "I_minus_gamma_P_pi",
                "policy": tag,
                "mu": ev.mu,
                "reconstruction_error": ev.reconstruction_error,
                "kappa": condition_number(ev.matrix),
                "sigma_min": s[-1],
                "sigma_max": s[0],
            }
        )
    max_err = max(r["reconstruction_error"] for r in rows)
    spread = max(mus) - min(mus)
    summary = {
        "c_P": c_p,
        "max_reconstruction_error": max_err,
        "mu_P_pi_spread": spread,
        "success": max_err <= 1e-10 and spread <= 1e-9,
    }
    return rows, summary


BLOCKENC_COLUMNS = ["construction", "policy", "mu", "fitted_mu", "reconstruction_error", "isometry_error", "kappa", "sigma_min", "sigma_max"]


def _run_collect_seed(cfg, seed, out_dir):
    source = collect_samples(_pendulum_params(cfg), cfg["samples"], seed)
    path = out_dir / f"samples_{seed}.txt"
    write_samples(source, path)
    rows = [{"sample_file": path.name, "samples": len(source), "terminal": int(source.terminal.sum())}]
    return rows, {"samples": len(source), "terminal": int(source.terminal.sum()), "success": True}


def run_seed(cfg: ExperimentConfig, seed: int, out_dir) -> dict:
    """Run one seed, write ``run_<seed>.csv`` and return its summary row."""
    out_dir = Path(out_dir)
    t0 = time.perf_counter()
    try:
        if cfg.command == "run-qpi":
            rows, summary = _run_qpi_seed(cfg, seed)
            cols = QPI_COLUMNS
        elif cfg.command == "run-qapi":
            rows, summary = _run_qapi_seed(cfg, seed)
            cols = list(rows[0].keys()) if rows else ["iteration"]
        elif cfg.command == "verify-blockenc":
            rows, summary = _run_blockenc_seed(cfg, seed)
            cols = BLOCKENC_COLUMNS
        elif cfg.command == "collect-samples":
            rows, summary = _run_collect_seed(cfg, seed, out_dir)
            cols = ["sample_file", "samples", "terminal"]
        else:
            raise ValueError(f"{cfg.command} has no per-seed run")
        _write_csv(out_dir / f"run_{seed}.csv", cols, rows)
        summary = {"seed": seed, "status": "ok", **summary}
    except Exception as exc:  # per-seed failures are recorded, the batch continues
        summary = {"seed": seed, "status": f"error: {type(exc).__name__}: {exc}", "success": False}
    summary["_wall_clock_s"] = time.perf_counter() - t0
    return summary


def summarize(records) -> dict:
    """Aggregate row over per-seed summaries."""
    records = list(records)
    if not records:
        raise ValueError("nothing to summarize")
    out = {"seed": "all", "status": "ok" if all(r.get("status") == "ok" for r in records) else "partial"}
    conv = [r["convergence_iteration"] for r in records if r.get("convergence_iteration") is not None]
    if any("convergence_iteration" in r for r in records):
        out["convergence_iteration"] = statistics.median(conv) if conv else None
    succ = [bool(r.get("success")) for r in records]
    out["success"] = sum(succ)
    out["success_rate"] = sum(succ) / len(succ)
    for key in ("max_tomography_error", "max_reconstruction_error", "mu_P_pi_spread", "best_episode_length"):
        vals = [r[key] for r in records if r.get(key) is not None]
        if vals:
            out[key] = max(vals)
    windows = sum(r.get("theorem6_windows", 0) for r in records)
    if windows:
        held = sum(r["theorem6_holds_rate"] * r["theorem6_windows"] for r in records if r.get("theorem6_windows"))
        out["theorem6_windows"] = windows
        out["theorem6_holds_rate"] = held / windows
        out["theorem6_vacuous_windows"] = sum(r.get("theorem6_vacuous_windows", 0) for r in records)
    return out


def _cost_report(cfg: ExperimentConfig, out_dir: Path) -> dict:
    v = cfg.values
    S, A = v["num_states"], v["num_actions"]
    gamma = v["gamma"]
    opt = lambda key: v[key] if v[key] > 0 else None  # noqa: E731
    K = opt("num_features")
    model = CostModel(
        gamma=gamma,
        epsilon=v["epsilon"],
        num_states=S,
        num_actions=A,
        num_features=K,
        num_samples=opt("num_samples"),
        omega=v["omega"],
        shots=opt("cost_shots"),
        t_p=v["t_p"],
        t_pi=v["t_pi"],
        t_p_pi=opt("t_p_pi"),
        t_r=v["t_r"],
        t_phi=v["t_phi"],
        t_phi_tilde=v["t_phi_tilde"],
        t_r_tilde=v["t_r_tilde"],
        mu_p_pi=opt("mu_p_pi") or 2.0,
        mu_phi=opt("mu_phi") or (math.sqrt(K) if K else None),
        mu_phi_tilde=opt("mu_phi_tilde") or (math.sqrt(K) if K else None),
        kappa_phi=v["kappa_phi"],
        kappa_phi_tilde=v["kappa_phi_tilde"],
    )
    lines = [f"note = {COST_NOTE}"]
    row = {"num_states": S, "num_actions": A, "gamma": gamma, "epsilon": v["epsilon"], "omega": v["omega"]}
    for kind in COST_KINDS:
        try:
            val = estimate_cost(model, kind)
        except MissingParameterError as exc:
            val = None
            lines.append(f"{kind} = unavailable ({exc})")
        else:
            lines.append(f"{kind} = {val!r}")
        row[kind] = val
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_csv(out_dir / "summary.csv", list(row.keys()), [row])
    return row


def _write_meta(out_dir: Path, cfg: ExperimentConfig, wall: dict) -> None:
    lines = [
        f"version = {__version__}",
        f"command = {cfg.command}",
        f"timestamp = {datetime.now(timezone.utc).isoformat(timespec='seconds')}",
        f"config_sha256 = {cfg.digest}",
        f"seeds = {','.join(str(s) for s in cfg.seeds)}",
    ]
    lines += [f"wall_clock_s.{k} = {t:.3f}" for k, t in wall.items()]
    (out_dir / "meta.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_experiment(cfg: ExperimentConfig, out_dir) -> tuple:
    """Run every seed, then write ``summary.csv`` and ``meta.txt``.

    Returns ``(exit_status, summary_rows)``; the status is 1 when any seed
    failed and 0 otherwise.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if cfg.command == "cost-report":
        row = _cost_report(cfg, out_dir)
        _write_meta(out_dir, cfg, {"total": time.perf_counter() - t0})
        return 0, [row]
    if cfg["workers"] > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            records = list(pool.map(run_seed, [cfg] * len(cfg.seeds), cfg.seeds, [out_dir] * len(cfg.seeds)))
    else:
        records = [run_seed(cfg, s, out_dir) for s in cfg.seeds]
    wall = {str(r["seed"]): r.pop("_wall_clock_s") for r in records}
    agg = summarize(records)
    rows = records + [agg]
    header = []
    for r in rows:
        header += [k for k in r if k not in header]
    _write_csv(out_dir / "summary.csv", header, rows)
    wall["total"] = time.perf_counter() - t0
    _write_meta(out_dir, cfg, wall)
    status = 0 if all(r.get("status") == "ok" for r in records) else 1
    return status, rows
