"""Deterministic experiment orchestration.

Every experiment is a pure function of its config: scenarios and initial
states come from explicit seeds, controllers are dispatched by name, and
traces are written as CSV with 17 significant digits so identical configs
produce identical bytes (also under parallel sweeps).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import baselines, dynamics, feasibility, network, online
from .control import RateSchedule
from .errors import ConfigInvalid, SteeringError

SCHEMA_VERSION = 1
CONTROLLERS = ("known-analytic", "adaptive-online", "gradient-baseline", "budget-optimal")


def fmt_float(v: float) -> str:
    """17 significant digits: round-trips every finite double."""
    return f"{float(v):.17g}"


def _fmt_cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def write_csv(path, header: list[str], rows) -> None:
    """Atomic CSV write with the library-wide float format."""
    tmp = f"{path}.tmp.{os.getpid()}.{threading.get_ident()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(v) for v in row) + "\n")
    os.replace(tmp, path)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass
class ExperimentConfig:
    """One run: scenario source, target, initial state, controller, limits."""

    scenario: dict
    target: float
    x0: dict
    controller: dict
    horizon: int = 300
    budget: float | None = None
    version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigInvalid("config must be a JSON object")
        if raw.get("version") != SCHEMA_VERSION:
            raise ConfigInvalid(f"version: expected {SCHEMA_VERSION}, got {raw.get('version')!r}")
        known = {"version", "scenario", "target", "x0", "controller", "horizon", "budget"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigInvalid(f"unknown config fields: {sorted(unknown)}")
        for req in ("scenario", "target", "x0", "controller"):
            if req not in raw:
                raise ConfigInvalid(f"{req}: required field missing")
        cfg = cls(
            scenario=raw["scenario"],
            target=float(raw["target"]),
            x0=raw["x0"],
            controller=raw["controller"],
            horizon=int(raw.get("horizon", 300)),
            budget=None if raw.get("budget") is None else float(raw["budget"]),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not 0.0 <= self.target <= 1.0:
            raise ConfigInvalid("target: must lie in [0, 1]")
        if self.horizon < 1:
            raise ConfigInvalid("horizon: must be at least 1")
        if self.budget is not None and self.budget < 0:
            raise ConfigInvalid("budget: must be nonnegative")
        kind = self.scenario.get("type")
        if kind == "random":
            for req in ("n", "density", "lambda_range", "h_range", "seed"):
                if req not in self.scenario:
                    raise ConfigInvalid(f"scenario.{req}: required for random scenarios")
        elif kind == "inline":
            for req in ("adjacency", "lambda", "h", "h_range"):
                if req not in self.scenario:
                    raise ConfigInvalid(f"scenario.{req}: required for inline scenarios")
        elif kind == "file":
            if "path" not in self.scenario:
                raise ConfigInvalid("scenario.path: required for file scenarios")
        else:
            raise ConfigInvalid(f"scenario.type: unknown kind {kind!r}")
        x0kind = self.x0.get("type")
        if x0kind == "random":
            if "seed" not in self.x0:
                raise ConfigInvalid("x0.seed: required for random initial states")
        elif x0kind == "explicit":
            if "values" not in self.x0:
                raise ConfigInvalid("x0.values: required for explicit initial states")
        else:
            raise ConfigInvalid(f"x0.type: unknown kind {x0kind!r}")
        ckind = self.controller.get("type")
        if ckind not in CONTROLLERS:
            raise ConfigInvalid(f"controller.type: must be one of {CONTROLLERS}, got {ckind!r}")
        if ckind == "budget-optimal" and self.budget is None:
            raise ConfigInvalid("budget: required by the budget-optimal controller")

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()

    @property
    def run_id(self) -> str:
        return self.config_hash[:12]


def load_network_file(path) -> network.Network:
    """Network from a JSON document with adjacency, lambda, h, h_range."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return _network_from_fields(doc, where=str(path))


def _network_from_fields(doc: dict, where: str) -> network.Network:
    for req in ("adjacency", "lambda", "h", "h_range"):
        if req not in doc:
            raise ConfigInvalid(f"{where}: missing network field {req!r}")
    graph = network.build_laplacian(np.asarray(doc["adjacency"], dtype=float))
    h_range = doc["h_range"]
    params = network.AgentParams(
        lam=np.asarray(doc["lambda"], dtype=float),
        h=np.asarray(doc["h"], dtype=float),
        h_min=float(h_range[0]),
        h_max=float(h_range[1]),
    )
    return network.make_network(graph, params)


def build_scenario(cfg: ExperimentConfig) -> network.Network:
    sc = cfg.scenario
    if sc["type"] == "random":
        graph, params = network.random_network(
            n=int(sc["n"]),
            density=float(sc["density"]),
            lambda_range=tuple(sc["lambda_range"]),
            h_range=tuple(sc["h_range"]),
            seed=int(sc["seed"]),
        )
        return network.make_network(graph, params)
    if sc["type"] == "inline":
        return _network_from_fields(sc, where="scenario")
    return load_network_file(sc["path"])


def build_x0(cfg: ExperimentConfig, n: int) -> np.ndarray:
    if cfg.x0["type"] == "explicit":
        x0 = np.asarray(cfg.x0["values"], dtype=float)
        if x0.shape != (n,):
            raise ConfigInvalid(f"x0.values: expected {n} entries, got {x0.shape}")
        if x0.min() < 0.0 or x0.max() > 1.0:
            raise ConfigInvalid("x0.values: must lie in [0, 1]")
        return x0
    rng = np.random.default_rng(int(cfg.x0["seed"]))
    return rng.uniform(0.0, 1.0, n)


@dataclass
class ExperimentRecord:
    """Result row for one run; trace paths are relative to the output dir."""

    run_id: str
    config_hash: str
    controller: str
    n_agents: int = 0
    final_err_inf: float = float("nan")
    total_cost: float = float("nan")
    steps: int = 0
    status: str = "ok"
    error: str = ""
    trajectory_csv: str = ""
    cycles_csv: str = ""
    estimator_csv: str = ""

    FIELDS = (
        "run_id", "config_hash", "controller", "n_agents", "final_err_inf",
        "total_cost", "steps", "status", "error", "trajectory_csv",
        "cycles_csv", "estimator_csv",
    )

    def row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


def _schedule_from_config(cfg: ExperimentConfig, net: network.Network, x0: np.ndarray) -> RateSchedule:
    ctrl = cfg.controller
    if "solve" in ctrl:
        eps = float(ctrl["solve"]["eps"])
        if cfg.budget is None:
            raise ConfigInvalid("budget: required to solve for a schedule")
        x0_err = float(np.abs(x0 - cfg.target).max())
        problem = feasibility.FeasibilityProblem(
            T=cfg.horizon,
            eps=eps,
            x0_err=x0_err,
            c_max=cfg.budget,
            s_weight=feasibility.cost_weight(net.params.h),
        )
        result = feasibility.solve_schedule(problem)
        if not result.feasible:
            raise ConfigInvalid(
                f"controller.solve: infeasible ({result.failed_condition})"
            )
        return result.schedule
    try:
        return RateSchedule(a=float(ctrl["a"]), b=float(ctrl["b"]))
    except KeyError as exc:
        raise ConfigInvalid(f"controller.{exc.args[0]}: required for known-analytic") from None


def _online_hyperparams(cfg: ExperimentConfig) -> online.OnlineHyperparams:
    ctrl = dict(cfg.controller)
    ctrl.pop("type")
    theta0 = ctrl.pop("theta0", None)
    if theta0 is not None:
        theta0 = np.asarray(theta0, dtype=float)
    try:
        return online.OnlineHyperparams(
            theta0=theta0,
            budget=cfg.budget,
            max_total_steps=ctrl.pop("max_total_steps", cfg.horizon),
            **ctrl,
        )
    except TypeError as exc:
        raise ConfigInvalid(f"controller: {exc}") from None


def run_experiment(config: ExperimentConfig | dict, out_dir) -> ExperimentRecord:
    """Execute one configured run and write its traces under out_dir."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    os.makedirs(out_dir, exist_ok=True)
    net = build_scenario(cfg)
    x0 = build_x0(cfg, net.n)
    kind = cfg.controller["type"]
    rec = ExperimentRecord(
        run_id=cfg.run_id, config_hash=cfg.config_hash, controller=kind, n_agents=net.n
    )

    cycles_rows = None
    est_rows = None
    if kind == "known-analytic":
        schedule = _schedule_from_config(cfg, net, x0)
        traj = dynamics.simulate_schedule(net, x0, cfg.target, schedule, cfg.horizon, cfg.budget)
    elif kind == "adaptive-online":
        result = online.run_online(net, x0, cfg.target, _online_hyperparams(cfg))
        traj = result.trajectory
        cycles_rows = [
            [c.m, c.steps_explore, c.steps_exploit, c.delta, c.alpha,
             c.r_value, c.err_inf, c.combined_error, c.cum_cost]
            for c in result.cycles
        ]
        est_rows = [
            [r.t, *r.theta_hat, r.pred_err_inf, r.r_value, r.pe_ok, r.kappa]
            for r in result.estimator_trace
        ]
    elif kind == "gradient-baseline":
        ctrl = dict(cfg.controller)
        ctrl.pop("type")
        bcfg = baselines.GradientControllerConfig(
            horizon=cfg.horizon,
            c_max=float("inf") if cfg.budget is None else cfg.budget,
            **ctrl,
        )
        traj = baselines.run_gradient_baseline(net, x0, cfg.target, bcfg)
    else:  # budget-optimal
        ctrl = dict(cfg.controller)
        ctrl.pop("type")
        traj = baselines.run_budget_optimal_baseline(
            net, x0, cfg.target, cfg.horizon, cfg.budget, **ctrl
        )

    traj_name = f"run_{cfg.run_id}_trajectory.csv"
    _write_trajectory(os.path.join(out_dir, traj_name), traj)
    rec.trajectory_csv = traj_name
    if cycles_rows is not None:
        name = f"run_{cfg.run_id}_cycles.csv"
        write_csv(
            os.path.join(out_dir, name),
            ["m", "phase_steps_explore", "phase_steps_exploit", "delta_m",
             "alpha_m", "R", "err_inf", "combined_error", "cum_cost"],
            cycles_rows,
        )
        rec.cycles_csv = name
    if est_rows is not None:
        name = f"run_{cfg.run_id}_estimator.csv"
        write_csv(
            os.path.join(out_dir, name),
            ["t"] + [f"theta_hat_{i + 1}" for i in range(net.n)]
            + ["pred_err_inf", "R", "pe_ok", "kappa"],
            est_rows,
        )
        rec.estimator_csv = name

    rec.final_err_inf = traj.final_error
    rec.total_cost = traj.total_cost
    rec.steps = traj.n_steps
    return rec


def _write_trajectory(path, traj: dynamics.Trajectory) -> None:
    n = traj.n_agents
    header = (
        ["t"] + [f"x_{i + 1}" for i in range(n)] + [f"u_{i + 1}" for i in range(n)]
        + ["step_cost", "cum_cost", "err_inf"]
    )
    costs = traj.step_costs
    cums = traj.cum_costs
    errs = traj.err_inf
    rows = []
    for t in range(traj.states.shape[0]):
        if t == 0:
            u_cols = [0.0] * n
            c, cc = 0.0, 0.0
        else:
            u_cols = list(traj.controls[t - 1])
            c, cc = float(costs[t - 1]), float(cums[t - 1])
        rows.append([t, *traj.states[t], *u_cols, c, cc, float(errs[t])])
    write_csv(path, header, rows)


def sweep(configs, out_dir, parallelism: int = 1) -> list[ExperimentRecord]:
    """Run every config, in parallel when asked; records keep input order
    and per-config failures become status='error' records."""

    def one(raw) -> ExperimentRecord:
        cfg = None
        try:
            cfg = raw if isinstance(raw, ExperimentConfig) else ExperimentConfig.from_dict(raw)
            return run_experiment(cfg, out_dir)
        except (SteeringError, OSError, ValueError) as exc:
            return ExperimentRecord(
                run_id=cfg.run_id if cfg else "",
                config_hash=cfg.config_hash if cfg else "",
                controller=cfg.controller.get("type", "?") if cfg else "?",
                status="error",
                error=f"{type(exc).__name__}: {exc}",
            )

    configs = list(configs)
    if parallelism <= 1 or len(configs) <= 1:
        return [one(c) for c in configs]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, configs))


def emit(records, path, format: str = "csv") -> None:
    """Write experiment records as CSV or aligned structured text."""
    if format == "csv":
        write_csv(path, list(ExperimentRecord.FIELDS), (r.row() for r in records))
        return
    if format != "text":
        raise ConfigInvalid(f"format: unknown emit format {format!r}")
    tmp = f"{path}.tmp.{os.getpid()}.{threading.get_ident()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in records:
            for name in ExperimentRecord.FIELDS:
                fh.write(f"{name}: {_fmt_cell(getattr(rec, name))}\n")
            fh.write("\n")
    os.replace(tmp, path)
