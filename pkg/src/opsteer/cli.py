"""Command-line interface.

One verb per capability: simulate (known-analytic dynamics run),
feasibility (closed-form certificate), estimate (identification-only
session), online (two-phase adaptive run), baseline (comparison
controllers), sweep (batch of runs, optionally parallel).

Exit codes: 0 success, 1 config error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import feasibility, harness, online
from .errors import ConfigInvalid, NumericFailure, SteeringError


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from None


def _apply_seed_override(raw: dict, seed: int | None) -> dict:
    if seed is None:
        return raw
    raw = json.loads(json.dumps(raw))  # deep copy
    scenario = raw.get("scenario")
    if isinstance(scenario, dict) and "seed" in scenario:
        scenario["seed"] = seed
    x0 = raw.get("x0")
    if isinstance(x0, dict) and "seed" in x0:
        x0["seed"] = seed
    return raw


def _cmd_run(args, expected: tuple[str, ...]) -> int:
    raw = _apply_seed_override(_load_config(args.config), args.seed)
    cfg = harness.ExperimentConfig.from_dict(raw)
    kind = cfg.controller.get("type")
    if kind not in expected:
        raise ConfigInvalid(
            f"controller.type: this subcommand accepts {expected}, got {kind!r}"
        )
    rec = harness.run_experiment(cfg, args.out)
    harness.emit([rec], f"{args.out}/run_{rec.run_id}_record.csv")
    print(
        f"run {rec.run_id}: controller={rec.controller} n={rec.n_agents} "
        f"steps={rec.steps} final_err_inf={harness.fmt_float(rec.final_err_inf)} "
        f"total_cost={harness.fmt_float(rec.total_cost)}"
    )
    return 0


def _cmd_feasibility(args) -> int:
    raw = _load_config(args.config)
    spec = raw.get("feasibility")
    if not isinstance(spec, dict):
        raise ConfigInvalid("feasibility: required section missing")
    if "h" in spec:
        s_weight = feasibility.cost_weight(np.asarray(spec["h"], dtype=float))
    elif "s_weight" in spec:
        s_weight = float(spec["s_weight"])
    else:
        raise ConfigInvalid("feasibility.s_weight or feasibility.h: one is required")
    try:
        problem = feasibility.FeasibilityProblem(
            T=int(spec["T"]),
            eps=float(spec["eps"]),
            x0_err=float(spec["x0_err"]),
            c_max=float(spec["c_max"]),
            s_weight=s_weight,
        )
    except KeyError as exc:
        raise ConfigInvalid(f"feasibility.{exc.args[0]}: required field missing") from None
    result = feasibility.solve_schedule(problem)
    print(f"feasible: {'yes' if result.feasible else 'no'}")
    print(f"budget_bound: {harness.fmt_float(result.budget_bound)}")
    print(f"accuracy_bound: {harness.fmt_float(result.accuracy_bound)}")
    if result.feasible:
        print(f"a: {harness.fmt_float(result.schedule.a)}")
        print(f"b: {harness.fmt_float(result.schedule.b)}")
        print(f"bilinear: {harness.fmt_float(result.bilinear)}")
        print(
            "error_bound: "
            f"{harness.fmt_float(feasibility.error_bound(result.schedule, problem.T, problem.x0_err))}"
        )
        print(
            "cost: "
            f"{harness.fmt_float(feasibility.cost_of_schedule(result.schedule, problem.T, s_weight))}"
        )
    else:
        print(f"failed_condition: {result.failed_condition}")
    return 0


def _cmd_estimate(args) -> int:
    raw = _apply_seed_override(_load_config(args.config), args.seed)
    spec = raw.pop("estimate", None)
    if not isinstance(spec, dict):
        raise ConfigInvalid("estimate: required section missing")
    raw.setdefault("controller", {"type": "adaptive-online"})
    cfg = harness.ExperimentConfig.from_dict(raw)
    net = harness.build_scenario(cfg)
    x0 = harness.build_x0(cfg, net.n)
    try:
        run = online.run_estimation(
            net,
            x0,
            cfg.target,
            alpha=float(spec["alpha"]),
            steps=int(spec["steps"]),
            psi=spec.get("psi"),
            theta0=None if spec.get("theta0") is None else np.asarray(spec["theta0"], dtype=float),
        )
    except KeyError as exc:
        raise ConfigInvalid(f"estimate.{exc.args[0]}: required field missing") from None
    name = f"{args.out}/estimate_{cfg.run_id}.csv"
    harness.write_csv(
        name,
        ["t"] + [f"theta_hat_{i + 1}" for i in range(net.n)]
        + ["pred_err_inf", "R", "pe_ok", "kappa"],
        ([r.t, *r.theta_hat, r.pred_err_inf, r.r_value, r.pe_ok, r.kappa] for r in run.trace),
    )
    theta = ",".join(harness.fmt_float(v) for v in run.estimator.theta_hat)
    print(f"steps: {len(run.trace)}")
    print(f"theta_hat: {theta}")
    print(f"kappa: {harness.fmt_float(run.kappa)}")
    print(f"trace: {name}")
    return 0


def _cmd_sweep(args) -> int:
    raw = _load_config(args.config)
    runs = raw.get("runs")
    if not isinstance(runs, list):
        raise ConfigInvalid("runs: sweep config needs a list of run configs")
    if args.seed is not None:
        runs = [_apply_seed_override(r, args.seed) for r in runs]
    parallelism = args.parallelism or int(raw.get("parallelism", 1))
    records = harness.sweep(runs, args.out, parallelism=parallelism)
    out = f"{args.out}/sweep_records.csv"
    harness.emit(records, out)
    failures = sum(1 for r in records if r.status != "ok")
    print(f"{len(records)} runs, {failures} failed, records: {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opsteer",
        description="Budgeted opinion steering with online susceptibility estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "run the known-parameter analytic controller"),
        ("feasibility", "solve the accuracy-vs-budget certificate"),
        ("estimate", "run an identification-only excitation session"),
        ("online", "run the two-phase adaptive controller"),
        ("baseline", "run a comparison controller"),
        ("sweep", "run a batch of configs, optionally in parallel"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=".", help="output directory for traces")
        p.add_argument("--seed", type=int, default=None, help="override scenario/x0 seeds")
        if name == "sweep":
            p.add_argument(
                "--parallelism", type=int, default=None, help="worker threads (default from config)"
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_run(args, ("known-analytic",))
        if args.command == "online":
            return _cmd_run(args, ("adaptive-online",))
        if args.command == "baseline":
            return _cmd_run(args, ("gradient-baseline", "budget-optimal"))
        if args.command == "feasibility":
            return _cmd_feasibility(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        return _cmd_sweep(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    except SteeringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
