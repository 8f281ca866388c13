"""Command-line front end.

``sclerasim run`` executes seeded trial batches for the requested safety
strategies, writes per-trial sample CSVs, event logs, an aggregate report
and optional force-trace plots, and prints an active-vs-passive comparison
table.  ``sclerasim oracle`` sweeps the 1-DoF convergence testbed over
randomized stiffnesses and initial force errors and reports the residual
force error per case.

Running without a scenario file uses the built-in defaults (the tuned
controller gains and thresholds) for every parameter; a scenario file only
needs to name the values it overrides.

Exit codes: 0 success, 1 configuration error, 2 simulation or oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .control import ControllerParams, OneDofPlant, run_1dof_oracle
from .metrics import METRIC_FIELDS, AggregateStats, TrialMetrics, aggregate, compute_metrics
from .model import ScleraModel, VesselProfile
from .operator import OperatorProfile
from .sim import ConfigError, ScenarioConfig, SimulationAbort, TrialLog, run_batch

CSV_HEADER = [
    "t", "fsx", "fsy", "fs", "mode", "alarm", "progress", "dx", "dy",
    "v0", "v1", "v2", "v3", "v4", "v5",
]

_SCENARIO_SECTIONS = {"controller", "sclera", "operator", "vessel"}
_SCENARIO_SCALARS = {"mode", "seed", "dt", "timeout", "progress_rate", "robot_lag_tau"}


def load_scenario(path: str | None) -> dict:
    """Read a scenario JSON file, or return an empty overlay if no path."""
    if path is None:
        return {}
    file = Path(path)
    if not file.exists():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        data = json.loads(file.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"scenario file {path} must contain a JSON object")
    unknown = set(data) - _SCENARIO_SECTIONS - _SCENARIO_SCALARS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    return data


def _build_section(cls, section: dict, label: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown {label} keys: {sorted(unknown)}")
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {label} section: {exc}") from None


def build_config(
    scenario: dict,
    mode: str,
    seed: int | None = None,
    dt: float | None = None,
    profile: str | None = None,
) -> ScenarioConfig:
    """Resolve one trial condition from scenario overlay plus CLI overrides."""
    controller = _build_section(ControllerParams, scenario.get("controller", {}), "controller")
    sclera = _build_section(ScleraModel, scenario.get("sclera", {}), "sclera")
    vessel = _build_section(VesselProfile, scenario.get("vessel", {}), "vessel")

    operator_section = dict(scenario.get("operator", {}))
    scenario_skill = operator_section.pop("skill", None)
    skill = profile or scenario_skill
    if skill is not None:
        known = {f.name for f in dataclasses.fields(OperatorProfile)}
        unknown = set(operator_section) - known
        if unknown:
            raise ConfigError(f"unknown operator keys: {sorted(unknown)}")
        try:
            op_profile = OperatorProfile.preset(skill, **operator_section)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        op_profile = _build_section(OperatorProfile, operator_section, "operator")

    return ScenarioConfig(
        mode=mode,
        controller=controller,
        sclera=sclera,
        profile=op_profile,
        vessel=vessel,
        dt=dt if dt is not None else scenario.get("dt", ScenarioConfig.dt),
        timeout=scenario.get("timeout", ScenarioConfig.timeout),
        seed=seed if seed is not None else scenario.get("seed", ScenarioConfig.seed),
        progress_rate=scenario.get("progress_rate", ScenarioConfig.progress_rate),
        robot_lag_tau=scenario.get("robot_lag_tau", ScenarioConfig.robot_lag_tau),
    )


def write_trial_csv(log: TrialLog, path: Path) -> None:
    """Fixed-column sample log; float cells use shortest round-trip repr."""
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for i in range(log.n_samples):
            row = [
                str(float(log.t[i])),
                str(float(log.fsx[i])),
                str(float(log.fsy[i])),
                str(float(log.fs[i])),
                str(int(log.control_mode[i])),
                str(int(log.alarm[i])),
                str(float(log.progress[i])),
                str(float(log.dx[i])),
                str(float(log.dy[i])),
            ] + [str(float(v)) for v in log.twist[i]]
            writer.writerow(row)


def read_trial_csv(path: Path) -> dict[str, np.ndarray]:
    """Read a sample CSV back into column arrays keyed by header name."""
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header in {path}: {header}")
        rows = [[float(cell) for cell in row] for row in reader]
    data = np.asarray(rows) if rows else np.empty((0, len(CSV_HEADER)))
    return {name: data[:, i] for i, name in enumerate(CSV_HEADER)}


def write_events_json(log: TrialLog, path: Path) -> None:
    payload = {
        "condition": log.condition,
        "seed": log.seed,
        "outcome": log.outcome,
        "vessel_order": list(log.vessel_order),
        "events": [
            {"t": e.t, "kind": e.kind, "fs": e.fs, "info": e.info} for e in log.events
        ],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_trial_svg(log: TrialLog, path: Path, params: ControllerParams) -> None:
    """Force-trace plot: lateral components and magnitude with the unsafe line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stride = max(1, log.n_samples // 2000)
    t = log.t[::stride]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 6))
    axes[0].plot(t, log.fsx[::stride], lw=0.8, color="tab:blue")
    axes[0].set_ylabel("Fsx [mN]")
    axes[1].plot(t, log.fsy[::stride], lw=0.8, color="tab:orange")
    axes[1].set_ylabel("Fsy [mN]")
    axes[2].plot(t, log.fs[::stride], lw=0.8, color="tab:green")
    axes[2].axhline(params.L3, color="red", ls="--", lw=0.8, label=f"unsafe {params.L3:g} mN")
    axes[2].set_ylabel("Fs [mN]")
    axes[2].set_xlabel("time [s]")
    axes[2].legend(loc="upper right", fontsize=8)
    fig.suptitle(f"{log.condition} trial, seed {log.seed}")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _config_as_dict(config: ScenarioConfig) -> dict:
    return dataclasses.asdict(config)


def _format_cell(mean: float, std: float | None) -> str:
    if std is None:
        return f"{mean:10.3f}"
    return f"{mean:10.3f} +/- {std:7.3f}"


def print_comparison(stats: dict[str, AggregateStats]) -> None:
    conditions = list(stats)
    width = 24
    header = f"{'metric':<22}" + "".join(f"{c:>{width}}" for c in conditions)
    print(header)
    print("-" * len(header))
    for name in METRIC_FIELDS:
        row = f"{name:<22}"
        for c in conditions:
            s = stats[c]
            row += f"{_format_cell(s.mean[name], None if s.std is None else s.std[name]):>{width}}"
        print(row)


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    modes = ["active", "passive"] if args.mode == "both" else [args.mode]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    configs = {
        mode: build_config(scenario, mode, seed=args.seed, dt=args.dt, profile=args.profile)
        for mode in modes
    }

    files = ["manifest.json", "aggregate.json"]
    for mode in modes:
        for i in range(args.trials):
            files.append(f"trial_{mode}_{i}.csv")
            files.append(f"trial_{mode}_{i}.events.json")
            if not args.no_plots:
                files.append(f"trial_{mode}_{i}.svg")

    manifest = {
        "tool": "sclerasim",
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
        "scenario": args.scenario,
        "out_dir": str(out_dir),
        "modes": modes,
        "trials": args.trials,
        "config": {mode: _config_as_dict(configs[mode]) for mode in modes},
        "trial_seeds": {
            mode: [configs[mode].seed + i for i in range(args.trials)] for mode in modes
        },
        "files": sorted(files),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    report: dict[str, dict] = {}
    stats: dict[str, AggregateStats] = {}
    for mode in modes:
        config = configs[mode]
        logs = run_batch(config, args.trials, parallel=args.parallel)
        per_trial: list[TrialMetrics] = []
        for i, log in enumerate(logs):
            write_trial_csv(log, out_dir / f"trial_{mode}_{i}.csv")
            write_events_json(log, out_dir / f"trial_{mode}_{i}.events.json")
            if not args.no_plots:
                write_trial_svg(log, out_dir / f"trial_{mode}_{i}.svg", config.controller)
            per_trial.append(compute_metrics(log, config.controller))
        agg = aggregate(per_trial)
        stats[mode] = agg
        report[mode] = {
            "trials": [dataclasses.asdict(m) for m in per_trial],
            **agg.as_dict(),
        }

    (out_dir / "aggregate.json").write_text(
        json.dumps({"conditions": report}, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {len(files)} files to {out_dir}")
    print_comparison(stats)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    params = ControllerParams()
    if args.alpha is not None:
        params = dataclasses.replace(params, alpha1=args.alpha, alpha2=args.alpha)

    print(
        f"one-dof adaptive force convergence sweep: {args.cases} cases, "
        f"seed {args.seed}, duration {args.duration:g} s, dt {args.dt:g} s, "
        f"tolerance {args.tol:g} mN"
    )
    failures = 0
    worst = 0.0
    for i in range(args.cases):
        k = float(rng.uniform(50.0, 1000.0))
        f_d = float(rng.uniform(20.0, 150.0))
        df0 = float(rng.uniform(-min(100.0, f_d), 100.0))
        plant = OneDofPlant(k=k, x=(f_d + df0) / k, x0=0.0)
        trace = run_1dof_oracle(plant, f_d, params, args.duration, args.dt)
        residual = abs(float(trace.delta_f[-1]))
        worst = max(worst, residual)
        ok = residual < args.tol
        failures += 0 if ok else 1
        print(
            f"case {i:3d}: k={k:7.1f} mN/mm  Fd={f_d:6.1f} mN  dF0={df0:+7.1f} mN"
            f"  |dF|({args.duration:g}s)={residual:.3e} mN  {'PASS' if ok else 'FAIL'}"
        )
    print(
        f"sweep result: {args.cases - failures}/{args.cases} converged "
        f"(max residual {worst:.3e} mN)"
    )
    return 2 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sclerasim",
        description="Closed-loop comparison of active vs passive sclera-force safety strategies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded trial batches and export logs/metrics/plots")
    run.add_argument("--scenario", default=None, help="scenario JSON file (defaults used if omitted)")
    run.add_argument("--mode", choices=("active", "passive", "both"), default="both")
    run.add_argument("--trials", type=int, default=10)
    run.add_argument("--seed", type=int, default=None, help="base seed (trial i adds i)")
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--dt", type=float, default=None, help="control/physics step [s]")
    run.add_argument("--no-plots", action="store_true", help="skip SVG force traces")
    run.add_argument("--profile", choices=("expert", "intermediate", "novice"), default=None)
    run.add_argument("--parallel", action="store_true", help="run trials concurrently")
    run.set_defaults(func=cmd_run)

    oracle = sub.add_parser("oracle", help="1-DoF adaptive convergence sweep")
    oracle.add_argument("--cases", type=int, default=50)
    oracle.add_argument("--seed", type=int, default=42)
    oracle.add_argument("--alpha", type=float, default=None, help="override force-error gain")
    oracle.add_argument("--duration", type=float, default=10.0, help="seconds per case")
    oracle.add_argument("--dt", type=float, default=0.001)
    oracle.add_argument("--tol", type=float, default=1.0, help="residual tolerance [mN]")
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SimulationAbort as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
