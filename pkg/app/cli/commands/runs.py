# app/cli/commands/runs.py
import argparse
import asyncio
from pathlib import Path
from typing import Optional

import numpy as np

from app.analysis import compare as compare_series
from app.cli.dependencies import load_run_config, potential_from_args
from app.core.exceptions import ConfigError
from app.core.resources import ArtifactManager, read_columns, to_json_text
from app.models.schemas import ObservableSeries, RunOutcome
from app.physics.quartic_potential import landscape
from app.scenarios.scenario_runner import ScenarioRunner


def _add_run_args(parser: argparse.ArgumentParser, with_model: bool = True) -> None:
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    if with_model:
        parser.add_argument("--model", choices=["moments", "tdse", "both"])
    parser.add_argument("--name", help="run name (default: config file stem)")
    parser.add_argument("--energy", type=float, help="target mean energy E")
    parser.add_argument("--v0", type=float, help="initial variance (instead of --energy)")
    parser.add_argument("--x0", type=float, help="initial mean position")
    parser.add_argument("--k0", type=float, help="initial mean momentum")
    parser.add_argument("--branch", choices=["small", "large"], help="variance branch for the energy inversion")
    parser.add_argument("--energy-offset", choices=["none", "plus-delta"], help="add the well offset Δ to E")
    parser.add_argument("--t-end", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--stride", type=int)
    parser.add_argument("--out", type=str, help="artifact directory")
    parser.add_argument("--emit-svg", action="store_true", help="write mean_x/V line charts")
    parser.add_argument("--emit-snapshots", action="store_true", help="write |ψ|² snapshots (tdse)")


def _overrides(args: argparse.Namespace) -> dict:
    keys = ("model", "name", "energy", "v0", "x0", "k0", "branch", "energy_offset", "t_end", "dt", "stride", "out")
    return {k: getattr(args, k, None) for k in keys}


def _summary(outcome: RunOutcome) -> dict:
    summary = {
        "task_id": outcome.task_id,
        "name": outcome.name,
        "output_dir": outcome.output_dir,
        "artifacts": outcome.artifacts,
        "models": {
            model: {
                "energy": result.init.energy,
                "v0": result.init.v0,
                "skewness": result.init.skewness,
                "regime": result.init.regime,
                "tunneling": result.tunneling,
            }
            for model, result in outcome.results.items()
        },
    }
    if outcome.comparison is not None:
        summary["comparison"] = outcome.comparison
    return _dump(summary)


def _dump(value):
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    if isinstance(value, dict):
        return {k: _dump(v) for k, v in value.items()}
    if hasattr(value, "value"):
        return value.value
    return value


def _run(args: argparse.Namespace, default_model: Optional[str]) -> int:
    config = load_run_config(args.config, _overrides(args), default_model)
    updates = {}
    if args.emit_svg:
        updates["emit_svg"] = True
    if args.emit_snapshots:
        updates["emit_snapshots"] = True
    if updates:
        config = config.model_copy(update={"outputs": config.outputs.model_copy(update=updates)})
    outcome = ScenarioRunner().run(config)
    print(to_json_text(_summary(outcome)))
    return 0


def run(args: argparse.Namespace) -> int:
    """按配置中的 model 运行"""
    return _run(args, None)


def moments(args: argparse.Namespace) -> int:
    return _run(args, "moments")


def tdse(args: argparse.Namespace) -> int:
    return _run(args, "tdse")


def _series_from_csv(path: Path) -> ObservableSeries:
    cols = read_columns(path)
    missing = {"t", "mean_x", "variance"} - set(cols)
    if missing:
        raise ConfigError(f"{path}: missing columns {sorted(missing)}", {"path": str(path)})
    nan = np.full_like(cols["t"], np.nan)
    return ObservableSeries(
        times=cols["t"],
        norm=cols.get("norm", nan),
        mean_x=cols["mean_x"],
        mean_p=cols.get("mean_p", nan),
        variance=cols["variance"],
        energy=cols.get("energy", nan),
    )


def compare(args: argparse.Namespace) -> int:
    """两条已有序列的比较，或按配置同时运行两个模型"""
    if args.series:
        if len(args.series) != 2:
            raise ConfigError("compare needs exactly two series CSV files", {"given": len(args.series)})
        barrier_x = landscape(potential_from_args(args.a, args.b, args.c)).beta_minus
        a, b = (_series_from_csv(p) for p in args.series)
        report = compare_series(a, b, barrier_x)
        if args.out:
            ArtifactManager(args.out).open(log_file=False).json("comparison.json", report)
        print(to_json_text(report))
        return 0
    args.model = "both"
    return _run(args, "both")


def batch(args: argparse.Namespace) -> int:
    """并发运行多个配置文件"""
    configs = [load_run_config(path, {}) for path in args.configs]
    names = [c.name for c in configs]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigError(f"batch run names must be unique: {duplicates}", {"duplicates": duplicates})
    statuses = asyncio.run(ScenarioRunner().run_many(configs, args.out))
    print(to_json_text({"tasks": [s.model_dump(mode="json") for s in statuses]}))
    failed = [s.exit_code for s in statuses if s.exit_code]
    return failed[0] if failed else 0


def register(subparsers) -> None:
    p = subparsers.add_parser("run", help="run the model(s) named in the config")
    _add_run_args(p)
    p.set_defaults(handler=run)

    p = subparsers.add_parser("moments", help="integrate the reduced moment system")
    _add_run_args(p, with_model=False)
    p.set_defaults(handler=moments)

    p = subparsers.add_parser("tdse", help="Crank-Nicolson reference dynamics")
    _add_run_args(p, with_model=False)
    p.set_defaults(handler=tdse)

    p = subparsers.add_parser("compare", help="moments vs. tdse over their common time window")
    _add_run_args(p, with_model=False)
    p.add_argument("--series", type=Path, nargs="+", help="compare two existing series CSV files instead")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float)
    p.set_defaults(handler=compare)

    p = subparsers.add_parser("batch", help="run several config files concurrently")
    p.add_argument("configs", type=Path, nargs="+")
    p.add_argument("--out", type=Path, help="base directory; each run writes into <out>/<name>")
    p.set_defaults(handler=batch)
