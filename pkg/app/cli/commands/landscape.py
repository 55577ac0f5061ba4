# app/cli/commands/landscape.py
import argparse
import sys
from pathlib import Path

from loguru import logger

from app.analysis import SCAN_COLUMNS, scan
from app.cli.dependencies import potential_from_args
from app.core.config import settings
from app.core.resources import ArtifactManager, to_json_text, write_rows
from app.physics.barrier_fixed_points import thresholds
from app.physics.quartic_potential import landscape


def _add_potential_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--a", type=float, help="quadratic coefficient (default 10)")
    parser.add_argument("--b", type=float, help="cubic coefficient (default 4)")
    parser.add_argument("--c", type=float, help="quartic coefficient (default 0.35)")
    parser.add_argument("--out", type=Path, help="directory for JSON/CSV/SVG artifacts")


def potential_report(args: argparse.Namespace) -> int:
    """势能形状报告"""
    report = landscape(potential_from_args(args.a, args.b, args.c))
    print(to_json_text(report))
    if args.out or args.emit_svg:
        artifacts = ArtifactManager(args.out or Path(settings.OUTPUT_DIR)).open(log_file=False)
        artifacts.json("potential.json", report)
        if args.emit_svg:
            from app.plotting import potential_figure

            artifacts.svg("potential.svg", potential_figure(report))
        artifacts.close()
        logger.info(f"potential report written to {artifacts.directory}: {artifacts.listing()}")
    return 0


def threshold_report(args: argparse.Namespace) -> int:
    """势垒定点的存在与稳定阈值"""
    report = thresholds(potential_from_args(args.a, args.b, args.c))
    print(to_json_text(report))
    if args.out:
        ArtifactManager(args.out).open(log_file=False).json("thresholds.json", report)
    return 0


def stability_scan(args: argparse.Namespace) -> int:
    """能量网格扫描；无 --out 时 CSV 写到标准输出"""
    params = potential_from_args(args.a, args.b, args.c)
    e_min = settings.SCAN_E_MIN if args.e_min is None else args.e_min
    e_max = settings.SCAN_E_MAX if args.e_max is None else args.e_max
    step = settings.SCAN_STEP if args.step is None else args.step

    if args.out:
        artifacts = ArtifactManager(args.out).open(log_file=False)
        rows, report = scan(params, e_min, e_max, step, csv_path=artifacts.path("stability_scan.csv"))
        artifacts.json("thresholds.json", report)
        logger.info(f"stability scan: {len(rows)} rows written to {artifacts.directory}")
    else:
        rows, report = scan(params, e_min, e_max, step)
        write_rows(sys.stdout, SCAN_COLUMNS, ([row[k] for k in SCAN_COLUMNS] for row in rows))
    return 0


def register(subparsers) -> None:
    p = subparsers.add_parser("potential-report", help="stationary points, regime, barrier height and Δ")
    _add_potential_args(p)
    p.add_argument("--emit-svg", action="store_true", help="also draw φ(x) with β₋, 0, β₊ marked")
    p.set_defaults(handler=potential_report)

    p = subparsers.add_parser("thresholds", help="existence and stability thresholds of the barrier fixed point")
    _add_potential_args(p)
    p.set_defaults(handler=threshold_report)

    p = subparsers.add_parser("stability-scan", help="fixed-point scan over an energy grid")
    _add_potential_args(p)
    p.add_argument("--e-min", type=float)
    p.add_argument("--e-max", type=float)
    p.add_argument("--step", type=float)
    p.set_defaults(handler=stability_scan)
