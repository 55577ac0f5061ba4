"""
Post-hoc analysis of finished runs: barrier-crossing detection, model
comparison and the fixed-point energy scan.
"""
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from app.core.exceptions import ConfigError, DisjointWindows, EmptySeries
from app.core.resources import write_csv
from app.models.schemas import (
    ComparisonReport,
    MomentSeries,
    ObservableSeries,
    PotentialParams,
    ThresholdReport,
    TunnelingReport,
)
from app.physics.barrier_fixed_points import stability_scan, thresholds

Series = Union[MomentSeries, ObservableSeries]

SCAN_COLUMNS = [
    "E", "discriminant", "vstar_minus", "vstar_plus",
    "skewness_plus", "re_lambda1", "re_lambda2", "stable",
]


def detect_tunneling(times, mean_x, barrier_x: float) -> TunnelingReport:
    """以 ⟨x⟩ − β₋ 在相邻采样间的变号计为一次穿越"""
    t = np.asarray(times, dtype=float)
    x = np.asarray(mean_x, dtype=float)
    if x.size == 0:
        raise EmptySeries("mean_x series is empty")
    if t.shape != x.shape:
        raise ValueError(f"times {t.shape} and mean_x {x.shape} differ in shape")

    side = x - barrier_x
    right = side > 0
    flips = np.nonzero(right[1:] != right[:-1])[0]

    first: Optional[float] = None
    if flips.size:
        i = flips[0]
        # 线性插值穿越时刻
        s0, s1 = side[i], side[i + 1]
        frac = 0.0 if s1 == s0 else s0 / (s0 - s1)
        first = float(t[i] + frac * (t[i + 1] - t[i]))

    right_fraction = float(np.count_nonzero(right)) / x.size
    return TunnelingReport(
        barrier_x=barrier_x,
        crossed=bool(flips.size),
        first_crossing_time=first,
        n_crossings=int(flips.size),
        left_fraction=1.0 - right_fraction,
        right_fraction=right_fraction,
    )


def detect_series(series: Series, barrier_x: float) -> TunnelingReport:
    return detect_tunneling(series.times, series.mean_x, barrier_x)


def _window(a: Series, b: Series) -> Tuple[float, float]:
    if len(a) == 0 or len(b) == 0:
        raise EmptySeries("cannot compare an empty series")
    t_start = max(a.times[0], b.times[0])
    t_end = min(a.times[-1], b.times[-1])
    if t_end < t_start:
        raise DisjointWindows(
            f"time windows [{a.times[0]}, {a.times[-1]}] and [{b.times[0]}, {b.times[-1]}] do not overlap"
        )
    return float(t_start), float(t_end)


def _median_step(times: np.ndarray) -> float:
    return float(np.median(np.diff(times))) if times.size > 1 else 0.0


def compare(a: Series, b: Series, barrier_x: float) -> ComparisonReport:
    """RMS 差在公共时间窗口内按较粗的采样间隔线性插值后计算；穿越判定取各自原始采样上的结果"""
    t_start, t_end = _window(a, b)
    step = max(_median_step(a.times), _median_step(b.times))
    if step <= 0 or t_end == t_start:
        grid = np.array([t_start])
    else:
        n = int(np.floor((t_end - t_start) / step + 1e-9)) + 1
        grid = t_start + step * np.arange(n)

    def resample(s: Series) -> Tuple[np.ndarray, np.ndarray]:
        return np.interp(grid, s.times, s.mean_x), np.interp(grid, s.times, s.variance)

    ax, av = resample(a)
    bx, bv = resample(b)
    verdict_a = detect_series(a, barrier_x).crossed
    verdict_b = detect_series(b, barrier_x).crossed
    report = ComparisonReport(
        t_start=t_start,
        t_end=t_end,
        rms_mean_x=float(np.sqrt(np.mean((ax - bx) ** 2))),
        rms_variance=float(np.sqrt(np.mean((av - bv) ** 2))),
        verdict_agreement=verdict_a == verdict_b,
    )
    logger.info(f"compare: {grid.size} samples in [{t_start}, {t_end}] -> {report.model_dump()}")
    return report


def scan(
        params: PotentialParams,
        e_min: float,
        e_max: float,
        step: float,
        csv_path: Optional[Union[str, Path]] = None,
) -> Tuple[List[Dict[str, Optional[float]]], ThresholdReport]:
    """势垒定点能量扫描；给出 csv_path 时同时写出 CSV"""
    if not e_min < e_max or not step > 0:
        raise ConfigError(
            f"scan needs e_min < e_max and step > 0; got {e_min}, {e_max}, {step}",
            {"e_min": e_min, "e_max": e_max, "step": step},
        )
    params.require_positive()
    rows = stability_scan(params, e_min, e_max, step)
    report = thresholds(params)
    if csv_path is not None:
        write_csv(csv_path, SCAN_COLUMNS, [[row[k] for k in SCAN_COLUMNS] for row in rows])
    return rows, report
