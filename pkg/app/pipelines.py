# app/pipelines.py
from typing import List

import numpy as np
from loguru import logger

from app.analysis import detect_series
from app.core.exceptions import NonFiniteState, NonPositiveVariance
from app.core.resources import ArtifactManager
from app.models.schemas import MomentSeries, ScenarioResult
from app.scenarios.base_scenario import BaseScenario


class ValidationPipeline:
    """结果验证管道"""

    def process_result(self, result: ScenarioResult, scenario: BaseScenario) -> ScenarioResult:
        series = result.series
        columns = {"mean_x": series.mean_x, "mean_p": series.mean_p, "variance": series.variance}
        for name, values in columns.items():
            bad = np.nonzero(~np.isfinite(values))[0]
            if bad.size:
                raise NonFiniteState(float(series.times[bad[0]]))

        if np.any(series.variance <= 0):
            i = int(np.argmax(series.variance <= 0))
            raise NonPositiveVariance(
                f"variance {series.variance[i]:.3e} at t={series.times[i]:.6g} is not positive",
                {"t": float(series.times[i])},
            )

        if isinstance(series, MomentSeries):
            negative = int(np.count_nonzero(series.vp < 0))
            result.stats["negative_vp_samples"] = negative
            if negative:
                logger.warning(f"[{result.model}] {result.name}: Vp < 0 at {negative} of {len(series)} samples")
        else:
            result.stats["drift"] = series.drift.model_dump()
        return result


class TunnelingPipeline:
    """穿越判定管道"""

    def process_result(self, result: ScenarioResult, scenario: BaseScenario) -> ScenarioResult:
        result.tunneling = detect_series(result.series, scenario.barrier_x)
        logger.info(
            f"[{result.model}] {result.name}: crossed={result.tunneling.crossed} "
            f"n_crossings={result.tunneling.n_crossings} regime={result.init.regime.value}"
        )
        return result


class StoragePipeline:
    """存储管道"""

    def __init__(self, artifacts: ArtifactManager, emit_svg: bool = False):
        self.artifacts = artifacts
        self.emit_svg = emit_svg
        self.stored_count = 0

    def process_result(self, result: ScenarioResult, scenario: BaseScenario) -> ScenarioResult:
        stored = [
            self._series(result),
            self.artifacts.json(f"{result.model}_tunneling.json", result.tunneling),
        ]
        if self.emit_svg:
            from app.plotting import series_figure

            figure = series_figure(
                result.series.times, result.series.mean_x, result.series.variance,
                scenario.landscape, title=f"{result.name} ({result.model}, E={result.init.energy:.4g})",
            )
            stored.append(self.artifacts.svg(f"{result.model}.svg", figure))
        for t, field in result.snapshots:
            stored.append(self._snapshot(t, field))

        result.artifacts = [p.name for p in stored]
        self.stored_count += len(stored)
        return result

    def _series(self, result: ScenarioResult):
        s = result.series
        if isinstance(s, MomentSeries):
            return self.artifacts.columns("moments_series.csv", {
                "t": s.times, "mean_x": s.mean_x, "mean_p": s.mean_p,
                "variance": s.variance, "variance_rate": s.variance_rate, "vp_diagnostic": s.vp,
            })
        return self.artifacts.columns("tdse_series.csv", {
            "t": s.times, "norm": s.norm, "mean_x": s.mean_x,
            "mean_p": s.mean_p, "variance": s.variance, "energy": s.energy,
        })

    def _snapshot(self, t: float, field):
        amp = field.amplitudes
        return self.artifacts.columns(f"snapshots/psi_{t:.6g}.csv", {
            "x": field.grid.x, "re": amp.real, "im": amp.imag, "prob": np.abs(amp) ** 2,
        })

    def close(self) -> None:
        logger.info(f"总共存储了 {self.stored_count} 个产物")


def default_pipelines(artifacts: ArtifactManager, emit_svg: bool = False) -> List[object]:
    return [ValidationPipeline(), TunnelingPipeline(), StoragePipeline(artifacts, emit_svg)]
