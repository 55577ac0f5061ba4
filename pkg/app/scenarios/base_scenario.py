# app/scenarios/base_scenario.py
from datetime import datetime
from typing import Any, Dict, Optional

import psutil
from loguru import logger

from app.core.config import Settings, settings as default_settings
from app.models.schemas import (
    GaussianSpec,
    PotentialReport,
    ResolvedInit,
    RunConfig,
    ScenarioResult,
    ThresholdReport,
)
from app.physics.barrier_fixed_points import regime_of, skewness_for_run, thresholds
from app.physics.gaussian_packet import packet_energy, variance_for_energy
from app.physics.quartic_potential import landscape


class BaseScenario:
    """基础场景类，提供初始条件解析、生命周期钩子与运行统计"""

    model: str = "base"

    def __init__(self, config: RunConfig, task_id: Optional[str] = None, settings: Optional[Settings] = None):
        self.config = config
        self.task_id = task_id or config.name
        self.settings = settings or default_settings
        self.stats: Dict[str, Any] = {}
        self.start_time: Optional[datetime] = None
        self._process = psutil.Process()
        self._landscape: Optional[PotentialReport] = None
        self._thresholds: Optional[ThresholdReport] = None
        self.init: Optional[ResolvedInit] = None

    @property
    def landscape(self) -> PotentialReport:
        if self._landscape is None:
            self._landscape = landscape(self.config.potential)
        return self._landscape

    @property
    def thresholds(self) -> ThresholdReport:
        if self._thresholds is None:
            self._thresholds = thresholds(self.config.potential)
        return self._thresholds

    @property
    def barrier_x(self) -> float:
        return self.thresholds.barrier_x

    # ------------------------------------------------------------ numerics

    @property
    def dt(self) -> float:
        raise NotImplementedError

    @property
    def t_end(self) -> float:
        raise NotImplementedError

    @property
    def stride(self) -> int:
        raise NotImplementedError

    # ------------------------------------------------------------ init

    def resolve_init(self) -> ResolvedInit:
        """由配置得到有效能量 E、初始方差 v0 与偏度 S"""
        init, params = self.config.init, self.config.potential
        formula = init.energy_formula or self.settings.ENERGY_FORMULA
        report = self.thresholds  # NoBarrier 在此处抛出

        if init.energy is not None:
            offset = self.landscape.delta if init.energy_offset == "plus-delta" else 0.0
            energy = init.energy + offset
            branch = init.branch or self.settings.VARIANCE_BRANCH
            v0 = variance_for_energy(params, init.x0, init.k0, energy, branch, formula)
        else:
            offset, branch, v0 = 0.0, None, init.v0
            energy = packet_energy(params, GaussianSpec(x0=init.x0, v0=v0, k0=init.k0), formula)

        if self.config.skewness_policy == "fixed-point":
            skewness, warning = skewness_for_run(params, energy)
        else:
            skewness, warning = 0.0, None

        self.init = ResolvedInit(
            x0=init.x0,
            k0=init.k0,
            energy=energy,
            energy_offset=offset,
            v0=v0,
            branch=branch,
            energy_formula=formula,
            skewness=skewness,
            skewness_warning=warning,
            regime=regime_of(params, energy, report),
        )
        logger.info(
            f"[{self.model}] {self.config.name}: E={energy:.12g} (offset {offset:.6g}) v0={v0:.12g} "
            f"S={skewness:.12g} regime={self.init.regime.value}"
        )
        return self.init

    # ------------------------------------------------------------ lifecycle

    def scenario_opened(self) -> None:
        """场景开始时的回调"""
        self.start_time = datetime.now()
        self.stats["start_time"] = self.start_time.isoformat()
        self.stats["rss_start_mb"] = self._process.memory_info().rss / 2**20
        logger.info(f"场景 {self.config.name} ({self.model}) 开始运行")

    def scenario_closed(self, reason: str) -> None:
        """场景结束时的回调"""
        end_time = datetime.now()
        duration = (end_time - self.start_time).total_seconds() if self.start_time else 0.0
        rss = self._process.memory_info().rss / 2**20
        self.stats.update({
            "end_time": end_time.isoformat(),
            "duration_seconds": duration,
            "rss_end_mb": rss,
            "rss_peak_mb": max(rss, self.stats.get("rss_start_mb", 0.0)),
            "close_reason": reason,
        })
        logger.info(f"场景 {self.config.name} ({self.model}) 运行结束: {reason}, 时长 {duration:.2f}秒")

    def simulate(self) -> Any:
        raise NotImplementedError

    def snapshots(self) -> list:
        return []

    def run(self) -> ScenarioResult:
        self.scenario_opened()
        try:
            self.resolve_init()
            series = self.simulate()
        except Exception as e:
            self.scenario_closed(f"failed: {type(e).__name__}")
            raise
        self.scenario_closed("finished")
        return ScenarioResult(
            task_id=self.task_id,
            name=self.config.name,
            model=self.model,
            init=self.init,
            series=series,
            snapshots=self.snapshots(),
            stats=dict(self.stats),
        )
