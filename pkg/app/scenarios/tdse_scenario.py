# app/scenarios/tdse_scenario.py
from typing import List, Tuple

from loguru import logger

from app.models.schemas import GaussianSpec, Grid, ObservableSeries, WaveField
from app.physics.gaussian_packet import sample_on_grid
from app.physics.tdse_solver import build_grid, discrete_energy, energy_matched_packet, evolve
from app.scenarios.base_scenario import BaseScenario


class TdseScenario(BaseScenario):
    """Crank-Nicolson 参考动力学运行"""

    model = "tdse"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._snapshots: List[Tuple[float, WaveField]] = []

    @property
    def dt(self) -> float:
        return self.config.numerics.dt or self.settings.TDSE_DT

    @property
    def t_end(self) -> float:
        return self.config.numerics.t_end or self.settings.TDSE_T_END

    @property
    def stride(self) -> int:
        return self.config.numerics.stride or self.settings.TDSE_STRIDE

    @property
    def grid(self) -> Grid:
        spec = self.config.numerics.grid
        return build_grid(
            spec.x_min if spec.x_min is not None else self.settings.GRID_X_MIN,
            spec.x_max if spec.x_max is not None else self.settings.GRID_X_MAX,
            spec.n if spec.n is not None else self.settings.GRID_N,
        )

    def _initial_field(self, grid: Grid) -> WaveField:
        init, cfg = self.init, self.config.init
        if cfg.energy is None:
            return sample_on_grid(GaussianSpec(x0=init.x0, v0=init.v0, k0=init.k0), grid)
        field, v0, matched = energy_matched_packet(
            self.config.potential, init.x0, init.k0, init.energy, grid,
            init.branch or self.settings.VARIANCE_BRANCH,
        )
        measured = discrete_energy(self.config.potential, GaussianSpec(x0=init.x0, v0=v0, k0=init.k0), grid)
        self.stats["v0_analytic"] = init.v0
        self.stats["energy_matched"] = matched
        self.stats["discrete_energy"] = measured
        self.stats["energy_mismatch"] = abs(measured - init.energy)
        if not matched:
            logger.warning(
                f"[{self.model}] {self.config.name}: initial packet energy {measured:.12g} "
                f"differs from target {init.energy:.12g}"
            )
        self.init = init.model_copy(update={"v0": v0, "energy_formula": "general"})
        return field

    def simulate(self) -> ObservableSeries:
        grid = self.grid
        psi0 = self._initial_field(grid)
        outputs = self.config.outputs
        snapshot_every = None
        if outputs.emit_snapshots:
            snapshot_every = max(1, int(round(outputs.snapshot_every / self.dt)))

        series = evolve(
            psi0,
            self.config.potential,
            dt=self.dt,
            t_end=self.t_end,
            stride=self.stride,
            drift_budget=self.settings.DRIFT_BUDGET,
            drift_warn=self.settings.DRIFT_WARN,
            edge_width=self.settings.EDGE_WIDTH,
            snapshot_every=snapshot_every,
            snapshot_sink=lambda t, field: self._snapshots.append((t, field)),
        )
        self.stats["samples"] = len(series)
        self.stats["grid"] = grid.model_dump()
        self.stats["drift"] = series.drift.model_dump()
        return series

    def snapshots(self) -> list:
        return list(self._snapshots)
