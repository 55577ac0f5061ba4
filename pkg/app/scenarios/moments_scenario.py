# app/scenarios/moments_scenario.py
from app.models.schemas import MomentSeries, MomentState, MomentSystemParams
from app.physics.moment_dynamics import integrate
from app.scenarios.base_scenario import BaseScenario


class MomentsScenario(BaseScenario):
    """约化矩方程的 RK4 运行"""

    model = "moments"

    @property
    def dt(self) -> float:
        return self.config.numerics.dt or self.settings.MOMENTS_DT

    @property
    def t_end(self) -> float:
        return self.config.numerics.t_end or self.settings.MOMENTS_T_END

    @property
    def stride(self) -> int:
        return self.config.numerics.stride or self.settings.MOMENTS_STRIDE

    def simulate(self) -> MomentSeries:
        init = self.init
        state = MomentState(mean_x=init.x0, mean_p=init.k0, variance=init.v0, variance_rate=0.0)
        system = MomentSystemParams(potential=self.config.potential, energy=init.energy, skewness=init.skewness)
        series = integrate(state, system, dt=self.dt, t_end=self.t_end, stride=self.stride)
        self.stats["samples"] = len(series)
        self.stats["min_vp"] = float(series.vp.min())
        return series
