"""
Gaussian wave-packet bookkeeping shared by the moment model and the TDSE solver.
"""
from typing import Literal

import numpy as np
from loguru import logger
from scipy import optimize

from app.core.exceptions import EnergyTooLow, GridTooNarrow, NonPositiveVariance
from app.models.schemas import GaussianSpec, Grid, PotentialParams, WaveField

EnergyFormula = Literal["general", "origin"]
Branch = Literal["small", "large"]

V_FLOOR = 1e-8
V_TOL = 1e-15
ENERGY_ATOL = 1e-12
GRID_HALF_WIDTHS = 8.0


def packet_energy(params: PotentialParams, spec: GaussianSpec, formula: EnergyFormula = "general") -> float:
    """⟨H⟩ of a Gaussian; the origin formula drops every x0-dependent potential term."""
    return _energy(params, spec.x0, spec.v0, spec.k0, formula)


def _energy(params: PotentialParams, x0: float, v0: float, k0: float, formula: EnergyFormula = "general") -> float:
    if not v0 > 0:
        raise NonPositiveVariance(f"packet variance must be positive, got {v0}", {"v0": v0})
    a, b, c = params.a, params.b, params.c
    kinetic = 1.0 / (8.0 * v0) + 0.5 * k0 * k0
    if formula == "origin":
        return kinetic + 0.5 * a * v0 + 0.75 * c * v0 * v0
    x2 = x0 * x0
    return (
        kinetic
        + 0.5 * a * (x2 + v0)
        - b / 3.0 * (x2 * x0 + 3.0 * x0 * v0)
        + 0.25 * c * (x2 * x2 + 6.0 * x2 * v0 + 3.0 * v0 * v0)
    )


def _minimum(params: PotentialParams, x0: float, k0: float, formula: EnergyFormula) -> tuple[float, float]:
    """能量关于 v0 的最小值点 (v_min, E_min)"""
    f = lambda v: _energy(params, x0, v, k0, formula)
    hi = 1.0
    while f(2.0 * hi) < f(hi):
        hi *= 2.0
    res = optimize.minimize_scalar(f, bounds=(V_FLOOR, 2.0 * hi), method="bounded", options={"xatol": 1e-14})
    return float(res.x), float(res.fun)


def variance_for_energy(
        params: PotentialParams,
        x0: float,
        k0: float,
        energy: float,
        branch: Branch = "small",
        formula: EnergyFormula = "general",
) -> float:
    """反解初始方差：small 取最小正根，large 取最大正根"""
    v_min, e_min = _minimum(params, x0, k0, formula)
    if energy < e_min - ENERGY_ATOL * max(1.0, abs(e_min)):
        raise EnergyTooLow(
            f"energy {energy} is below the attainable packet minimum {e_min:.12g} at x0={x0}, k0={k0}",
            min_energy=e_min,
        )

    g = lambda v: _energy(params, x0, v, k0, formula) - energy
    if g(v_min) >= 0.0:
        # 二重根：能量恰为最小值
        return v_min

    if branch == "small":
        lo, hi = V_FLOOR, v_min
        if g(lo) <= 0:
            raise EnergyTooLow(f"no positive root above v={V_FLOOR} for energy {energy}", min_energy=e_min)
    else:
        lo, hi = v_min, max(2.0 * v_min, 1.0)
        while g(hi) < 0:
            hi *= 2.0
    v0 = optimize.bisect(g, lo, hi, xtol=V_TOL, maxiter=400)
    logger.debug(f"variance_for_energy: E={energy} x0={x0} branch={branch} -> v0={v0:.12g}")
    return float(v0)


def sample_on_grid(spec: GaussianSpec, grid: Grid) -> WaveField:
    """在网格上离散高斯波包，梯形归一化，端点置零"""
    half_width = GRID_HALF_WIDTHS * np.sqrt(spec.v0)
    if spec.x0 - half_width < grid.x_min or spec.x0 + half_width > grid.x_max:
        raise GridTooNarrow(
            f"grid [{grid.x_min}, {grid.x_max}] does not cover x0 ± {GRID_HALF_WIDTHS}√v0 = "
            f"[{spec.x0 - half_width:.6g}, {spec.x0 + half_width:.6g}]"
        )
    x = grid.x
    psi = (2.0 * np.pi * spec.v0) ** -0.25 * np.exp(
        -((x - spec.x0) ** 2) / (4.0 * spec.v0) + 1j * spec.k0 * (x - spec.x0)
    )
    psi[0] = psi[-1] = 0.0
    psi /= np.sqrt(trapezoid_norm(psi, grid.dx))
    return WaveField(grid=grid, amplitudes=psi)


def trapezoid_norm(psi: np.ndarray, dx: float) -> float:
    """端点为零时梯形公式即为矩形求和"""
    density = np.abs(psi) ** 2
    return float(dx * (density.sum() - 0.5 * (density[0] + density[-1])))
