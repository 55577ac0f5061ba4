"""
Fixed points (x*, 0, V*, 0) of the moment system and their stability.

At a fixed point the skewness is slaved to V*, and substituting it into the
variance equation leaves a quadratic in V* whose constant side is E. The
plus (larger) root at the barrier x* = β₋ is the physical branch: its
stabilization marks the tunneling-onset energy.
"""
import cmath
import math
from typing import Dict, List, Literal, Optional, Tuple

from loguru import logger
from scipy import optimize

from app.core.exceptions import DegenerateQuartic, NoBarrier
from app.models.schemas import (
    EnergyInterval,
    EnergyRegime,
    FixedPointSolution,
    LandscapeRegime,
    PotentialParams,
    StabilityMatrix,
    ThresholdReport,
    VStarRoot,
    VStarSolution,
)
from app.physics.quartic_potential import landscape

STABILITY_MARGIN = 1e-9
E_TOL = 1e-7

Branch = Literal["plus", "minus"]


def _require_quartic(params: PotentialParams) -> None:
    if params.c == 0:
        raise DegenerateQuartic("fixed-point relations divide by c; c must be non-zero")


def skewness_at(params: PotentialParams, x_star: float, v_star: float) -> float:
    """令 d²⟨x⟩/dt² = 0 得到的定点偏度 S"""
    _require_quartic(params)
    a, b, c = params.a, params.b, params.c
    x = x_star
    return -(a * x - b * v_star - b * x * x + 3.0 * c * v_star * x + c * x**3) / c


def vstar_energy_coeffs(params: PotentialParams, x_star: float) -> Tuple[float, float, float]:
    """q2·V*² + q1·V* + q0 = E 的系数"""
    _require_quartic(params)
    a, b, c = params.a, params.b, params.c
    x = x_star
    q2 = 9.0 * c / 4.0
    q1 = a - 5.0 * b * b / (6.0 * c) + 3.0 * b * x - 4.5 * c * x * x
    q0 = (
        5.0 * a * b * x / (6.0 * c)
        - 2.0 * a * x * x
        - 5.0 * b * b * x * x / (6.0 * c)
        + 3.0 * b * x**3
        - 2.25 * c * x**4
    )
    return q2, q1, q0


def solve_vstar(params: PotentialParams, x_star: float, energy: float) -> VStarSolution:
    q2, q1, q0 = vstar_energy_coeffs(params, x_star)
    disc = q1 * q1 - 4.0 * q2 * (q0 - energy)
    solution = VStarSolution(x_star=x_star, energy=energy, discriminant=disc)
    if disc < 0:
        return solution

    root = math.sqrt(disc)
    for value, branch in (((-q1 + root) / (2.0 * q2), "plus"), ((-q1 - root) / (2.0 * q2), "minus")):
        if value > 0:
            solution.roots.append(VStarRoot(value=value, branch=branch))
        else:
            solution.rejected.append(value)
    return solution


def stability_matrix(params: PotentialParams, x_star: float, v_star: float, skewness: float) -> StabilityMatrix:
    a, b, c = params.a, params.b, params.c
    x, v, s = x_star, v_star, skewness
    return StabilityMatrix(
        a11=-a + 2.0 * b * x - 3.0 * c * x * x - 3.0 * c * v,
        a12=b - 3.0 * c * x,
        a21=-4.0 * a * x + 4.0 * b * x * x - 4.0 * c * x**3 + 8.0 * b * v - 24.0 * c * x * v - 10.0 * c * s,
        a22=-4.0 * a + 8.0 * b * x - 18.0 * c * v - 12.0 * c * x * x,
    )


def eigen2(m: StabilityMatrix) -> Tuple[complex, complex]:
    """2×2 矩阵特征值的闭式解，按实部升序"""
    tr, det = m.trace, m.determinant
    root = cmath.sqrt(tr * tr - 4.0 * det)
    pair = sorted(((tr - root) / 2.0, (tr + root) / 2.0), key=lambda z: (z.real, z.imag))
    return pair[0], pair[1]


def is_stable(eigenvalues: Tuple[complex, complex]) -> bool:
    return all(z.real < -STABILITY_MARGIN for z in eigenvalues)


def fixed_point(params: PotentialParams, x_star: float, v_star: float, discriminant: float, branch: Branch) -> FixedPointSolution:
    s = skewness_at(params, x_star, v_star)
    lam = eigen2(stability_matrix(params, x_star, v_star, s))
    return FixedPointSolution(
        x_star=x_star,
        v_star=v_star,
        skewness=s,
        discriminant=discriminant,
        branch=branch,
        eigenvalues_re=(lam[0].real, lam[1].real),
        eigenvalues_im=(lam[0].imag, lam[1].imag),
        stable=is_stable(lam),
    )


def fixed_points(params: PotentialParams, x_star: float, energy: float) -> List[FixedPointSolution]:
    """给定 x* 与 E 的全部正根定点"""
    sol = solve_vstar(params, x_star, energy)
    return [fixed_point(params, x_star, r.value, sol.discriminant, r.branch) for r in sol.roots]


def _barrier_x(params: PotentialParams) -> float:
    report = landscape(params)
    if report.regime not in (LandscapeRegime.SHALLOW_RIGHT, LandscapeRegime.SYMMETRIC, LandscapeRegime.DEEP_RIGHT):
        raise NoBarrier(f"regime {report.regime.value} ({report.regime_name}) has no barrier")
    return report.beta_minus


def _plus_vstar(params: PotentialParams, x_star: float, energy: float) -> float:
    # 判别式在阈值处可能因舍入略小于零，此处截断到零
    q2, q1, q0 = vstar_energy_coeffs(params, x_star)
    disc = max(q1 * q1 - 4.0 * q2 * (q0 - energy), 0.0)
    return (-q1 + math.sqrt(disc)) / (2.0 * q2)


def _max_real_part(params: PotentialParams, x_star: float, energy: float) -> float:
    v = _plus_vstar(params, x_star, energy)
    lam = eigen2(stability_matrix(params, x_star, v, skewness_at(params, x_star, v)))
    return max(lam[0].real, lam[1].real)


def existence_threshold(params: PotentialParams, x_star: float) -> float:
    """判别式为零时的能量"""
    q2, q1, q0 = vstar_energy_coeffs(params, x_star)
    return q0 - q1 * q1 / (4.0 * q2)


def thresholds(params: PotentialParams) -> ThresholdReport:
    params.require_positive()
    report = landscape(params)
    x_b = _barrier_x(params)
    e_exist = existence_threshold(params, x_b)
    e_barrier = report.barrier_height

    g = lambda e: _max_real_part(params, x_b, e) + STABILITY_MARGIN
    lo, hi = e_exist, max(e_barrier, e_exist + 1.0)
    if g(lo) < 0:
        e_stable = e_exist
    else:
        span = hi - lo
        tries = 0
        while g(hi) >= 0 and tries < 8:
            hi += span
            tries += 1
        if g(hi) >= 0:
            logger.warning(f"plus-branch barrier fixed point never stabilizes below E={hi:.6g}")
            e_stable = math.inf
        else:
            e_stable = optimize.bisect(g, lo, hi, xtol=E_TOL, maxiter=200)
            # 取区间右端，保证返回值处判据成立
            for _ in range(10):
                if g(e_stable) < 0:
                    break
                e_stable += E_TOL
    v_stable = _plus_vstar(params, x_b, e_stable) if math.isfinite(e_stable) else math.nan

    wells: List[FixedPointSolution] = []
    e_ref = e_stable if math.isfinite(e_stable) else e_barrier
    for x_well in (0.0, report.beta_plus):
        wells.extend(fixed_points(params, x_well, e_ref))

    logger.info(
        f"thresholds: β₋={x_b:.6f} e_exist={e_exist:.6f} e_stable={e_stable:.6f} "
        f"v_stable={v_stable:.6f} e_barrier={e_barrier:.6f}"
    )
    return ThresholdReport(
        params=params,
        barrier_x=x_b,
        e_exist=e_exist,
        e_stable=e_stable,
        v_stable=v_stable,
        e_barrier=e_barrier,
        regimes=[
            EnergyInterval(label=EnergyRegime.NO_FIXED_POINT, lower=None, upper=e_exist),
            EnergyInterval(label=EnergyRegime.EXISTS_UNSTABLE, lower=e_exist, upper=e_stable),
            EnergyInterval(label=EnergyRegime.STABLE_TUNNELING, lower=e_stable, upper=e_barrier),
            EnergyInterval(label=EnergyRegime.ABOVE_BARRIER, lower=e_barrier, upper=None),
        ],
        well_fixed_points=wells,
    )


def regime_of(params: PotentialParams, energy: float, report: Optional[ThresholdReport] = None) -> EnergyRegime:
    """按半开区间 [lower, upper) 归类能量"""
    report = report or thresholds(params)
    if energy < report.e_exist:
        return EnergyRegime.NO_FIXED_POINT
    if energy < report.e_stable:
        return EnergyRegime.EXISTS_UNSTABLE
    if energy < report.e_barrier:
        return EnergyRegime.STABLE_TUNNELING
    return EnergyRegime.ABOVE_BARRIER


def skewness_for_run(params: PotentialParams, energy: float) -> Tuple[float, Optional[str]]:
    """运行所用的偏度：势垒定点 plus 分支；定点不存在时退回 0 并给出警告"""
    x_b = _barrier_x(params)
    sol = solve_vstar(params, x_b, energy)
    v_plus = sol.root("plus")
    if v_plus is None:
        warning = (
            f"no barrier fixed point at E={energy} (discriminant {sol.discriminant:.6g}); skewness set to 0"
        )
        logger.warning(warning)
        return 0.0, warning
    return skewness_at(params, x_b, v_plus), None


def stability_scan(params: PotentialParams, e_min: float, e_max: float, step: float) -> List[Dict[str, Optional[float]]]:
    """势垒定点在能量网格上的扫描，缺失的根留空"""
    x_b = _barrier_x(params)
    n = int(math.floor((e_max - e_min) / step + 1e-9)) + 1
    rows = []
    for i in range(n):
        energy = e_min + i * step
        sol = solve_vstar(params, x_b, energy)
        v_minus, v_plus = sol.root("minus"), sol.root("plus")
        row = {
            "E": energy,
            "discriminant": sol.discriminant,
            "vstar_minus": v_minus,
            "vstar_plus": v_plus,
            "skewness_plus": None,
            "re_lambda1": None,
            "re_lambda2": None,
            "stable": None,
        }
        if v_plus is not None:
            fp = fixed_point(params, x_b, v_plus, sol.discriminant, "plus")
            row.update(
                skewness_plus=fp.skewness,
                re_lambda1=fp.eigenvalues_re[0],
                re_lambda2=fp.eigenvalues_re[1],
                stable=int(fp.stable),
            )
        rows.append(row)
    return rows

