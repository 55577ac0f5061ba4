"""
Quartic potential φ(x) = (a/2)x² − (b/3)x³ + (c/4)x⁴ and its landscape.

For fixed positive a and b the shape is controlled by c through two
critical couplings: c0′ = b²/4a (the barrier and the second well appear)
and c0 = 2b²/9a (the two minima are degenerate).
"""
import math
from typing import Dict, List, Union

import numpy as np

from app.models.schemas import (
    LandscapeRegime,
    PotentialParams,
    PotentialReport,
    StationaryKind,
    StationaryPoint,
)

ArrayLike = Union[float, np.ndarray]

# 分类容差
REGIME_RTOL = 1e-12
INFLECTION_RTOL = 1e-10


def phi(params: PotentialParams, x: ArrayLike) -> ArrayLike:
    return 0.5 * params.a * x**2 - params.b / 3.0 * x**3 + 0.25 * params.c * x**4


def dphi(params: PotentialParams, x: ArrayLike) -> ArrayLike:
    return params.a * x - params.b * x**2 + params.c * x**3


def d2phi(params: PotentialParams, x: ArrayLike) -> ArrayLike:
    return params.a - 2.0 * params.b * x + 3.0 * params.c * x**2


def evaluate(params: PotentialParams, x: float) -> Dict[str, float]:
    """势能及其一阶、二阶导数"""
    return {"phi": phi(params, x), "dphi": dphi(params, x), "d2phi": d2phi(params, x)}


def critical_couplings(params: PotentialParams) -> tuple[float, float]:
    """返回 (c0, c0′)"""
    b2 = params.b**2
    return 2.0 * b2 / (9.0 * params.a), b2 / (4.0 * params.a)


def classify(params: PotentialParams) -> LandscapeRegime:
    c0, c0_prime = critical_couplings(params)
    c = params.c
    if math.isclose(c, c0_prime, rel_tol=REGIME_RTOL, abs_tol=0.0):
        return LandscapeRegime.INFLECTION
    if c > c0_prime:
        return LandscapeRegime.SINGLE_WELL
    if math.isclose(c, c0, rel_tol=REGIME_RTOL, abs_tol=0.0):
        return LandscapeRegime.SYMMETRIC
    if c > c0:
        return LandscapeRegime.SHALLOW_RIGHT
    return LandscapeRegime.DEEP_RIGHT


def _kind(params: PotentialParams, x: float) -> StationaryKind:
    curvature = d2phi(params, x)
    if abs(curvature) < INFLECTION_RTOL * params.a:
        return StationaryKind.INFLECTION
    return StationaryKind.MINIMUM if curvature > 0 else StationaryKind.MAXIMUM


def _point(params: PotentialParams, x: float) -> StationaryPoint:
    return StationaryPoint(x=x, kind=_kind(params, x), phi=phi(params, x))


def landscape(params: PotentialParams) -> PotentialReport:
    """驻点、临界耦合、形状分类、势垒高度与两阱能差"""
    params.require_positive()
    a, b, c = params.a, params.b, params.c
    c0, c0_prime = critical_couplings(params)
    regime = classify(params)

    points: List[StationaryPoint] = [_point(params, 0.0)]
    beta_minus = beta_plus = None
    if regime is LandscapeRegime.INFLECTION:
        # β± 合并为 b/2c；直接取合并值，避免判别式舍入为负
        beta_minus = beta_plus = b / (2.0 * c)
        points.append(StationaryPoint(x=beta_minus, kind=StationaryKind.INFLECTION, phi=phi(params, beta_minus)))
    elif regime is not LandscapeRegime.SINGLE_WELL:
        root = math.sqrt(max(b * b - 4.0 * a * c, 0.0))
        beta_minus = (b - root) / (2.0 * c)
        beta_plus = (b + root) / (2.0 * c)
        points.extend([_point(params, beta_minus), _point(params, beta_plus)])

    alpha_minus = alpha_plus = None
    if regime is LandscapeRegime.SYMMETRIC:
        alpha_minus = alpha_plus = 2.0 * b / (3.0 * c)
    elif regime is LandscapeRegime.DEEP_RIGHT:
        root = (2.0 / c) * math.sqrt(max(b * b / 9.0 - a * c / 2.0, 0.0))
        alpha_minus = 2.0 * b / (3.0 * c) - root
        alpha_plus = 2.0 * b / (3.0 * c) + root

    barrier_height = delta = None
    if regime in (LandscapeRegime.SHALLOW_RIGHT, LandscapeRegime.SYMMETRIC, LandscapeRegime.DEEP_RIGHT):
        barrier_height = phi(params, beta_minus)
        delta = -phi(params, beta_plus)

    return PotentialReport(
        params=params,
        c0=c0,
        c0_prime=c0_prime,
        stationary_points=points,
        beta_minus=beta_minus,
        beta_plus=beta_plus,
        alpha_minus=alpha_minus,
        alpha_plus=alpha_plus,
        barrier_height=barrier_height,
        delta=delta,
        regime=regime,
        regime_name=regime.label,
    )
