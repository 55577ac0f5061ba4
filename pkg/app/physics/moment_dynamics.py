"""
Reduced four-dimensional moment system for (⟨x⟩, ⟨p⟩, V, dV/dt).

The hierarchy is closed with the Gaussian kurtosis K = 3V² and a skewness S
that stays fixed for the whole run; E enters only as a constant parameter,
so it is conserved by construction.
"""
import math
from typing import Dict

import numpy as np
from loguru import logger
from numba import njit

from app.core.exceptions import NonFiniteState, VarianceCollapse
from app.models.schemas import MomentSeries, MomentState, MomentSystemParams

VARIANCE_FLOOR = 1e-12

_OK, _COLLAPSE, _NONFINITE = 0, 1, 2


@njit(cache=True)
def _derivatives(x, p, v, w, a, b, c, energy, s):
    d_mean_p = -a * x + b * (v + x * x) - c * (s + 3.0 * v * x + x * x * x)
    d_variance_rate = (
        4.0 * energy
        - 2.0 * p * p
        - a * (4.0 * v + 2.0 * x * x)
        + b * (10.0 / 3.0 * s + 8.0 * v * x + 4.0 / 3.0 * x * x * x)
        - c * (9.0 * v * v + 10.0 * s * x + 12.0 * v * x * x + x * x * x * x)
    )
    return p, d_mean_p, w, d_variance_rate


@njit(cache=True)
def _march(y0, a, b, c, energy, s, dt, n_steps, stride, floor):
    """经典四阶 Runge-Kutta；返回 (采样, 状态码, 末步号, 末步方差)"""
    n_samples = n_steps // stride + 1
    if n_steps % stride != 0:
        n_samples += 1
    out = np.empty((n_samples, 4))
    x, p, v, w = y0[0], y0[1], y0[2], y0[3]
    out[0, 0], out[0, 1], out[0, 2], out[0, 3] = x, p, v, w
    k = 1
    h = 0.5 * dt
    for step in range(1, n_steps + 1):
        k1x, k1p, k1v, k1w = _derivatives(x, p, v, w, a, b, c, energy, s)
        k2x, k2p, k2v, k2w = _derivatives(x + h * k1x, p + h * k1p, v + h * k1v, w + h * k1w, a, b, c, energy, s)
        k3x, k3p, k3v, k3w = _derivatives(x + h * k2x, p + h * k2p, v + h * k2v, w + h * k2w, a, b, c, energy, s)
        k4x, k4p, k4v, k4w = _derivatives(x + dt * k3x, p + dt * k3p, v + dt * k3v, w + dt * k3w, a, b, c, energy, s)
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        w += dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        if not (np.isfinite(x) and np.isfinite(p) and np.isfinite(v) and np.isfinite(w)):
            return out[:k].copy(), _NONFINITE, step, v
        if v <= floor:
            return out[:k].copy(), _COLLAPSE, step, v
        if step % stride == 0 or step == n_steps:
            out[k, 0], out[k, 1], out[k, 2], out[k, 3] = x, p, v, w
            k += 1
    return out, _OK, n_steps, v


def rhs(state: MomentState, sys: MomentSystemParams) -> Dict[str, float]:
    pot = sys.potential
    d_x, d_p, d_v, d_w = _derivatives(
        state.mean_x, state.mean_p, state.variance, state.variance_rate,
        pot.a, pot.b, pot.c, sys.energy, sys.skewness,
    )
    return {"d_mean_x": d_x, "d_mean_p": d_p, "d_variance": d_v, "d_variance_rate": d_w}


def momentum_variance(state: MomentState, sys: MomentSystemParams) -> float:
    """Vp = 2E − 2⟨φ⟩ − ⟨p⟩²；仅作诊断，负值不报错"""
    return float(_vp(np.array([[state.mean_x, state.mean_p, state.variance, state.variance_rate]]), sys)[0])


def _vp(states: np.ndarray, sys: MomentSystemParams) -> np.ndarray:
    pot, s = sys.potential, sys.skewness
    x, p, v = states[:, 0], states[:, 1], states[:, 2]
    mean_phi = (
        0.5 * pot.a * (v + x**2)
        - pot.b / 3.0 * (x**3 + 3.0 * x * v + s)
        + 0.25 * pot.c * (x**4 + 6.0 * x**2 * v + 4.0 * s * x + MomentSystemParams.KURTOSIS_FACTOR * v**2)
    )
    return 2.0 * sys.energy - 2.0 * mean_phi - p**2


def integrate(
        init: MomentState,
        sys: MomentSystemParams,
        dt: float = 1e-3,
        t_end: float = 100.0,
        stride: int = 10,
) -> MomentSeries:
    """固定步长 RK4 积分，每 stride 步采样（含 t=0 与 t_end）"""
    if not dt > 0 or not t_end > 0 or stride < 1:
        raise ValueError(f"need dt > 0, t_end > 0, stride >= 1; got dt={dt}, t_end={t_end}, stride={stride}")
    n_steps = max(1, int(round(t_end / dt)))
    if not math.isclose(n_steps * dt, t_end, rel_tol=1e-9):
        logger.warning(f"t_end={t_end} is not a multiple of dt={dt}; integrating to {n_steps * dt}")

    pot = sys.potential
    samples, status, step, last_v = _march(
        init.as_array(), pot.a, pot.b, pot.c, sys.energy, sys.skewness,
        dt, n_steps, stride, VARIANCE_FLOOR,
    )
    if status == _COLLAPSE:
        raise VarianceCollapse(step * dt, float(last_v))
    if status == _NONFINITE:
        raise NonFiniteState(step * dt)

    indices = np.arange(0, n_steps + 1, stride)
    if indices[-1] != n_steps:
        indices = np.append(indices, n_steps)
    times = indices * dt

    vp = _vp(samples, sys)
    if np.any(vp < 0):
        logger.warning(f"momentum-variance diagnostic negative at {int(np.sum(vp < 0))} samples (min {vp.min():.3e})")
    return MomentSeries(times=times, states=samples, vp=vp)
