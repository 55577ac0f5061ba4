"""
Crank-Nicolson propagation of the 1-D Schrödinger equation (m = ħ = 1).

H is the three-point central-difference Hamiltonian on the interior of a
uniform grid with Dirichlet walls: diagonal 1/dx² + φ(x_i), off-diagonal
−1/(2dx²). Energies are measured with the same stencil, so the Cayley form
(I + i dt H/2)⁻¹(I − i dt H/2) conserves both norm and energy up to round-off.
"""
from typing import Callable, Dict, List, Optional

import numpy as np
from loguru import logger
from numba import njit
from scipy import optimize

from app.core.exceptions import DriftBudgetExceeded
from app.models.schemas import (
    DriftSummary,
    GaussianSpec,
    Grid,
    Observables,
    ObservableSeries,
    PotentialParams,
    WaveField,
)
from app.physics.gaussian_packet import Branch, sample_on_grid, variance_for_energy
from app.physics.quartic_potential import phi
from app.physics.tridiag import check_pivots, factorize, solve_factored

SnapshotSink = Callable[[float, WaveField], None]


def build_grid(x_min: float = -100.0, x_max: float = 100.0, n: int = 100_000) -> Grid:
    return Grid(x_min=x_min, x_max=x_max, n=n)


@njit(cache=True)
def _apply_explicit(psi, hdiag, off, alpha, rhs):
    """rhs = (I − αH)ψ 在内点上，α = i·dt/2"""
    m = rhs.shape[0]
    for j in range(m):
        left = psi[j]
        right = psi[j + 2]
        rhs[j] = (1.0 - alpha * hdiag[j]) * psi[j + 1] - alpha * off * (left + right)
    return rhs


class CrankNicolsonPropagator:
    """对固定 (势能, dt, 网格) 预先完成消元的 Crank-Nicolson 步进器"""

    def __init__(self, grid: Grid, params: PotentialParams, dt: float):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.grid = grid
        self.params = params
        self.dt = dt
        inv_dx2 = 1.0 / grid.dx**2
        x_inner = grid.x[1:-1]
        self._hdiag = inv_dx2 + phi(params, x_inner)
        self._off = -0.5 * inv_dx2
        self._alpha = 0.5j * dt

        m = x_inner.size
        self._lower = np.full(m, self._alpha * self._off, dtype=np.complex128)
        self._lower[0] = 0.0
        upper = np.full(m, self._alpha * self._off, dtype=np.complex128)
        upper[-1] = 0.0
        diag = (1.0 + self._alpha * self._hdiag).astype(np.complex128)
        self._cp, self._denom = factorize(self._lower, diag, upper)
        check_pivots(self._denom)
        self._rhs = np.empty(m, dtype=np.complex128)

    def step_inplace(self, psi: np.ndarray) -> np.ndarray:
        _apply_explicit(psi, self._hdiag, self._off, self._alpha, self._rhs)
        solve_factored(self._lower, self._cp, self._denom, self._rhs, psi[1:-1])
        psi[0] = psi[-1] = 0.0
        return psi

    def step(self, field: WaveField) -> WaveField:
        psi = np.array(field.amplitudes, dtype=np.complex128, copy=True)
        return WaveField(grid=field.grid, amplitudes=self.step_inplace(psi))


def crank_nicolson_step(psi: WaveField, params: PotentialParams, dt: float) -> WaveField:
    return CrankNicolsonPropagator(psi.grid, params, dt).step(psi)


def measure(psi: WaveField, params: PotentialParams) -> Dict[str, float]:
    """梯形求积的观测量；能量使用与传播子相同的差分格式"""
    grid = psi.grid
    return _measure(psi.amplitudes, grid.x, grid.dx, phi(params, grid.x)).model_dump()


def _measure(amp: np.ndarray, x: np.ndarray, dx: float, potential: np.ndarray) -> Observables:
    density = np.abs(amp) ** 2
    norm = dx * density.sum()
    mean_x = dx * np.dot(x, density) / norm
    mean_x2 = dx * np.dot(x * x, density) / norm
    mean_p = dx * np.imag(np.vdot(amp[1:-1], amp[2:] - amp[:-2])) / (2.0 * dx) / norm
    kinetic = np.sum(np.abs(np.diff(amp)) ** 2) / (2.0 * dx)
    energy = (kinetic + dx * np.dot(potential, density)) / norm
    return Observables(
        norm=float(norm),
        mean_x=float(mean_x),
        mean_p=float(mean_p),
        variance=float(mean_x2 - mean_x * mean_x),
        energy=float(energy),
    )


def edge_probability(psi: WaveField, width: float) -> float:
    """距任一墙壁 width 以内的概率"""
    grid = psi.grid
    return _edge_probability(psi.amplitudes, grid.x, grid.dx, grid.x_min, grid.x_max, width)


def _edge_probability(amp, x, dx, x_min, x_max, width) -> float:
    mask = (x < x_min + width) | (x > x_max - width)
    return float(dx * np.sum(np.abs(amp[mask]) ** 2))


def evolve(
        psi0: WaveField,
        params: PotentialParams,
        dt: float = 0.01,
        t_end: float = 100.0,
        stride: int = 10,
        drift_budget: float = 1e-9,
        drift_warn: float = 1e-10,
        edge_width: float = 10.0,
        snapshot_every: Optional[int] = None,
        snapshot_sink: Optional[SnapshotSink] = None,
) -> ObservableSeries:
    """重复 Crank-Nicolson 步进，每 stride 步采样并累计漂移"""
    if stride < 1 or not t_end > 0:
        raise ValueError(f"need stride >= 1 and t_end > 0; got stride={stride}, t_end={t_end}")
    grid = psi0.grid
    propagator = CrankNicolsonPropagator(grid, params, dt)
    n_steps = max(1, int(round(t_end / dt)))
    x, dx = grid.x, grid.dx
    potential = phi(params, x)

    psi = np.array(psi0.amplitudes, dtype=np.complex128, copy=True)
    samples: List[Observables] = []
    times: List[float] = []
    drift = DriftSummary()
    warned = False

    def record(step: int) -> None:
        nonlocal warned
        t = step * dt
        obs = _measure(psi, x, dx, potential)
        samples.append(obs)
        times.append(t)
        drift.max_norm_drift = max(drift.max_norm_drift, abs(obs.norm - samples[0].norm), abs(obs.norm - 1.0))
        drift.max_energy_drift = max(drift.max_energy_drift, abs(obs.energy - samples[0].energy))
        drift.max_edge_probability = max(
            drift.max_edge_probability, _edge_probability(psi, x, dx, grid.x_min, grid.x_max, edge_width)
        )
        worst = max(drift.max_norm_drift, drift.max_energy_drift)
        if worst > drift_budget:
            raise DriftBudgetExceeded(
                f"drift {worst:.3e} exceeds budget {drift_budget:.1e} at t={t:.6g}",
                {"t": t, **drift.model_dump()},
            )
        if worst > drift_warn and not warned:
            logger.warning(f"drift {worst:.3e} above warning level {drift_warn:.1e} at t={t:.6g}")
            warned = True

    def snapshot(step: int) -> None:
        if snapshot_sink is not None and snapshot_every and step % snapshot_every == 0:
            snapshot_sink(step * dt, WaveField(grid=grid, amplitudes=psi.copy()))

    record(0)
    snapshot(0)
    for step in range(1, n_steps + 1):
        propagator.step_inplace(psi)
        if step % stride == 0 or step == n_steps:
            record(step)
        snapshot(step)

    logger.info(
        f"evolve: {n_steps} steps, norm drift {drift.max_norm_drift:.3e}, "
        f"energy drift {drift.max_energy_drift:.3e}, edge prob {drift.max_edge_probability:.3e}"
    )
    return ObservableSeries(
        times=np.asarray(times),
        norm=np.array([s.norm for s in samples]),
        mean_x=np.array([s.mean_x for s in samples]),
        mean_p=np.array([s.mean_p for s in samples]),
        variance=np.array([s.variance for s in samples]),
        energy=np.array([s.energy for s in samples]),
        drift=drift,
    )


def discrete_energy(params: PotentialParams, spec: GaussianSpec, grid: Grid) -> float:
    field = sample_on_grid(spec, grid)
    return _measure(field.amplitudes, grid.x, grid.dx, phi(params, grid.x)).energy


def energy_matched_packet(
        params: PotentialParams,
        x0: float,
        k0: float,
        energy: float,
        grid: Grid,
        branch: Branch = "small",
) -> tuple[WaveField, float, bool]:
    """调节方差使离散能量与目标能量一致

    解析初值总用 general 公式，它与网格上测得的 ⟨H⟩ 同源。
    第三个返回值表示是否找到了匹配根；未匹配时退回解析方差。
    """
    v_guess = variance_for_energy(params, x0, k0, energy, branch, "general")
    f = lambda v: discrete_energy(params, GaussianSpec(x0=x0, v0=v, k0=k0), grid) - energy

    f_guess = f(v_guess)
    if f_guess == 0.0:
        return sample_on_grid(GaussianSpec(x0=x0, v0=v_guess, k0=k0), grid), v_guess, True

    # 沿使能量差变号的方向扩展括区
    for rel in (1e-4, 1e-3, 1e-2, 5e-2, 0.2):
        for v_other in (v_guess * (1.0 - rel), v_guess * (1.0 + rel)):
            if f(v_other) * f_guess < 0:
                lo, hi = sorted((v_guess, v_other))
                v0 = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-14)
                logger.debug(f"energy-matched packet: analytic v0={v_guess:.12g}, discrete v0={v0:.12g}")
                return sample_on_grid(GaussianSpec(x0=x0, v0=v0, k0=k0), grid), v0, True

    logger.warning(
        f"could not bracket discrete energy {energy} near v0={v_guess:.6g}; using analytic variance"
    )
    return sample_on_grid(GaussianSpec(x0=x0, v0=v_guess, k0=k0), grid), v_guess, False
