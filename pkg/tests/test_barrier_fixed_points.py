import math

import numpy as np
import pytest

from app.core.exceptions import DegenerateQuartic, NoBarrier
from app.models.schemas import EnergyRegime, MomentState, MomentSystemParams, PotentialParams
from app.physics.barrier_fixed_points import (
    eigen2,
    existence_threshold,
    fixed_points,
    regime_of,
    skewness_at,
    skewness_for_run,
    solve_vstar,
    stability_matrix,
    stability_scan,
    thresholds,
    vstar_energy_coeffs,
)
from app.physics.moment_dynamics import integrate, rhs
from app.physics.quartic_potential import landscape, phi


def jacobian_fd(params, x, v, s, h=1e-6):
    """对 (⟨x⟩, V) 的中心差分线性化，S 保持不变"""
    system = MomentSystemParams(potential=params, energy=50.0, skewness=s)

    def accel(xx, vv):
        d = rhs(MomentState(mean_x=xx, variance=vv), system)
        return np.array([d["d_mean_p"], d["d_variance_rate"]])

    col_x = (accel(x + h, v) - accel(x - h, v)) / (2 * h)
    col_v = (accel(x, v + h) - accel(x, v - h)) / (2 * h)
    return np.column_stack([col_x, col_v])


@pytest.fixture
def report(params):
    return thresholds(params)


def test_existence_threshold(params, report):
    assert report.e_exist == pytest.approx(8.53, abs=0.01)
    assert existence_threshold(params, report.barrier_x) == report.e_exist


def test_stability_threshold(report):
    assert report.e_stable == pytest.approx(10.60, abs=0.02)
    assert report.v_stable == pytest.approx(4.96, abs=0.02)
    assert report.e_exist < report.e_stable < report.e_barrier


def test_regime_intervals_partition_energy_axis(params, report):
    labels = [r.label for r in report.regimes]
    assert labels == [
        EnergyRegime.NO_FIXED_POINT,
        EnergyRegime.EXISTS_UNSTABLE,
        EnergyRegime.STABLE_TUNNELING,
        EnergyRegime.ABOVE_BARRIER,
    ]
    assert regime_of(params, 8.0, report) is EnergyRegime.NO_FIXED_POINT
    assert regime_of(params, 9.0, report) is EnergyRegime.EXISTS_UNSTABLE
    assert regime_of(params, 14.95, report) is EnergyRegime.STABLE_TUNNELING
    assert regime_of(params, 19.63, report) is EnergyRegime.ABOVE_BARRIER
    assert regime_of(params, report.e_exist, report) is EnergyRegime.EXISTS_UNSTABLE


def test_no_roots_below_existence(params, report):
    sol = solve_vstar(params, report.barrier_x, 8.0)
    assert sol.discriminant < 0
    assert sol.roots == []


def test_plus_branch_stable_above_threshold(params, report):
    solutions = {fp.branch: fp for fp in fixed_points(params, report.barrier_x, 12.0)}
    assert solutions["plus"].stable
    assert max(solutions["plus"].eigenvalues_re) < 0
    below = {fp.branch: fp for fp in fixed_points(params, report.barrier_x, 9.0)}
    assert not below["plus"].stable


def test_q0_equals_potential_at_stationary_points(params):
    report = landscape(params)
    for point in report.stationary_points:
        assert vstar_energy_coeffs(params, point.x)[2] == pytest.approx(phi(params, point.x), abs=1e-9)


def test_fixed_point_residuals_random_energies(params, report):
    rng = np.random.default_rng(20240611)
    for energy in rng.uniform(report.e_exist + 1e-6, 30.0, size=200):
        for fp in fixed_points(params, report.barrier_x, float(energy)):
            system = MomentSystemParams(potential=params, energy=float(energy), skewness=fp.skewness)
            d = rhs(MomentState(mean_x=fp.x_star, variance=fp.v_star), system)
            assert abs(d["d_mean_p"]) < 1e-8
            assert abs(d["d_variance_rate"]) < 1e-8


@pytest.mark.parametrize("x, v, s", [(3.69, 4.96, -1.2), (0.0, 0.3, 0.0), (7.7, 0.8, 2.5)])
def test_stability_matrix_matches_finite_differences(params, x, v, s):
    analytic = stability_matrix(params, x, v, s).as_array()
    numeric = jacobian_fd(params, x, v, s)
    scale = np.maximum(np.abs(analytic), 1.0)
    assert np.all(np.abs(analytic - numeric) / scale < 1e-5)


def test_eigen2_matches_numpy(params):
    m = stability_matrix(params, 3.69, 2.0, skewness_at(params, 3.69, 2.0))
    closed = sorted(eigen2(m), key=lambda z: (z.real, z.imag))
    reference = sorted(np.linalg.eigvals(m.as_array()), key=lambda z: (z.real, z.imag))
    assert np.allclose(closed, reference, rtol=1e-10, atol=1e-10)


def test_scan_rows(params, report):
    rows = stability_scan(params, 8.0, 17.5, 0.01)
    assert len(rows) == math.floor((17.5 - 8.0) / 0.01) + 1
    for row in rows:
        if row["E"] < report.e_exist:
            assert row["vstar_plus"] is None and row["stable"] is None
    assert rows[400]["E"] == pytest.approx(12.0)
    assert rows[400]["stable"] == 1


def test_skewness_fallback_below_existence(params):
    s, warning = skewness_for_run(params, 8.0)
    assert s == 0.0
    assert "no barrier fixed point" in warning


def test_well_fixed_points_exist(report):
    assert {fp.x_star for fp in report.well_fixed_points} >= {0.0}
    assert all(fp.v_star > 0 for fp in report.well_fixed_points)


def test_no_barrier_in_single_well():
    with pytest.raises(NoBarrier):
        thresholds(PotentialParams(a=10.0, b=4.0, c=0.5))


def test_degenerate_quartic():
    with pytest.raises(DegenerateQuartic):
        skewness_at(PotentialParams(a=1.0, b=0.0, c=0.0), 0.0, 1.0)


def test_barrier_fixed_point_persists(params, report):
    energy = 12.0
    fp = {s.branch: s for s in fixed_points(params, report.barrier_x, energy)}["plus"]
    system = MomentSystemParams(potential=params, energy=energy, skewness=fp.skewness)
    series = integrate(MomentState(mean_x=fp.x_star, variance=fp.v_star), system, dt=1e-3, t_end=100.0, stride=1000)
    start = np.array([fp.x_star, 0.0, fp.v_star, 0.0])
    assert np.max(np.abs(series.states - start)) < 1e-6


def test_well_fixed_points_across_energies(params, report):
    wells = (0.0, landscape(params).beta_plus)
    for energy in np.linspace(2.0 * report.e_barrier / 200, 2.0 * report.e_barrier, 200):
        for x_well in wells:
            solutions = fixed_points(params, x_well, float(energy))
            assert solutions, f"no well fixed point at x*={x_well}, E={energy}"
            assert all(fp.v_star > 0 for fp in solutions)


@pytest.mark.parametrize("x, v", [(3.69, 2.0), (3.69, 4.96), (0.0, 0.3), (7.7, 0.8)])
def test_eigen2_trace_and_determinant(params, x, v):
    m = stability_matrix(params, x, v, skewness_at(params, x, v))
    lam1, lam2 = eigen2(m)
    assert lam1 + lam2 == pytest.approx(m.trace, rel=1e-10, abs=1e-10)
    assert lam1 * lam2 == pytest.approx(m.determinant, rel=1e-10, abs=1e-10)
