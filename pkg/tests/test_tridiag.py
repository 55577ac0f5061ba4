import numpy as np
import pytest
from scipy.linalg import solve_banded

from app.core.exceptions import SingularPivot
from app.physics.tridiag import solve_tridiag


def _banded(a, b, c):
    ab = np.zeros((3, b.size), dtype=np.result_type(a, b, c))
    ab[0, 1:] = c[:-1]
    ab[1] = b
    ab[2, :-1] = a[1:]
    return ab


@pytest.mark.parametrize("n", [2, 7, 500])
def test_complex_system_matches_banded_solver(n):
    rng = np.random.default_rng(n)
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    b = 4.0 + rng.normal(size=n) + 1j * rng.normal(size=n)
    d = rng.normal(size=n) + 1j * rng.normal(size=n)
    x = solve_tridiag(a, b, c, d)
    assert np.allclose(x, solve_banded((1, 1), _banded(a, b, c), d), rtol=1e-12, atol=1e-12)


def test_real_system():
    n = 50
    a = np.full(n, -1.0)
    c = np.full(n, -1.0)
    b = np.full(n, 2.5)
    d = np.linspace(0.0, 1.0, n)
    x = solve_tridiag(a, b, c, d)
    assert x.dtype == np.float64
    assert np.allclose(x, solve_banded((1, 1), _banded(a, b, c), d))


def test_zero_pivot():
    with pytest.raises(SingularPivot) as info:
        solve_tridiag(np.ones(3), np.array([0.0, 1.0, 1.0]), np.ones(3), np.ones(3))
    assert info.value.exit_code == 41
