import numpy as np
from numba import njit

from app.core.exceptions import SingularPivot


@njit(cache=True, error_model="numpy")
def factorize(a, b, c):
    """
    Forward-elimination factors of a tridiagonal matrix (Thomas algorithm).

    Parameters
    ----------
    a : ndarray
        Lower diagonal as a length n array (a[0] unused).
    b : ndarray
        Main diagonal, length n.
    c : ndarray
        Upper diagonal as a length n array (c[n-1] unused).

    Returns
    -------
    cp, denom : ndarray
        Modified upper diagonal and elimination pivots.
    """
    n = b.shape[0]
    cp = np.empty(n, dtype=b.dtype)
    denom = np.empty(n, dtype=b.dtype)
    denom[0] = b[0]
    cp[0] = c[0] / denom[0]
    for k in range(1, n):
        denom[k] = b[k] - a[k] * cp[k - 1]
        cp[k] = c[k] / denom[k]
    cp[n - 1] = 0.0
    return cp, denom


@njit(cache=True, error_model="numpy")
def solve_factored(a, cp, denom, d, out):
    """利用预先消元的因子求解，结果写入 out"""
    n = d.shape[0]
    out[0] = d[0] / denom[0]
    for k in range(1, n):
        out[k] = (d[k] - a[k] * out[k - 1]) / denom[k]
    for k in range(n - 2, -1, -1):
        out[k] = out[k] - cp[k] * out[k + 1]
    return out


def check_pivots(denom: np.ndarray) -> None:
    magnitude = np.abs(denom)
    if not np.all(np.isfinite(magnitude)) or magnitude.min() == 0.0:
        k = int(np.argmin(magnitude))
        raise SingularPivot(f"zero or non-finite pivot at row {k}", {"row": k})


def solve_tridiag(a, b, c, d):
    """Solve a tridiagonal system; real or complex, a[0] and c[-1] ignored."""
    dtype = np.result_type(a, b, c, d)
    a, b, c, d = (np.ascontiguousarray(v, dtype=dtype) for v in (a, b, c, d))
    cp, denom = factorize(a, b, c)
    check_pivots(denom)
    return solve_factored(a, cp, denom, d, np.empty_like(d))
