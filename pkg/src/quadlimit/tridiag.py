"""Thomas algorithm for tridiagonal systems with several right-hand sides."""
from __future__ import annotations

import numpy as np

from .errors import StructureError


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` for tridiagonal ``A``.

    Parameters
    ----------
    lower : (n-1,) array
        Sub-diagonal, ``A[i+1, i]``.
    diag : (n,) array
        Main diagonal.
    upper : (n-1,) array
        Super-diagonal, ``A[i, i+1]``.
    rhs : (n,) or (n, m) array

    No pivoting is done; the systems solved in this package are strictly
    diagonally dominant. A zero pivot raises :class:`StructureError`.
    """
    a = np.asarray(lower, dtype=float)
    b = np.array(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.array(rhs, dtype=float)
    n = b.shape[0]
    squeeze = d.ndim == 1
    if squeeze:
        d = d[:, None]
    cp = np.empty(max(n - 1, 0))
    for i in range(n):
        if i > 0:
            b[i] -= a[i - 1] * cp[i - 1]
            d[i] -= a[i - 1] * d[i - 1]
        if b[i] == 0.0 or not np.isfinite(b[i]):
            raise StructureError(f"singular tridiagonal system at row {i}")
        if i < n - 1:
            cp[i] = c[i] / b[i]
        d[i] /= b[i]
    for i in range(n - 2, -1, -1):
        d[i] -= cp[i] * d[i + 1]
    return d[:, 0] if squeeze else d
