"""
Implicit-shift QL eigensolver for real symmetric tridiagonal matrices.

Follows the classical tqli scheme: look for a negligible off-diagonal element
to split the matrix, apply a Wilkinson-type shift, then chase the bulge with
plane rotations, accumulating them into the eigenvector matrix.
"""
import logging
import math

import numpy as np

from .exceptions import ConvergenceError, DimensionError

logger = logging.getLogger(__name__)

MAX_SWEEPS = 30


def tridiagonal_eigh(diagonal, offdiagonal, max_sweeps: int = MAX_SWEEPS):
    """Eigenpairs of the symmetric tridiagonal matrix T(diagonal, offdiagonal).

    ``offdiagonal[i]`` couples rows i and i+1 (length n-1). Returns eigenvalues
    sorted ascending and a matrix whose columns are orthonormal eigenvectors.
    """
    d = np.array(diagonal, dtype=float)
    n = d.size
    off = np.asarray(offdiagonal, dtype=float)
    if off.size != n - 1:
        raise DimensionError(f"expected {n - 1} off-diagonal entries, got {off.size}")
    e = np.zeros(n)
    e[: n - 1] = off
    # rows of zt are eigenvector columns, kept contiguous for the rotations
    zt = np.eye(n)
    eps = np.finfo(float).eps
    tiny = np.finfo(float).tiny

    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= tiny:
                    break
                m += 1
            if m == l:
                break
            if sweeps == max_sweeps:
                raise ConvergenceError(
                    f"QL iteration did not converge for eigenvalue {l} after {sweeps} sweeps "
                    f"(residual off-diagonal {abs(e[l]):.3e})",
                    index=l,
                    iterations=sweeps,
                )
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                upper = zt[i + 1].copy()
                zt[i + 1] = s * zt[i] + c * upper
                zt[i] = c * zt[i] - s * upper
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
        logger.debug(f"eigenvalue {l} converged after {sweeps} sweeps")

    order = np.argsort(d, kind="stable")
    return d[order], zt[order].T.copy()
