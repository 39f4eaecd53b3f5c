"""Sparse ultraspherical (Gegenbauer) spectral operators on [-1, 1].

Functions live in the Chebyshev T basis; a k-th derivative maps into the
C^(k) basis, lower-order terms are lifted with conversion operators and
variable coefficients act through banded multiplication matrices.  All
matrices are returned as scipy.sparse CSR.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import legendre


def diff_matrix(k, n):
    """n x n matrix taking T coefficients to C^(k) coefficients of the k-th derivative."""
    if k == 0:
        return sp.identity(n, format="csr")
    j = np.arange(n - k)
    vals = 2.0 ** (k - 1) * math.factorial(k - 1) * (j + k)
    return sp.csr_matrix((vals, (j, j + k)), shape=(n, n))


def conversion_matrix(lam, n):
    """n x n conversion from C^(lam) to C^(lam+1) (lam = 0 means Chebyshev T)."""
    j = np.arange(n)
    if lam == 0:
        main = np.full(n, 0.5)
        main[0] = 1.0
        upper = np.full(max(n - 2, 0), -0.5)
    else:
        main = lam / (lam + j)
        upper = -lam / (lam + j[: max(n - 2, 0)] + 2)
    return sp.diags([main, upper], [0, 2], shape=(n, n), format="csr")


def conversion_chain(lo, hi, n):
    """Conversion from C^(lo) to C^(hi) (identity when lo == hi)."""
    S = sp.identity(n, format="csr")
    for lam in range(lo, hi):
        S = conversion_matrix(lam, n) @ S
    return S


def _x_mult(lam, n):
    """Multiplication by x in the C^(lam) basis (lam = 0: Chebyshev T)."""
    j = np.arange(n)
    if lam == 0:
        # x T_0 = T_1,  x T_k = (T_{k-1} + T_{k+1}) / 2
        lower = np.full(n - 1, 0.5)
        lower[0] = 1.0
        upper = np.full(n - 1, 0.5)
        return sp.diags([lower, upper], [-1, 1], shape=(n, n), format="csr")
    lower = (j[:-1] + 1) / (2.0 * (j[:-1] + lam))
    upper = (j[1:] + 2 * lam - 1) / (2.0 * (j[1:] + lam))
    return sp.diags([lower, upper], [-1, 1], shape=(n, n), format="csr")


def mult_matrix(a, lam, n):
    """n x n multiplication by a(x) = sum a_i T_i(x) in the C^(lam) basis."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    deg = len(a) - 1
    if deg == 0:
        return a[0] * sp.identity(n, format="csr", dtype=complex)
    if lam == 0:
        # T_i T_k = (T_{i+k} + T_{|i-k|}) / 2
        i, k = np.meshgrid(np.arange(deg + 1), np.arange(n), indexing="ij")
        vals = 0.5 * np.broadcast_to(a[:, None], i.shape)
        rows = np.concatenate([(i + k).ravel(), np.abs(i - k).ravel()])
        cols = np.concatenate([k.ravel(), k.ravel()])
        data = np.concatenate([vals.ravel(), vals.ravel()])
        keep = rows < n
        return sp.csr_matrix((data[keep], (rows[keep], cols[keep])), shape=(n, n))
    N = n + deg + 1
    X = _x_mult(lam, N).astype(complex)
    Id = sp.identity(N, format="csr", dtype=complex)
    # Clenshaw: b_k = a_k I + 2 X b_{k+1} - b_{k+2}
    b1 = sp.csr_matrix((N, N), dtype=complex)
    b2 = sp.csr_matrix((N, N), dtype=complex)
    for k in range(deg, 0, -1):
        b1, b2 = a[k] * Id + 2 * (X @ b1) - b2, b1
    M = a[0] * Id + X @ b1 - b2
    return sp.csr_matrix(M[:n, :n])


@lru_cache(maxsize=128)
def gauss_legendre(m):
    """Gauss-Legendre nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = legendre.leggauss(m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gegenbauer_vander(x, lam, n):
    """Values C^(lam)_k(x) for k < n, shape (len(x), n), by three-term recurrence."""
    x = np.asarray(x, dtype=float)
    V = np.zeros((x.size, max(n, 0)))
    if n == 0:
        return V
    V[:, 0] = 1.0
    if n > 1:
        V[:, 1] = 2 * lam * x
    for k in range(1, n - 1):
        V[:, k + 1] = (2 * (k + lam) * x * V[:, k] - (k + 2 * lam - 1) * V[:, k - 1]) / (k + 1)
    return V


def _double_factorial_odd(d):
    # (2d - 1)!!, with the empty product for d = 0
    out = 1.0
    for i in range(1, 2 * d, 2):
        out *= i
    return out


def legendre_deriv_vander(x, n, d):
    """d-th derivatives of P_0..P_{n-1} at x, shape (len(x), n).

    Uses P_j^(d) = (2d-1)!! C^(d+1/2)_{j-d}.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    V = np.zeros((x.size, n))
    if n > d:
        V[:, d:] = _double_factorial_odd(d) * gegenbauer_vander(x, d + 0.5, n - d)
    return V
