"""Small dense and banded complex linear-algebra kernels.

The dense eigensolvers delegate to LAPACK; the almost-banded solver uses a
sparse LU factorization.  ``sigma_min_rect`` computes the smallest singular
value of a tall matrix from a Householder QR factor by inverse subspace
iteration with triangular solves, so the Gram product is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, SingularSystemError


def _as_dense(A):
    if sp.issparse(A):
        return A.toarray()
    return np.asarray(A)


def eig_hermitian(A, herm_tol=1e-12):
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    A = _as_dense(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    if np.abs(A - A.conj().T).max() > herm_tol * scale:
        raise ValueError("matrix is not Hermitian")
    return sla.eigh((A + A.conj().T) / 2)


def eig_general(A, vectors=False):
    """Eigenvalues (and optionally right eigenvectors) of a square matrix."""
    A = _as_dense(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        if vectors:
            return sla.eig(A, check_finite=False)
        return sla.eigvals(A, check_finite=False)
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK failure is rare
        raise ConvergenceError(str(exc)) from exc


def eig_diag_pencil(A, d, vectors=True):
    """Solve  A x = lam diag(d) x  for positive d by reduction to  diag(d)^-1 A."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("pencil diagonal must be positive")
    return eig_general(np.asarray(A) / d[:, None], vectors=vectors)


@dataclass(frozen=True)
class AlmostBandedSys:
    """Square sparse matrix made of a banded body and a few dense rows.

    ``matrix`` is any scipy sparse matrix; the bandwidths and dense-row count
    are bookkeeping used for diagnostics only.
    """

    matrix: sp.spmatrix
    bl: int = 0
    bu: int = 0
    dense_rows: int = 0

    @property
    def n(self):
        return self.matrix.shape[0]


def solve_almost_banded(S, rhs, pivot_tol=None):
    """Solve  S x = rhs  (rhs may have several columns).

    Raises :class:`SingularSystemError` when the LU factor has a pivot below
    ``pivot_tol`` relative to the largest one (default 64 * n * eps).
    """
    A = S.matrix if isinstance(S, AlmostBandedSys) else S
    A = sp.csc_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValueError("system must be square")
    if pivot_tol is None:
        pivot_tol = 64 * n * np.finfo(float).eps
    try:
        lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
    except (RuntimeError, SystemError) as exc:
        raise SingularSystemError(f"sparse LU failed: {exc}") from exc
    piv = np.abs(lu.U.diagonal())
    if piv.size == 0 or piv.min() <= pivot_tol * piv.max():
        raise SingularSystemError("numerically singular system")
    b = np.asarray(rhs, dtype=complex)
    x = lu.solve(b if A.dtype == complex else b)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("non-finite solution")
    return x


def _inverse_subspace_sigma(solve_rh, solve_r, matvec_r, n, iters, rtol, block, seed):
    """Inverse subspace iteration on R^* R; returns (estimate, converged).

    Each estimate is the smallest singular value of R X for an orthonormal
    X, hence never below sigma_min(R).
    """
    b = min(block, n)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, b)) + 1j * rng.standard_normal((n, b))
    X, _ = np.linalg.qr(X)
    prev = None
    with np.errstate(all="ignore"):
        for _ in range(iters):
            Z = solve_r(solve_rh(X))
            if not np.all(np.isfinite(Z)):
                return 0.0, True
            X, _ = np.linalg.qr(Z)
            est = np.linalg.svd(matvec_r(X), compute_uv=False)[-1]
            if prev is not None and abs(est - prev) <= rtol * prev:
                return float(est), True
            prev = est
    return float(prev), False


def sigma_min_rect(A, iters=20, rtol=1e-12, block=3, seed=0):
    """Smallest singular value of a tall matrix (rows >= cols).

    Householder QR of A, then inverse subspace iteration on R^* R using two
    triangular solves per step and Rayleigh-Ritz on R X.  Falls back to a
    dense SVD of R if the iteration stalls.
    """
    A = _as_dense(A)
    m, n = A.shape
    if m < n:
        raise ValueError("need rows >= cols")
    if n == 0:
        return 0.0
    R = sla.qr(A, mode="r", check_finite=False)[0][:n, :n]
    if np.abs(np.diag(R)).min() == 0.0:
        return 0.0
    est, ok = _inverse_subspace_sigma(
        lambda X: sla.solve_triangular(R, X, trans="C", check_finite=False),
        lambda Y: sla.solve_triangular(R, Y, check_finite=False),
        lambda X: R @ X,
        n,
        iters,
        rtol,
        block,
        seed,
    )
    if ok:
        return est
    return float(min(est, np.linalg.svd(R, compute_uv=False)[-1]))


def banded_qr_r(cols, lower, panel=64):
    """Upper band of R from a Householder QR of a tall lower-banded matrix.

    ``cols[j, i]`` holds A[j + i, j] (column j occupies rows j..j+lower, and
    A has ncols + lower rows).  Returns ``ab`` in the upper-band layout of
    :func:`scipy.linalg.solve_banded` with ``ab[lower + i - j, j] = R[i, j]``.

    Columns are processed in panels of width ``panel``: each panel touches
    only a dense (panel + lower) square window, factored by LAPACK, and
    passes a lower x lower block of updated rows on to the next panel.
    """
    cols = np.asarray(cols, dtype=complex)
    n = cols.shape[0]
    L = lower + 1
    ab = np.zeros((L, n), dtype=complex)
    carry = np.zeros((lower, lower), dtype=complex)
    for j in range(0, n, panel):
        b = min(panel, n - j)
        m = b + lower
        w = min(m, n - j)
        D = np.zeros((m, w), dtype=complex)
        for c in range(w):
            D[c : c + L, c] = cols[j + c, : m - c]
        if j:
            # rows already rotated by the previous panel
            t = min(lower, w)
            D[:lower, :t] = carry[:, :t]
        Q, _ = sla.qr(D[:, :b], check_finite=False)
        D = Q.conj().T @ D
        for c in range(L):
            k = np.arange(min(b, w - c))
            ab[lower - c, j + k + c] = D[k, k + c]
        if w > b:
            carry = np.zeros((lower, lower), dtype=complex)
            carry[:, : w - b] = D[b:, b:]
    return ab


def sigma_min_banded(cols, lower, iters=60, rtol=1e-10, block=8, seed=0):
    """Smallest singular value of a tall lower-banded matrix (see :func:`banded_qr_r`).

    Banded Householder QR followed by inverse subspace iteration with banded
    triangular solves; if the iteration stalls the smallest eigenvalue of
    the banded Gram matrix R^* R is used instead.
    """
    ab = banded_qr_r(cols, lower)
    n = ab.shape[1]
    if np.abs(ab[lower]).min() == 0.0:
        return 0.0
    # R^* is lower banded: abl[i - j, j] = conj(R[j, i])
    abl = np.zeros_like(ab)
    diags = range(min(lower, n - 1) + 1)
    for d in diags:
        abl[d, : n - d] = np.conj(ab[lower - d, d:])

    def matvec_r(X):
        out = np.zeros_like(X)
        for d in diags:
            out[: n - d] += ab[lower - d, d:, None] * X[d:]
        return out

    est, ok = _inverse_subspace_sigma(
        lambda X: sla.solve_banded((lower, 0), abl, X, check_finite=False),
        lambda Y: sla.solve_banded((0, lower), ab, Y, check_finite=False),
        matvec_r,
        n,
        iters,
        rtol,
        block,
        seed,
    )
    if ok:
        return est
    # Gram fallback: smallest eigenvalue of the banded Hermitian R^* R
    R = sp.diags([ab[lower - d, d:] for d in diags], list(diags), shape=(n, n), format="csr")
    G = (R.conj().T @ R).todia()
    band = np.zeros((lower + 1, n), dtype=complex)
    for off, data in zip(G.offsets, G.data):
        if 0 <= off <= lower:
            band[lower - off, off:] = data[off:]
    lam = sla.eig_banded(band, eigvals_only=True, select="i", select_range=(0, 0), check_finite=False)
    return float(min(est, np.sqrt(max(lam[0], 0.0))))

