"""Piecewise Chebyshev functions and quasimatrices.

A :class:`Fun` stores, for every subinterval of its breakpoint list, the
Chebyshev coefficients of a polynomial in the reference variable
``t in [-1, 1]``.  A :class:`Quasimatrix` is a tall "matrix" whose columns
are Funs on a shared set of breakpoints; it supports inner products, QR and
an economized SVD.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import fft

from .errors import DomainMismatchError, RankDeficiencyError, ResolutionError

DEFAULT_TOL = 1e-13
MAX_DEGREE = 2**16


# ---------------------------------------------------------------------------
# Chebyshev grids and transforms


def cheb_points1(n):
    """First-kind Chebyshev points on [-1, 1], in increasing order."""
    k = np.arange(n)
    return -np.cos(np.pi * (k + 0.5) / n)


def vals_to_coeffs(values):
    """Chebyshev coefficients from samples at increasing first-kind points.

    Works along axis 0 and accepts complex input.
    """
    values = np.asarray(values)
    n = values.shape[0]
    # dct-II expects decreasing-point ordering
    v = values[::-1]
    if np.iscomplexobj(v):
        c = fft.dct(v.real, type=2, axis=0) + 1j * fft.dct(v.imag, type=2, axis=0)
    else:
        c = fft.dct(v, type=2, axis=0)
    c = c / n
    c[0] = c[0] / 2
    return c


def _cos_sum(a, m):
    """sum_k a_k cos(pi k j / m) for j = 0..m (a padded or cut to m+1)."""
    a = np.asarray(a)
    shape = (m + 1,) + a.shape[1:]
    b = np.zeros(shape, dtype=np.result_type(a.dtype, float))
    k = min(a.shape[0], m + 1)
    b[:k] = a[:k]
    b[0] = 2 * b[0]
    b[m] = 2 * b[m]
    if m == 0:
        return b / 2
    if np.iscomplexobj(b):
        out = fft.dct(b.real, type=1, axis=0) + 1j * fft.dct(b.imag, type=1, axis=0)
    else:
        out = fft.dct(b, type=1, axis=0)
    return out / 2


def cc_values(coeffs, m):
    """Values of a Chebyshev series at the m+1 points cos(pi j / m)."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape[0] > m + 1:
        raise ValueError("grid too coarse for the coefficient length")
    return _cos_sum(coeffs, m)


@lru_cache(maxsize=64)
def clenshaw_curtis(m):
    """Clenshaw-Curtis nodes cos(pi j/m) and weights on [-1, 1].

    Exact for polynomials of degree <= m.
    """
    m = int(m)
    if m == 0:
        return np.array([1.0]), np.array([2.0])
    k = np.arange(m + 1)
    moments = np.zeros(m + 1)
    even = k[k % 2 == 0]
    moments[even] = 2.0 / (1.0 - even.astype(float) ** 2)
    gamma = np.ones(m + 1)
    gamma[0] = gamma[-1] = 0.5
    w = (2.0 / m) * _cos_sum(gamma * moments, m)
    w[0] *= 0.5
    w[-1] *= 0.5
    x = np.cos(np.pi * k / m)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def chop_length(coeffs, tol):
    """Smallest length keeping every coefficient above tol * max(|c|)."""
    c = np.abs(np.asarray(coeffs))
    if c.ndim > 1:
        c = c.max(axis=tuple(range(1, c.ndim)))
    scale = c.max() if c.size else 0.0
    if scale == 0.0:
        return 1
    big = np.nonzero(c > tol * scale)[0]
    return int(big[-1]) + 1


def is_resolved(coeffs, tol, tail=2):
    """Trailing ``tail`` coefficients are below tol relative to the largest."""
    c = np.abs(np.asarray(coeffs))
    if c.ndim > 1:
        c = c.max(axis=tuple(range(1, c.ndim)))
    scale = c.max() if c.size else 0.0
    if scale == 0.0:
        return True
    return bool(np.all(c[-tail:] <= tol * scale))


# ---------------------------------------------------------------------------
# Fun


class Fun:
    """Piecewise Chebyshev representation of a complex function on [a, b].

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing ``t_0 < ... < t_q``.
    pieces : sequence of 1-D arrays
        Chebyshev coefficients on each ``[t_i, t_{i+1}]`` (q arrays).
    tol : float
        Truncation tolerance the representation was built with.
    """

    __slots__ = ("breakpoints", "pieces", "tol")

    def __init__(self, breakpoints, pieces, tol=DEFAULT_TOL):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(pieces) != bp.size - 1:
            raise ValueError("need one coefficient array per subinterval")
        ps = []
        for c in pieces:
            c = np.array(c, dtype=complex).reshape(-1)
            if c.size == 0:
                c = np.zeros(1, dtype=complex)
            c.setflags(write=False)
            ps.append(c)
        bp.setflags(write=False)
        self.breakpoints = bp
        self.pieces = tuple(ps)
        self.tol = tol

    # -- construction helpers -------------------------------------------
    @classmethod
    def constant(cls, value, breakpoints=(-1.0, 1.0)):
        return cls(breakpoints, [[value]] * (len(breakpoints) - 1))

    @classmethod
    def zeros(cls, breakpoints=(-1.0, 1.0)):
        return cls.constant(0.0, breakpoints)

    @classmethod
    def identity(cls, breakpoints=(-1.0, 1.0)):
        bp = np.asarray(breakpoints, dtype=float)
        pieces = [[(a + b) / 2, (b - a) / 2] for a, b in zip(bp[:-1], bp[1:])]
        return cls(bp, pieces)

    # -- basic properties --------------------------------------------------
    @property
    def domain(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def degree(self):
        return max(len(c) for c in self.pieces) - 1

    @property
    def intervals(self):
        return list(zip(self.breakpoints[:-1], self.breakpoints[1:]))

    def __repr__(self):
        degs = [len(c) - 1 for c in self.pieces]
        return f"Fun(domain={self.domain}, pieces={len(self.pieces)}, degrees={degs})"

    # -- evaluation ----------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty(x.shape, dtype=complex)
        a, b = self.domain
        if np.any((x < a - 1e-12 * max(1.0, abs(a))) | (x > b + 1e-12 * max(1.0, abs(b)))):
            raise DomainMismatchError("evaluation point outside the domain")
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, len(self.pieces) - 1)
        for i, (lo, hi) in enumerate(self.intervals):
            mask = idx == i
            if np.any(mask):
                t = np.clip((2 * x[mask] - lo - hi) / (hi - lo), -1.0, 1.0)
                out[mask] = C.chebval(t, self.pieces[i])
        return out[0] if scalar else out

    def endpoint_value(self, piece, side, deriv=0):
        """Value of the ``deriv``-th derivative at an end of a piece.

        ``side`` is ``"left"`` or ``"right"``; one-sided at interior breakpoints.
        """
        c = self.pieces[piece]
        lo, hi = self.intervals[piece]
        return endpoint_functional(len(c), side, deriv, hi - lo) @ c

    # -- arithmetic ------------------------------------------------------------
    def _check_compatible(self, other):
        if self.breakpoints.shape != other.breakpoints.shape or np.any(
            np.abs(self.breakpoints - other.breakpoints) > 1e-14 * np.abs(self.breakpoints).max(initial=1.0)
        ):
            raise DomainMismatchError("Funs live on different breakpoints")

    def __add__(self, other):
        if np.isscalar(other):
            return Fun(self.breakpoints, [_pad_add(c, [other]) for c in self.pieces], self.tol)
        self._check_compatible(other)
        return Fun(self.breakpoints, [_pad_add(a, b) for a, b in zip(self.pieces, other.pieces)], self.tol)

    __radd__ = __add__

    def __neg__(self):
        return Fun(self.breakpoints, [-c for c in self.pieces], self.tol)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if np.isscalar(other):
            return Fun(self.breakpoints, [other * c for c in self.pieces], self.tol)
        self._check_compatible(other)
        return Fun(self.breakpoints, [C.chebmul(a, b) for a, b in zip(self.pieces, other.pieces)], self.tol)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def conj(self):
        return Fun(self.breakpoints, [np.conj(c) for c in self.pieces], self.tol)

    def diff(self, k=1):
        """k-th derivative (piecewise)."""
        pieces = []
        for (lo, hi), c in zip(self.intervals, self.pieces):
            d = C.chebder(c, k, scl=2.0 / (hi - lo)) if len(c) > k else np.zeros(1)
            pieces.append(d)
        return Fun(self.breakpoints, pieces, self.tol)

    def chop(self, tol=None):
        tol = self.tol if tol is None else tol
        scale = max(np.abs(c).max() for c in self.pieces)
        pieces = []
        for c in self.pieces:
            if scale == 0:
                pieces.append(c[:1])
                continue
            big = np.nonzero(np.abs(c) > tol * scale)[0]
            pieces.append(c[: big[-1] + 1] if big.size else c[:1] * 0)
        return Fun(self.breakpoints, pieces, tol)

    def norm(self):
        return float(np.sqrt(max(inner(self, self).real, 0.0)))

    def restrict(self, breakpoints, tol=None):
        """Re-represent on a refinement (or coarsening) of the breakpoints."""
        bp = np.asarray(breakpoints, dtype=float)
        a, b = self.domain
        if abs(bp[0] - a) > 1e-12 * max(1, abs(a)) or abs(bp[-1] - b) > 1e-12 * max(1, abs(b)):
            raise DomainMismatchError("restriction must keep the domain")
        if bp.shape == self.breakpoints.shape and np.allclose(bp, self.breakpoints, rtol=0, atol=1e-14):
            return self
        tol = self.tol if tol is None else tol
        return build_adaptive(self, bp, tol=max(tol, 1e-15), min_points=self.degree + 1)

    # -- serialization -------------------------------------------------------
    def to_record(self):
        return {
            "domain": [float(t) for t in self.breakpoints],
            "pieces": [[[float(z.real), float(z.imag)] for z in c] for c in self.pieces],
        }

    @classmethod
    def from_record(cls, record):
        pieces = [np.array([complex(re, im) for re, im in piece]) for piece in record["pieces"]]
        return cls(record["domain"], pieces)


def _pad_add(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = max(a.size, b.size)
    out = np.zeros(n, dtype=complex)
    out[: a.size] += a
    out[: b.size] += b
    return out


@lru_cache(maxsize=256)
def _endpoint_row(n, side, deriv):
    j = np.arange(n, dtype=float)
    row = np.ones(n)
    for i in range(deriv):
        row = row * (j**2 - i**2) / (2 * i + 1)
    if side == "left":
        row = row * (-1.0) ** (j + deriv)
    elif side != "right":
        raise ValueError("side must be 'left' or 'right'")
    row.setflags(write=False)
    return row


def endpoint_functional(n, side, deriv, length):
    """Row vector mapping n Chebyshev coefficients to u^(deriv) at an endpoint."""
    return _endpoint_row(int(n), side, int(deriv)) * (2.0 / length) ** deriv


def build_adaptive(f, domain=(-1.0, 1.0), tol=DEFAULT_TOL, min_points=9, max_degree=MAX_DEGREE):
    """Adaptive piecewise Chebyshev interpolant of a vectorized callable.

    ``domain`` is the breakpoint list.  On each piece the number of
    first-kind Chebyshev points is doubled (9, 17, 33, ...) until the trailing
    coefficients fall below ``tol`` relative to the largest one.  The result
    is then chopped.  Raises :class:`ResolutionError` past ``max_degree``.
    """
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    bp = np.asarray(domain, dtype=float)
    pieces = []
    for lo, hi in zip(bp[:-1], bp[1:]):
        n = 9
        while n < min_points:
            n = 2 * n - 1
        while True:
            t = cheb_points1(n)
            vals = np.asarray(f((hi - lo) / 2 * t + (hi + lo) / 2), dtype=complex)
            if vals.shape == ():
                vals = np.full(n, complex(vals))
            if not np.all(np.isfinite(vals)):
                raise ValueError("function is not finite on the domain")
            c = vals_to_coeffs(vals)
            if is_resolved(c, tol, tail=max(2, n // 16)):
                break
            if n > max_degree:
                raise ResolutionError(f"not resolved with {n} points on [{lo}, {hi}]")
            n = 2 * n - 1
        pieces.append(c[: chop_length(c, tol)])
    return Fun(bp, pieces, tol)


def fun_from_values(values_per_piece, breakpoints, tol=DEFAULT_TOL):
    """Fun from samples at first-kind Chebyshev points on each piece (chopped)."""
    pieces = []
    for v in values_per_piece:
        c = vals_to_coeffs(np.asarray(v, dtype=complex))
        pieces.append(c[: chop_length(c, tol)])
    return Fun(breakpoints, pieces, tol)


# ---------------------------------------------------------------------------
# inner products


def _cc_grid(deg):
    return clenshaw_curtis(max(int(deg), 1))


def inner(u, v):
    """L2 inner product  int conj(u) v  by Clenshaw-Curtis quadrature."""
    u._check_compatible(v)
    total = 0.0j
    for (lo, hi), cu, cv in zip(u.intervals, u.pieces, v.pieces):
        m = len(cu) + len(cv) + 16
        _, w = _cc_grid(m)
        total += (hi - lo) / 2 * np.sum(w * np.conj(cc_values(cu, m)) * cc_values(cv, m))
    return complex(total)


# ---------------------------------------------------------------------------
# Quasimatrix


class Quasimatrix:
    """Columns of Funs on common breakpoints, stored as padded coefficient blocks.

    ``blocks[i]`` is an array of shape (length_i, ncols) holding the Chebyshev
    coefficients of every column on piece ``i``.
    """

    __slots__ = ("breakpoints", "blocks")

    def __init__(self, breakpoints, blocks):
        bp = np.asarray(breakpoints, dtype=float)
        blocks = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in blocks]
        if len(blocks) != bp.size - 1:
            raise ValueError("need one block per subinterval")
        k = {b.shape[1] for b in blocks}
        if len(k) != 1 or k.pop() < 1:
            raise ValueError("quasimatrix needs a positive, consistent column count")
        self.breakpoints = bp
        self.blocks = blocks

    @classmethod
    def from_funs(cls, funs):
        funs = list(funs)
        if not funs:
            raise ValueError("quasimatrix needs at least one column")
        bp = funs[0].breakpoints
        for f in funs[1:]:
            funs[0]._check_compatible(f)
        blocks = []
        for i in range(len(bp) - 1):
            n = max(len(f.pieces[i]) for f in funs)
            blk = np.zeros((n, len(funs)), dtype=complex)
            for j, f in enumerate(funs):
                c = f.pieces[i]
                blk[: len(c), j] = c
            blocks.append(blk)
        return cls(bp, blocks)

    @property
    def ncols(self):
        return self.blocks[0].shape[1]

    @property
    def intervals(self):
        return list(zip(self.breakpoints[:-1], self.breakpoints[1:]))

    def __len__(self):
        return self.ncols

    def column(self, j):
        return Fun(self.breakpoints, [b[:, j] for b in self.blocks])

    @property
    def columns(self):
        return [self.column(j) for j in range(self.ncols)]

    def __repr__(self):
        return f"Quasimatrix(domain={self.breakpoints[0], self.breakpoints[-1]}, ncols={self.ncols})"

    def __matmul__(self, mat):
        """Quasimatrix times a (ncols x k) matrix."""
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim == 1:
            mat = mat[:, None]
        return Quasimatrix(self.breakpoints, [b @ mat for b in self.blocks])

    def __add__(self, other):
        return Quasimatrix(self.breakpoints, [_pad_add2(a, b) for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, scalar):
        return Quasimatrix(self.breakpoints, [scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def weighted_samples(self, lengths=None):
        """Rows W^(1/2) [values at CC points] so that inner products are dot products."""
        out = []
        for i, ((lo, hi), b) in enumerate(zip(self.intervals, self.blocks)):
            m = 2 * (b.shape[0] if lengths is None else lengths[i]) + 16
            _, w = _cc_grid(m)
            out.append(np.sqrt(w * (hi - lo) / 2)[:, None] * cc_values(b, m))
        return np.vstack(out)

    def _joint_samples(self, other):
        lengths = [max(a.shape[0], b.shape[0]) for a, b in zip(self.blocks, other.blocks)]
        return self.weighted_samples(lengths), other.weighted_samples(lengths)

    def inner(self, other):
        """Matrix of inner products  self^* other  (ncols x other.ncols)."""
        a, b = self._joint_samples(other)
        return a.conj().T @ b

    def gram(self):
        s = self.weighted_samples()
        return s.conj().T @ s

    def norm(self):
        """Operator 2-norm (largest singular value)."""
        s = self.weighted_samples()
        return float(np.linalg.norm(s, 2)) if s.size else 0.0

    def qr(self):
        """Modified Gram-Schmidt QR with one reorthogonalization pass.

        Returns (Q, R); columns of Q that would be numerically zero are kept
        as zero columns with the tiny pivot recorded in R.
        """
        k = self.ncols
        s = self.weighted_samples()
        coef = [b.copy() for b in self.blocks]
        R = np.zeros((k, k), dtype=complex)
        scale = max(np.linalg.norm(s, axis=0).max(), np.finfo(float).tiny)
        for j in range(k):
            for _ in range(2):
                for i in range(j):
                    h = np.vdot(s[:, i], s[:, j])
                    R[i, j] += h
                    s[:, j] -= h * s[:, i]
                    for blk in coef:
                        blk[:, j] -= h * blk[:, i]
            nrm = np.linalg.norm(s[:, j])
            R[j, j] = nrm
            if nrm > 1e-15 * scale:
                s[:, j] /= nrm
                for blk in coef:
                    blk[:, j] /= nrm
            else:
                s[:, j] = 0
                for blk in coef:
                    blk[:, j] = 0
        return Quasimatrix(self.breakpoints, coef), R


def _pad_add2(a, b):
    n = max(a.shape[0], b.shape[0])
    out = np.zeros((n, a.shape[1]), dtype=complex)
    out[: a.shape[0]] += a
    out[: b.shape[0]] += b
    return out


def qm_svd(A, m=None, rank_tol=1e-14):
    """Economized SVD  A = U diag(sigma) V^*  truncated to rank m.

    QR of the quasimatrix followed by a dense SVD of the small triangular
    factor.  Raises :class:`RankDeficiencyError` when sigma_m/sigma_1 < rank_tol.
    """
    k = A.ncols
    m = k if m is None else int(m)
    if m < 1 or m > k:
        raise ValueError(f"rank {m} not in [1, {k}]")
    Q, R = A.qr()
    W, sigma, Vh = np.linalg.svd(R)
    if sigma[0] == 0 or sigma[m - 1] < rank_tol * sigma[0]:
        rank = int(np.sum(sigma > rank_tol * sigma[0])) if sigma[0] > 0 else 0
        raise RankDeficiencyError(rank, f"requested rank {m} but numerical rank is {rank}")
    U = Q @ W[:, :m]
    return U, sigma[:m], Vh.conj().T[:, :m]


def singular_values(A):
    """All singular values of a quasimatrix, descending."""
    return np.linalg.svd(A.qr()[1], compute_uv=False)
