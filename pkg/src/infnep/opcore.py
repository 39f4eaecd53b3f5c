"""Holomorphic operator families and their two basic primitives.

Two operator representations are supported:

* :class:`IntervalOperator` -- a linear ODE  sum_d a_d(x) u^(d)  of order K on
  a union of subintervals, together with K * (number of pieces) constraint
  rows (boundary, continuity, jump and eigenvalue-dependent conditions).  The
  constraint rows are extra components of the range, weighted by one.
* :class:`LaurentOperator` -- a banded bi-infinite Toeplitz operator on
  l^2(Z), given by finitely many diagonals.

For interval operators, ``solve`` uses a square ultraspherical discretization
with adaptive size; ``apply`` acts on a Fun through coefficient-space
differentiation and multiplication (an independent code path).
``gamma_branch`` returns the smallest singular value of a rectangular
section whose rows capture the whole range of the first n basis functions,
so that the result is exact up to rounding and not a discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.linalg import block_diag
from numpy.polynomial import chebyshev as C

from . import ultraspherical as us
from .errors import DomainMismatchError, ResolutionError, SingularSystemError, UnsupportedError
from .funcore import Fun, Quasimatrix, cheb_points1, endpoint_functional, vals_to_coeffs
from .linalg import sigma_min_banded, sigma_min_rect, solve_almost_banded

SIDES = ("left", "right")


@dataclass(frozen=True)
class Constraint:
    """One scalar condition  sum_t weight_t * u^(deriv_t)(endpoint of piece_t) = 0."""

    terms: tuple  # of (piece, side, deriv, weight)
    label: str = ""

    def scaled(self, factor):
        return Constraint(tuple((p, s, d, w * factor) for p, s, d, w in self.terms), self.label)


def _as_coeff(a):
    if a is None:
        return None
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    return a


@dataclass(frozen=True)
class IntervalOperator:
    """ODE operator  sum_d a_d(x) d^d/dx^d  with constraint rows.

    Attributes:
        breakpoints: piece endpoints, strictly increasing.
        order: differential order K.
        coeffs: ``coeffs[p][d]`` is the Chebyshev series (in the local
            variable of piece p) of the coefficient of u^(d), or None.
        constraints: K * (number of pieces) :class:`Constraint` rows.
    """

    breakpoints: tuple
    order: int
    coeffs: tuple
    constraints: tuple

    def __post_init__(self):
        bp = tuple(float(t) for t in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        q = len(bp) - 1
        if q < 1 or any(b <= a for a, b in zip(bp[:-1], bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.coeffs) != q:
            raise ValueError("need coefficients for every piece")
        cf = tuple(tuple(_as_coeff(a) for a in row) for row in self.coeffs)
        for row in cf:
            if len(row) != self.order + 1:
                raise ValueError("need order + 1 coefficient slots per piece")
        object.__setattr__(self, "coeffs", cf)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if len(self.constraints) != self.order * q:
            raise ValueError("constraint count must equal order * pieces")

    @property
    def npieces(self):
        return len(self.breakpoints) - 1

    @property
    def intervals(self):
        bp = self.breakpoints
        return list(zip(bp[:-1], bp[1:]))

    @property
    def coeff_degree(self):
        return max((len(a) - 1 for row in self.coeffs for a in row if a is not None), default=0)

    def min_truncation(self):
        return 4 * (self.order + 1)

    # -- linear combinations (used for derivatives in z) ----------------------
    @staticmethod
    def combine(ops, weights):
        """sum_i weights[i] * ops[i] for operators sharing structure."""
        base = ops[0]
        coeffs = []
        for p in range(base.npieces):
            row = []
            for d in range(base.order + 1):
                acc = None
                for op, w in zip(ops, weights):
                    a = op.coeffs[p][d]
                    if a is None:
                        continue
                    term = w * a
                    if acc is None:
                        acc = term
                    else:
                        n = max(len(acc), len(term))
                        acc = np.pad(acc, (0, n - len(acc))) + np.pad(term, (0, n - len(term)))
                row.append(acc)
            coeffs.append(tuple(row))
        cons = []
        for i in range(len(base.constraints)):
            terms = []
            for op, w in zip(ops, weights):
                terms.extend(op.constraints[i].scaled(w).terms)
            cons.append(Constraint(tuple(terms), base.constraints[i].label))
        return IntervalOperator(base.breakpoints, base.order, tuple(coeffs), tuple(cons))

    # -- ultraspherical square system -------------------------------------------
    def piece_operator(self, p, n):
        """n x n sparse map from T coefficients to C^(K) coefficients on piece p."""
        lo, hi = self.intervals[p]
        s = 2.0 / (hi - lo)
        K = self.order
        L = sp.csr_matrix((n, n), dtype=complex)
        for d, a in enumerate(self.coeffs[p]):
            if a is None or not np.any(a):
                continue
            term = us.mult_matrix(a, d, n) @ us.diff_matrix(d, n) * s**d
            L = L + us.conversion_chain(d, K, n) @ term
        return L

    def constraint_rows(self, n):
        """Dense (#constraints x q n) matrix of the constraint functionals."""
        q = self.npieces
        out = np.zeros((len(self.constraints), q * n), dtype=complex)
        for i, c in enumerate(self.constraints):
            for p, side, d, w in c.terms:
                lo, hi = self.intervals[p]
                out[i, p * n : (p + 1) * n] += w * endpoint_functional(n, side, d, hi - lo)
        return out

    def square_system(self, n):
        """Square sparse system of size q n (constraint rows first)."""
        K = self.order
        body = sp.block_diag([self.piece_operator(p, n)[: n - K] for p in range(self.npieces)], format="csr")
        return sp.vstack([sp.csr_matrix(self.constraint_rows(n)), body], format="csc")

    # -- rectangular section for gamma -----------------------------------------
    def gamma_matrix(self, n):
        """Range-exact section of the operator on n orthonormal Legendre functions per piece.

        Rows are Gauss-Legendre weighted samples of T u (exact L^2 norm for
        the polynomial output) followed by the constraint rows.
        """
        q = self.npieces
        m = n + self.coeff_degree
        t, w = us.gauss_legendre(m)
        blocks = []
        cons = np.zeros((len(self.constraints), q * n), dtype=complex)
        j = np.arange(n)
        vand_end = {}
        for p, (lo, hi) in enumerate(self.intervals):
            h = hi - lo
            s = 2.0 / h
            normalize = np.sqrt((2 * j + 1) / h)
            blk = np.zeros((m, n), dtype=complex)
            for d, a in enumerate(self.coeffs[p]):
                if a is None or not np.any(a):
                    continue
                av = C.chebval(t, a)
                blk += av[:, None] * us.legendre_deriv_vander(t, n, d) * s**d
            blk *= normalize[None, :]
            blk *= np.sqrt(w * h / 2)[:, None]
            blocks.append(blk)
        for i, c in enumerate(self.constraints):
            for p, side, d, wt in c.terms:
                lo, hi = self.intervals[p]
                h = hi - lo
                key = (side, d)
                if key not in vand_end:
                    vand_end[key] = us.legendre_deriv_vander([1.0 if side == "right" else -1.0], n, d)[0]
                cons[i, p * n : (p + 1) * n] += wt * (2.0 / h) ** d * np.sqrt((2 * j + 1) / h) * vand_end[key]
        return np.vstack([block_diag(*blocks), cons])


@dataclass(frozen=True)
class LaurentOperator:
    """Bi-infinite banded Toeplitz operator  (A u)_i = sum_k a_k u_{i-k}."""

    diagonals: dict

    @property
    def bandwidth(self):
        return max((abs(k) for k in self.diagonals), default=0)

    def adjoint(self):
        return LaurentOperator({-k: np.conj(v) for k, v in self.diagonals.items()})

    def symbol(self, theta):
        """t(theta) = sum_k a_k e^{i k theta}."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape, dtype=complex)
        for k, v in self.diagonals.items():
            out += v * np.exp(1j * k * theta)
        return out

    def section(self, n):
        """Rows -n-b..n+b, columns -n..n."""
        b = self.bandwidth
        cols = 2 * n + 1
        rows = cols + 2 * b
        A = np.zeros((rows, cols), dtype=complex)
        for k, v in self.diagonals.items():
            idx = np.arange(cols)
            A[idx + b + k, idx] = v
        return A

    def section_band(self, n):
        """Column band of :meth:`section`: ``cols[j, i]`` is entry (j + i, j), lower bandwidth 2 b."""
        b = self.bandwidth
        cols = np.zeros((2 * n + 1, 2 * b + 1), dtype=complex)
        for k, v in self.diagonals.items():
            cols[:, b + k] += v
        return cols, 2 * b

    def square(self, n):
        """Square n x n finite section (indices 0..n-1)."""
        A = np.zeros((n, n), dtype=complex)
        for k, v in self.diagonals.items():
            A += v * np.eye(n, k=-k)
        return A

    def min_truncation(self):
        return 4


@dataclass
class NepProblem:
    """Holomorphic operator family z -> T(z).

    Attributes:
        name: registry name.
        assemble: callable returning the operator representation at z.
        space: "interval" or "laurent".
        breakpoints: piece endpoints (interval problems).
        assemble_adjoint: callable for the adjoint family (optional).
        discrete_spectrum: if True, gamma uses the first branch only.
        region: free-form description of the holomorphy region.
        metadata: extra information (parameters, essential spectrum, ...).
    """

    name: str
    assemble: Callable
    space: str = "interval"
    breakpoints: tuple = (-1.0, 1.0)
    assemble_adjoint: Callable | None = None
    discrete_spectrum: bool = True
    region: str = ""
    metadata: dict = field(default_factory=dict)

    def __call__(self, z):
        return self.assemble(complex(z))

    def adjoint(self, z):
        if self.assemble_adjoint is not None:
            return self.assemble_adjoint(complex(z))
        rep = self.assemble(complex(z))
        if isinstance(rep, LaurentOperator):
            return rep.adjoint()
        raise UnsupportedError(f"{self.name}: adjoint family not available")

    def derivative(self, z, h=None, nodes=16):
        """T'(z) by a Cauchy integral over a small circle (interval problems)."""
        z = complex(z)
        h = 1e-2 * max(1.0, abs(z)) if h is None else h
        theta = 2 * np.pi * np.arange(nodes) / nodes
        zk = z + h * np.exp(1j * theta)
        weights = np.exp(-1j * theta) / (h * nodes)
        reps = [self.assemble(complex(x)) for x in zk]
        if isinstance(reps[0], LaurentOperator):
            diag = {}
            for rep, w in zip(reps, weights):
                for k, v in rep.diagonals.items():
                    diag[k] = diag.get(k, 0) + w * v
            return LaurentOperator(diag)
        return IntervalOperator.combine(reps, weights)


# ---------------------------------------------------------------------------
# apply / residuals


def _require_interval(op):
    if not isinstance(op, IntervalOperator):
        raise UnsupportedError("operation needs an interval operator")


def _check_breakpoints(op, u):
    bp = np.asarray(op.breakpoints)
    if u.breakpoints.shape != bp.shape or np.any(np.abs(u.breakpoints - bp) > 1e-12 * max(1.0, np.abs(bp).max())):
        raise DomainMismatchError("function breakpoints do not match the operator")


def apply(op, u):
    """T u for an interval operator.

    Returns ``(interior, rows)``: the Fun  sum_d a_d u^(d)  and the vector of
    constraint-row values.
    """
    _require_interval(op)
    _check_breakpoints(op, u)
    pieces = []
    for p, (lo, hi) in enumerate(op.intervals):
        c = u.pieces[p]
        acc = np.zeros(1, dtype=complex)
        for d, a in enumerate(op.coeffs[p]):
            if a is None or not np.any(a):
                continue
            du = C.chebder(c, d, scl=2.0 / (hi - lo)) if d else c
            if len(du) == 0:
                continue
            term = C.chebmul(a, du)
            n = max(len(acc), len(term))
            acc = np.pad(acc, (0, n - len(acc))) + np.pad(term, (0, n - len(term)))
        pieces.append(acc)
    rows = np.array([sum(w * u.endpoint_value(p, s, d) for p, s, d, w in c.terms) for c in op.constraints])
    return Fun(u.breakpoints, pieces, u.tol), rows


def residual(op, u):
    """Absolute and scale-relative residual of (op, u).

    The absolute value is  sqrt(||interior||^2 + |rows|^2); the relative one
    divides by  sum_d ||a_d u^(d)||  plus the sizes of the constraint terms.
    """
    interior, rows = apply(op, u)
    absolute = float(np.sqrt(interior.norm() ** 2 + np.sum(np.abs(rows) ** 2)))
    scale = 0.0
    for d in range(op.order + 1):
        pieces = []
        any_term = False
        for p, (lo, hi) in enumerate(op.intervals):
            a = op.coeffs[p][d]
            if a is None or not np.any(a):
                pieces.append(np.zeros(1))
                continue
            any_term = True
            c = u.pieces[p]
            du = C.chebder(c, d, scl=2.0 / (hi - lo)) if d else c
            pieces.append(C.chebmul(a, du) if len(du) else np.zeros(1))
        if any_term:
            scale += Fun(u.breakpoints, pieces).norm()
    for c in op.constraints:
        scale += sum(abs(w * u.endpoint_value(p, s, d)) for p, s, d, w in c.terms)
    relative = absolute / scale if scale > 0 else absolute
    return absolute, relative


# ---------------------------------------------------------------------------
# solve


def _equilibrated_solve(A, B):
    # columns first: the constraint rows carry entries growing like j^(2d),
    # and scaling columns before rows keeps the low-degree unknowns accurate
    A = sp.csc_matrix(A)
    c = np.asarray(abs(A).max(axis=0).toarray()).ravel()
    c[c == 0] = 1.0
    A = A @ sp.diags(1.0 / c)
    r = np.asarray(abs(A).max(axis=1).toarray()).ravel()
    r[r == 0] = 1.0
    A = sp.diags(1.0 / r) @ A
    y = solve_almost_banded(sp.csc_matrix(A), B / r[:, None])
    return y / c[:, None]


def _rhs_block(op, blocks, n, rows=None):
    K = op.order
    q = op.npieces
    ncols = blocks[0].shape[1]
    nc = len(op.constraints)
    B = np.zeros((nc + q * (n - K), ncols), dtype=complex)
    if rows is not None:
        B[:nc] = rows
    S = us.conversion_chain(0, K, n)
    for p, blk in enumerate(blocks):
        f = np.zeros((n, ncols), dtype=complex)
        k = min(n, blk.shape[0])
        f[:k] = blk[:k]
        B[nc + p * (n - K) : nc + (p + 1) * (n - K)] = (S @ f)[: n - K]
    return B


def _tail_small(X, n, q, tol):
    tail = max(2, n // 16)
    scale = np.abs(X).max(axis=0)
    scale[scale == 0] = 1.0
    for p in range(q):
        blk = X[p * n : (p + 1) * n]
        if np.any(np.abs(blk[n - tail :]).max(axis=0) > tol * scale):
            return False
    return True


MAX_UNKNOWNS = 2**15


def solve(op, rhs, tol=1e-12, n0=64, nmax=2**15, rows=None):
    """Solve  T u = f  column by column with adaptive truncation size.

    Args:
        op: IntervalOperator at a fixed z.
        rhs: Quasimatrix of right-hand sides on the operator's breakpoints.
        tol: relative coefficient tolerance for the stopping rule.
        n0: initial size per piece (doubled until resolved).
        nmax: size cap per piece (the total size is also capped at
            ``MAX_UNKNOWNS``).
        rows: optional (#constraints x ncols) inhomogeneous constraint data.

    Raises:
        SingularSystemError: z is (numerically) an eigenvalue.
        ResolutionError: not resolved at ``nmax``.
    """
    _require_interval(op)
    bp = np.asarray(op.breakpoints)
    if rhs.breakpoints.shape != bp.shape or np.any(np.abs(rhs.breakpoints - bp) > 1e-12 * max(1.0, np.abs(bp).max())):
        raise DomainMismatchError("right-hand side breakpoints do not match the operator")
    q = op.npieces
    K = op.order
    need = max(b.shape[0] for b in rhs.blocks) + K + 2 * op.coeff_degree
    n = max(n0, op.min_truncation())
    while n < need:
        n *= 2
    prev = None
    prev_diff = None
    while n <= nmax and q * n <= MAX_UNKNOWNS:
        A = op.square_system(n)
        B = _rhs_block(op, rhs.blocks, n, rows)
        X = _equilibrated_solve(A, B)
        if not np.all(np.isfinite(X)):
            raise SingularSystemError("non-finite solution")
        diff = None
        if prev is not None:
            pn = prev.shape[0] // q
            diff = 0.0
            for p in range(q):
                a = X[p * n : (p + 1) * n]
                b = np.zeros_like(a)
                b[:pn] = prev[p * pn : (p + 1) * pn]
                diff = max(diff, np.abs(a - b).max())
        if diff is not None and _tail_small(X, n, q, tol):
            scale = max(np.abs(X).max(), np.finfo(float).tiny)
            # the second test accepts a rounding floor set by conditioning:
            # the tail is resolved but refinement no longer changes anything
            if diff <= tol * scale or (prev_diff is not None and diff > 0.5 * prev_diff):
                return _to_quasimatrix(op, X, n)
        prev, prev_diff = X, diff
        n *= 2
    raise ResolutionError(f"solve not resolved at n = {n // 2} per piece")


def _to_quasimatrix(op, X, n):
    q = op.npieces
    scale = np.abs(X).max()
    blocks = []
    for p in range(q):
        blk = X[p * n : (p + 1) * n]
        big = np.nonzero(np.abs(blk).max(axis=1) > 1e-16 * scale)[0]
        k = big[-1] + 1 if big.size else 1
        blocks.append(blk[:k])
    return Quasimatrix(op.breakpoints, blocks)


# ---------------------------------------------------------------------------
# gamma and the resolvent-norm oracle


def gamma_branch(op, n, adjoint=False):
    """sigma_inf of the section of T(z) (or its adjoint) on n basis functions.

    Interval operators use n orthonormal Legendre functions per piece;
    Laurent operators use indices -n..n.
    """
    if isinstance(op, LaurentOperator):
        cols, lower = (op.adjoint() if adjoint else op).section_band(n)
        return sigma_min_banded(cols, lower)
    _require_interval(op)
    if adjoint:
        raise UnsupportedError("adjoint branch is not assembled for interval operators")
    return sigma_min_rect(op.gamma_matrix(n))


def orthonormal_legendre_rhs(op, count):
    """Quasimatrix of the first ``count`` orthonormal Legendre functions on every piece."""
    q = op.npieces
    npts = count + 2
    t = cheb_points1(npts)
    j = np.arange(count)
    V = us.legendre_deriv_vander(t, count, 0)
    blocks = []
    for p, (lo, hi) in enumerate(op.intervals):
        coef = vals_to_coeffs(V * np.sqrt((2 * j + 1) / (hi - lo)))
        blk = np.zeros((npts, q * count), dtype=complex)
        blk[:, p * count : (p + 1) * count] = coef
        blocks.append(blk)
    return Quasimatrix(op.breakpoints, blocks)


def resolvent_norm_oracle(op, count=48, tol=1e-13):
    """Estimate of 1 / ||T(z)^{-1}|| by solving against an orthonormal data basis.

    For interval operators the data are ``count`` orthonormal Legendre
    functions per piece plus unit vectors for every constraint row; the
    spectral norm of the resulting solution map is a lower bound for
    ||T^{-1}|| that converges as ``count`` grows, so the returned value
    approaches ||T^{-1}||^{-1} from above.  Laurent operators use the
    minimum modulus of the symbol on a fine grid.
    """
    if isinstance(op, LaurentOperator):
        theta = np.linspace(0, 2 * np.pi, 8192, endpoint=False)
        return float(np.abs(op.symbol(theta)).min())
    _require_interval(op)
    F = orthonormal_legendre_rhs(op, count)
    nc = len(op.constraints)
    ncols = F.ncols + nc
    blocks = [np.hstack([b, np.zeros((b.shape[0], nc), dtype=complex)]) for b in F.blocks]
    rows = np.zeros((nc, ncols), dtype=complex)
    rows[:, F.ncols :] = np.eye(nc)
    data = Quasimatrix(op.breakpoints, blocks)
    U = solve(op, data, tol=tol, rows=rows)
    return 1.0 / U.norm()
