"""Finite element discretizations and a companion-linearization NEP solver.

Every discretization returns a :class:`MatrixPolynomial`
P(lam) = sum_j lam^j A_j with dense coefficient matrices.  All element
integrals are exact (no quadrature or lumping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..errors import SingularSystemError, UnsupportedError
from ..linalg import eig_general
from .problems import AcousticParams, DampedBeamParams, LoadedStringParams, WaveguideParams


@dataclass
class MatrixPolynomial:
    """P(lam) = sum_j lam^j coeffs[j]; ``spurious`` lists eigenvalues to discard."""

    coeffs: list
    spurious: list = field(default_factory=list)
    name: str = ""

    @property
    def size(self):
        return self.coeffs[0].shape[0]

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, z):
        out = np.zeros_like(self.coeffs[0], dtype=complex)
        for A in reversed(self.coeffs):
            out = out * z + A
        return out


def _tridiag(n, lower, diag, upper):
    return np.diag(np.full(n - 1, lower), -1) + np.diag(np.full(n, diag)) + np.diag(np.full(n - 1, upper), 1)


def _p1_1d(n):
    """Stiffness and mass of P1 elements on [0, 1] with n elements, nodes 1..n kept."""
    h = 1.0 / n
    K = _tridiag(n, -1.0, 2.0, -1.0) / h
    K[-1, -1] = 1.0 / h
    M = _tridiag(n, 1 / 6, 4 / 6, 1 / 6) * h
    M[-1, -1] = h / 3
    return K, M


def acoustic1d_fem(params: AcousticParams, n):
    """K + lam (2 pi i / chi) e_n e_n^T - 4 pi^2 lam^2 M on n P1 elements."""
    K, M = _p1_1d(n)
    C = np.zeros((n, n), dtype=complex)
    C[-1, -1] = 2j * math.pi / complex(params.chi)
    return MatrixPolynomial([K.astype(complex), C, -4 * math.pi**2 * M.astype(complex)], name="acoustic1d")


def acoustic2d_fem(params: AcousticParams, n):
    """P1 triangles on the unit square with n = n0 (n0 - 1) unknowns."""
    n0 = int(round((1 + math.sqrt(1 + 4 * n)) / 2))
    if n0 * (n0 - 1) != n:
        raise ValueError("acoustic2d size must be n0 (n0 - 1)")
    h = 1.0 / n0

    def index(i, j):
        # unknown nodes: x index 1..n0, y index 1..n0-1
        if i == 0 or j == 0 or j == n0:
            return -1
        return (j - 1) * n0 + (i - 1)

    K = np.zeros((n, n))
    M = np.zeros((n, n))
    B = np.zeros((n, n))
    k_ref = 0.5 * np.array([[2.0, -1, -1], [-1, 1, 0], [-1, 0, 1]])
    m_ref = h * h / 24 * np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]])
    for i in range(n0):
        for j in range(n0):
            # two right triangles per cell, right angle listed first
            for tri in (((i, j), (i + 1, j), (i, j + 1)), ((i + 1, j + 1), (i, j + 1), (i + 1, j))):
                idx = [index(a, b) for a, b in tri]
                for r in range(3):
                    if idx[r] < 0:
                        continue
                    for c in range(3):
                        if idx[c] < 0:
                            continue
                        K[idx[r], idx[c]] += k_ref[r, c]
                        M[idx[r], idx[c]] += m_ref[r, c]
    edge = h / 6 * np.array([[2.0, 1], [1, 2]])
    for j in range(n0):
        idx = [index(n0, j), index(n0, j + 1)]
        for r in range(2):
            for c in range(2):
                if idx[r] >= 0 and idx[c] >= 0:
                    B[idx[r], idx[c]] += edge[r, c]
    C = 2j * math.pi / complex(params.chi) * B
    return MatrixPolynomial([K.astype(complex), C, -4 * math.pi**2 * M.astype(complex)], name="acoustic2d")


def damped_beam_fem(params: DampedBeamParams, n):
    """Cubic Hermite elements; n = 2 * (number of elements), elements even."""
    if n % 4:
        raise ValueError("damped beam size must be a multiple of 4")
    if params.profile != "constant":
        raise UnsupportedError("FEM beam uses a constant coefficient")
    ne = n // 2
    h = 1.0 / ne
    ke = np.array(
        [[12, 6 * h, -12, 6 * h], [6 * h, 4 * h * h, -6 * h, 2 * h * h], [-12, -6 * h, 12, -6 * h], [6 * h, 2 * h * h, -6 * h, 4 * h * h]]
    ) / h**3
    me = (
        h
        / 420
        * np.array(
            [
                [156, 22 * h, 54, -13 * h],
                [22 * h, 4 * h * h, 13 * h, -3 * h * h],
                [54, 13 * h, 156, -22 * h],
                [-13 * h, -3 * h * h, -22 * h, 4 * h * h],
            ]
        )
    )
    N = 2 * (ne + 1)
    K = np.zeros((N, N))
    M = np.zeros((N, N))
    for e in range(ne):
        sl = slice(2 * e, 2 * e + 4)
        K[sl, sl] += ke
        M[sl, sl] += me
    keep = [i for i in range(N) if i not in (0, 2 * ne)]
    K = K[np.ix_(keep, keep)]
    M = M[np.ix_(keep, keep)]
    mid = keep.index(2 * (ne // 2))
    D = np.zeros((n, n))
    D[mid, mid] = 1.0
    return MatrixPolynomial(
        [K.astype(complex), -params.beta * D.astype(complex), -params.alpha0 * M.astype(complex)], name="damped_beam"
    )


def loaded_string_fem(params: LoadedStringParams, n):
    """(lam - kappa)(K - lam M) + lam kappa m e_n e_n^T: quadratic with lam = kappa spurious."""
    K, M = _p1_1d(n)
    E = np.zeros((n, n))
    E[-1, -1] = 1.0
    kap, mass = params.kappa, params.mass
    A0 = -kap * K
    A1 = K + kap * M + kap * mass * E
    A2 = -M
    return MatrixPolynomial(
        [A0.astype(complex), A1.astype(complex), A2.astype(complex)], spurious=[kap], name="loaded_string"
    )


def waveguide_fem(params: WaveguideParams, n):
    """P1 elements with n nodes on [0, L]; quartic after multiplying by lam^2."""
    bp = np.asarray(params.interfaces, dtype=float)
    L = bp[-1] - bp[0]
    ne = n - 1
    h = L / ne
    x_mid = bp[0] + h * (np.arange(ne) + 0.5)
    eta_in = np.asarray(params.eta[1:-1], dtype=float)
    layer = np.clip(np.searchsorted(bp, x_mid, side="right") - 1, 0, len(eta_in) - 1)
    k2 = params.k**2
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    Meta = np.zeros((n, n))
    ke = np.array([[1.0, -1], [-1, 1]]) / h
    me = h / 6 * np.array([[2.0, 1], [1, 2]])
    for e in range(ne):
        sl = slice(e, e + 2)
        K[sl, sl] += ke
        M[sl, sl] += me
        Meta[sl, sl] += k2 * eta_in[layer[e]] ** 2 * me
    E0 = np.zeros((n, n))
    EL = np.zeros((n, n))
    E0[0, 0] = 1.0
    EL[-1, -1] = 1.0
    dm, dp = params.delta_minus, params.delta_plus
    tail = dm * dm / 4 if params.mu_form == "matched" else dm / 8
    coeffs = [tail * M, dm / 2 * (EL - E0), K - Meta + dp * M, E0 + EL, M]
    return MatrixPolynomial([c.astype(complex) for c in coeffs], name="planar_waveguide")


def fem_discretize(name, params=None, n=10):
    """Matrix polynomial of size n for a registry problem."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if name == "acoustic1d":
        return acoustic1d_fem(params or AcousticParams(), n)
    if name == "acoustic2d":
        return acoustic2d_fem(params or AcousticParams(), n)
    if name == "damped_beam":
        return damped_beam_fem(params or DampedBeamParams(), n)
    if name == "loaded_string":
        return loaded_string_fem(params or LoadedStringParams(), n)
    if name == "planar_waveguide":
        return waveguide_fem(params or WaveguideParams(), n)
    if name == "butterfly":
        raise UnsupportedError("butterfly uses square truncations, see butterfly_truncation")
    raise ValueError(f"unknown problem {name!r}")


def butterfly_truncation(params, n):
    """n x n finite sections of the butterfly coefficients (degree trimmed)."""
    from ..opcore import LaurentOperator

    coeffs = [LaurentOperator(A).square(n) for A in params.coefficient_diagonals()]
    return MatrixPolynomial(coeffs, name="butterfly")


# ---------------------------------------------------------------------------
# polynomial eigenproblems


def _trim(coeffs):
    coeffs = [np.asarray(A, dtype=complex) for A in coeffs]
    while len(coeffs) > 1 and not np.any(coeffs[-1]):
        coeffs.pop()
    return coeffs


def _companion_eigs(coeffs):
    """Eigenvalues of sum lam^j A_j with invertible leading coefficient."""
    d = len(coeffs) - 1
    n = coeffs[0].shape[0]
    lu = sla.lu_factor(coeffs[-1])
    C = np.zeros((d * n, d * n), dtype=complex)
    for j in range(d):
        C[:n, j * n : (j + 1) * n] = -sla.lu_solve(lu, coeffs[d - 1 - j])
    if d > 1:
        C[n:, : (d - 1) * n] = np.eye((d - 1) * n)
    return eig_general(C)


def _shifted_reversal(coeffs, sigma):
    """Coefficients of  nu^d P(sigma + 1/nu)."""
    d = len(coeffs) - 1
    B = []
    for k in range(d + 1):
        Bk = sum(math.comb(j, k) * sigma ** (j - k) * coeffs[j] for j in range(k, d + 1))
        B.append(Bk)
    return [B[d - i] for i in range(d + 1)]


def solve_matrix_nep(poly, cond_limit=1e12, spurious_tol=1e-6):
    """All finite eigenvalues of a matrix polynomial by companion linearization.

    Uses the standard form when the leading coefficient is well conditioned;
    otherwise a shifted reversal  nu^d P(sigma + 1/nu)  with P(sigma)
    invertible, discarding the infinite eigenvalues (nu = 0).  Entries of
    ``poly.spurious`` (if given) are removed.
    """
    if isinstance(poly, MatrixPolynomial):
        coeffs, spurious = poly.coeffs, poly.spurious
    else:
        coeffs, spurious = list(poly), []
    coeffs = _trim(coeffs)
    if len(coeffs) == 1:
        return np.zeros(0, dtype=complex)
    if np.linalg.cond(coeffs[-1]) < cond_limit:
        lam = _companion_eigs(coeffs)
    else:
        rng = np.random.default_rng(12345)
        scale = max(np.abs(A).max() for A in coeffs)
        for _ in range(20):
            sigma = complex(rng.standard_normal(), rng.standard_normal())
            P = sum(sigma**j * A for j, A in enumerate(coeffs))
            if np.linalg.cond(P) < cond_limit:
                break
        else:
            raise SingularSystemError("no shift with an invertible polynomial value found")
        nu = _companion_eigs(_shifted_reversal(coeffs, sigma))
        small = np.abs(nu) <= 1e-13 * max(1.0, scale) * np.abs(nu).max(initial=1.0)
        lam = sigma + 1.0 / nu[~small]
    for s in spurious:
        lam = lam[np.abs(lam - s) > spurious_tol * max(1.0, abs(s))]
    return lam
