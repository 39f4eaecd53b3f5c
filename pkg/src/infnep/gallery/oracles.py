"""Closed-form, asymptotic and root-finding reference eigenvalues."""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.optimize import brentq

from ..errors import ConvergenceError, UnsupportedError
from .problems import ButterflyParams, DampedBeamParams, LoadedStringParams


def _newton(f, z0, tol=1e-15, maxit=60, h=None, floor=1e-11):
    """Complex Newton iteration with a central-difference derivative.

    Converged when the step drops below ``tol`` relative to |z|, or when it
    stops shrinking while already below ``floor`` (rounding-limited roots).
    """
    z = complex(z0)
    last = math.inf
    for _ in range(maxit):
        step = h if h is not None else 1e-6 * max(1.0, abs(z))
        try:
            df = (f(z + step) - f(z - step)) / (2 * step)
            dz = f(z) / df if df != 0 else None
        except (OverflowError, ValueError):
            dz = None
        if dz is None or not cmath.isfinite(dz):
            break
        z -= dz
        scale = max(1.0, abs(z))
        if abs(dz) <= tol * scale or (abs(dz) <= floor * scale and abs(dz) > 0.5 * last):
            return z
        last = abs(dz)
    raise ConvergenceError(f"Newton did not converge from {z0}")


# ---------------------------------------------------------------------------
# acoustic wave


def acoustic1d_eigenvalue(chi, k):
    """atan(i chi) / (2 pi) + k / 2,  with atan(i chi) = i atanh(chi)."""
    chi = complex(chi)
    if chi in (1, -1):
        raise UnsupportedError("spectrum is empty for chi = +-1")
    return 1j * cmath.atanh(chi) / (2 * math.pi) + k / 2


def _sinc_even(s2):
    """sin(s)/s as a function of s^2 (entire)."""
    s = cmath.sqrt(s2)
    return 1.0 if s == 0 else cmath.sin(s) / s


def acoustic2d_characteristic(z, chi, mode):
    """chi cos(s) + 2 pi i z sin(s)/s  with  s^2 = 4 pi^2 z^2 - (mode pi)^2."""
    s2 = 4 * math.pi**2 * z * z - (mode * math.pi) ** 2
    return complex(chi) * cmath.cos(cmath.sqrt(s2)) + 2j * math.pi * z * _sinc_even(s2)


def _csqrt(w):
    # principal branch with signed zeros cleared (cmath honours -0.0 on the cut)
    w = complex(w)
    return cmath.sqrt(complex(w.real, w.imag + 0.0))


def acoustic2d_asymptotic(chi, k):
    """Large-k approximation  +-k chi / (2 sqrt(chi^2 - 1)).

    With Im s >= 0 the exponentially dominant part of the characteristic
    function reduces to chi = 2 pi z / s; the sign satisfying it is kept.
    """
    chi = complex(chi)
    w = k * chi / (2 * _csqrt(chi * chi - 1))

    def mismatch(z):
        s = _csqrt(4 * math.pi**2 * z * z - (k * math.pi) ** 2)
        if s.imag < 0:
            s = -s
        return abs(chi - 2 * math.pi * z / s) if s != 0 else math.inf

    return min((w, -w), key=mismatch)


def acoustic2d_eigenvalue(chi, k):
    """Eigenvalue of transverse mode k near its large-k asymptote (Newton)."""
    return _newton(lambda z: acoustic2d_characteristic(z, chi, k), acoustic2d_asymptotic(chi, k))


# ---------------------------------------------------------------------------
# damped beam


def beam_group1(k, params: DampedBeamParams = DampedBeamParams(), sign=1):
    """+- 4 pi^2 k^2 i / sqrt(-alpha0)."""
    return sign * 4 * math.pi**2 * k * k * 1j / math.sqrt(-params.alpha0)


def beam_group2_asymptotic(k, params: DampedBeamParams = DampedBeamParams(), sign=1):
    a0, b = params.alpha0, params.beta
    inner = sign * (k * math.pi - math.pi / 2) * 1j + b / (8 * k * math.pi * math.sqrt(-a0))
    return 4 / cmath.sqrt(a0) * inner * inner


def beam_symmetric_characteristic(lam, s_ref, params: DampedBeamParams = DampedBeamParams()):
    """4 s^3 cos(s/2) - beta lam (sin(s/2) - cos(s/2) tanh(s/2)),  s^4 = alpha0 lam^2.

    The fourth root nearest ``s_ref`` is used, which fixes the branch.
    """
    roots = [cmath.sqrt(cmath.sqrt(params.alpha0) * lam) * u for u in (1, -1, 1j, -1j)]
    s = min(roots, key=lambda r: abs(r - s_ref))
    h = s / 2
    return 4 * s**3 * cmath.cos(h) - params.beta * lam * (cmath.sin(h) - cmath.cos(h) * cmath.tanh(h))


def beam_group2(k, params: DampedBeamParams = DampedBeamParams(), sign=1):
    """Group-2 eigenvalue from the symmetric-mode equation, seeded by the asymptote."""
    if params.profile != "constant":
        raise UnsupportedError("beam oracle needs a constant coefficient")
    z0 = beam_group2_asymptotic(k, params, sign)
    s_ref = 2 * (k * math.pi - math.pi / 2)
    return _newton(lambda z: beam_symmetric_characteristic(z, s_ref, params), z0)


# ---------------------------------------------------------------------------
# loaded string


def loaded_string_characteristic(lam, params: LoadedStringParams = LoadedStringParams()):
    """(lam - kappa) cos(sqrt lam) + kappa M lam sin(sqrt lam)/sqrt lam  (entire in lam)."""
    return (lam - params.kappa) * np.cos(np.sqrt(lam + 0j)) + params.kappa * params.mass * lam * _sinc_vec(lam)


def _sinc_vec(lam):
    r = np.sqrt(np.asarray(lam, dtype=complex))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r == 0, 1.0, np.sin(r) / np.where(r == 0, 1, r))
    return out


def loaded_string_eigenvalues(count, params: LoadedStringParams = LoadedStringParams()):
    """First ``count`` eigenvalues in (kappa, inf), bracketed then Newton-polished.

    Roots are located by sign changes on a grid refined relative to the
    asymptotic spacing and each one is checked to sit in a sign-change bracket.
    """
    kappa = params.kappa

    def g(x):
        return float(loaded_string_characteristic(x, params).real)

    hi = ((count + 1.5) * math.pi) ** 2 + kappa
    xs = np.linspace(kappa * (1 + 1e-9), hi, 200 * (count + 2))
    vals = np.array([g(x) for x in xs])
    roots = []
    for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            r = brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            r = _newton(lambda z: loaded_string_characteristic(z, params), r).real
            d = 1e-9 * max(1.0, r)
            if g(r - d) * g(r + d) > 0:
                raise ConvergenceError(f"root near {r} failed the bracket check")
            roots.append(r)
        if len(roots) == count:
            break
    if len(roots) < count:
        raise ConvergenceError("not enough roots found")
    return np.array(roots)


def loaded_string_asymptotic(k):
    return ((k - 0.5) * math.pi) ** 2


# ---------------------------------------------------------------------------
# butterfly


def symbol_spectrum(coeff_diagonals, samples=2048):
    """Point cloud of a Laurent operator polynomial given as a list of diagonal dicts."""
    pts = []
    for theta in 2 * np.pi * np.arange(samples) / samples:
        coeffs = np.array([sum(v * np.exp(1j * k * theta) for k, v in A.items()) for A in coeff_diagonals])
        scale = np.abs(coeffs).max()
        nz = np.nonzero(np.abs(coeffs) > 1e-14 * scale)[0]
        if nz.size == 0 or nz[-1] == 0:
            continue
        pts.extend(np.roots(coeffs[: nz[-1] + 1][::-1]))
    return np.array(pts)


def butterfly_symbol_spectrum(params: ButterflyParams = ButterflyParams(), samples=2048):
    """Point cloud {lam : t(lam, theta) = 0}, theta sampled uniformly on [0, 2 pi)."""
    return symbol_spectrum(params.coefficient_diagonals(), samples)


# ---------------------------------------------------------------------------
# dispatcher


def oracle_eigenvalues(name, params=None, indices=(1,)):
    """Reference eigenvalues for the registry problem ``name``.

    indices are k values (group 1 of the beam; use ``beam_group2`` for the
    second group).  The waveguide has no oracle.
    """
    from .problems import AcousticParams

    idx = list(indices)
    if name == "acoustic1d":
        p = params or AcousticParams()
        return [acoustic1d_eigenvalue(p.chi, k) for k in idx]
    if name == "acoustic2d":
        p = params or AcousticParams()
        return [acoustic2d_eigenvalue(p.chi, k) for k in idx]
    if name == "damped_beam":
        p = params or DampedBeamParams()
        if p.profile != "constant":
            raise UnsupportedError("beam oracle needs a constant coefficient")
        return [beam_group1(k, p) for k in idx]
    if name == "loaded_string":
        p = params or LoadedStringParams()
        roots = loaded_string_eigenvalues(max(idx), p)
        return [complex(roots[k - 1]) for k in idx]
    if name == "planar_waveguide":
        raise UnsupportedError("no closed-form oracle for the waveguide")
    if name == "butterfly":
        raise UnsupportedError("butterfly spectrum is continuous; use butterfly_symbol_spectrum")
    raise ValueError(f"unknown problem {name!r}")
