"""Operator families for the benchmark problems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..funcore import build_adaptive
from ..opcore import Constraint, IntervalOperator, LaurentOperator, NepProblem


def _c(*terms, label=""):
    return Constraint(tuple(terms), label)


# ---------------------------------------------------------------------------
# acoustic wave, 1D and mode-reduced 2D


@dataclass(frozen=True)
class AcousticParams:
    """Impedance ``chi``; ``mode`` j >= 1 selects sin(j pi y) in the 2D problem."""

    chi: complex = 1.0
    mode: int = 1

    def __post_init__(self):
        if self.chi == 0:
            raise ValueError("chi must be nonzero")
        if self.mode < 1:
            raise ValueError("mode must be >= 1")


def acoustic_operator(z, chi, transverse=0.0):
    """p'' + (4 pi^2 z^2 - transverse^2) p,  p(0) = 0,  chi p'(1) + 2 pi i z p(1) = 0."""
    a0 = 4 * math.pi**2 * z * z - transverse**2
    return IntervalOperator(
        (0.0, 1.0),
        2,
        (((a0,), None, (1.0,)),),
        (
            _c((0, "left", 0, 1.0), label="p(0)"),
            _c((0, "right", 1, chi), (0, "right", 0, 2j * math.pi * z), label="impedance"),
        ),
    )


def acoustic1d(params: AcousticParams = AcousticParams()):
    chi = complex(params.chi)
    return NepProblem(
        "acoustic1d",
        lambda z: acoustic_operator(z, chi),
        breakpoints=(0.0, 1.0),
        region="C",
        metadata={"chi": chi},
    )


def acoustic2d(params: AcousticParams = AcousticParams()):
    """One transverse mode p = sin(j pi y) u(x) of the 2D problem."""
    chi = complex(params.chi)
    j = int(params.mode)
    return NepProblem(
        "acoustic2d",
        lambda z: acoustic_operator(z, chi, transverse=j * math.pi),
        breakpoints=(0.0, 1.0),
        region="C",
        metadata={"chi": chi, "mode": j, "reduction": "p(x, y) = sin(j pi y) u(x)"},
    )


# ---------------------------------------------------------------------------
# damped beam

ALPHA0 = -0.018486857142857
BETA = -0.137142857142857

ALPHA_PROFILES = {
    "constant": lambda x: np.ones_like(x),
    "1+x^2": lambda x: 1 + x**2,
    "x": lambda x: x,
    "1+cos(10pi x)^2": lambda x: 1 + np.cos(10 * np.pi * x) ** 2,
}


@dataclass(frozen=True)
class DampedBeamParams:
    """alpha(x) = alpha0 * profile(x); damper strength beta at x = 1/2."""

    alpha0: float = ALPHA0
    beta: float = BETA
    profile: str = "constant"

    def __post_init__(self):
        if self.alpha0 == 0:
            raise ValueError("alpha0 must be nonzero")
        if self.profile not in ALPHA_PROFILES:
            raise ValueError(f"unknown alpha profile {self.profile!r}; choose from {sorted(ALPHA_PROFILES)}")


def damped_beam(params: DampedBeamParams = DampedBeamParams()):
    bp = (0.0, 0.5, 1.0)
    prof = ALPHA_PROFILES[params.profile]
    alpha = build_adaptive(lambda x: params.alpha0 * prof(x), bp, tol=1e-15)
    alpha_pieces = [np.array(c) for c in alpha.pieces]
    beta = params.beta

    def assemble(z):
        coeffs = tuple((-(z * z) * a, None, None, None, (1.0,)) for a in alpha_pieces)
        cons = (
            _c((0, "left", 0, 1.0), label="v(0)"),
            _c((0, "left", 2, 1.0), label="v''(0)"),
            _c((1, "right", 0, 1.0), label="v(1)"),
            _c((1, "right", 2, 1.0), label="v''(1)"),
            _c((0, "right", 0, 1.0), (1, "left", 0, -1.0), label="[v]"),
            _c((0, "right", 1, 1.0), (1, "left", 1, -1.0), label="[v']"),
            _c((0, "right", 2, 1.0), (1, "left", 2, -1.0), label="[v'']"),
            _c((1, "left", 3, 1.0), (0, "right", 3, -1.0), (0, "right", 0, -beta * z), label="[v'''] - beta z v"),
        )
        return IntervalOperator(bp, 4, coeffs, cons)

    return NepProblem(
        "damped_beam",
        assemble,
        breakpoints=bp,
        region="C",
        metadata={"alpha0": params.alpha0, "beta": beta, "profile": params.profile},
    )


# ---------------------------------------------------------------------------
# loaded string


@dataclass(frozen=True)
class LoadedStringParams:
    mass: float = 1.0
    kappa: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.kappa > 0):
            raise ValueError("mass and stiffness must be positive")


def loaded_string(params: LoadedStringParams = LoadedStringParams()):
    M, kappa = params.mass, params.kappa

    def assemble(z):
        return IntervalOperator(
            (0.0, 1.0),
            2,
            (((-z,), None, (-1.0,)),),
            (
                _c((0, "left", 0, 1.0), label="u(0)"),
                _c((0, "right", 1, 1.0), (0, "right", 0, z * kappa * M / (z - kappa)), label="load"),
            ),
        )

    return NepProblem(
        "loaded_string",
        assemble,
        breakpoints=(0.0, 1.0),
        region=f"C minus {{{kappa}}}",
        metadata={"mass": M, "kappa": kappa, "pole": kappa},
    )


# ---------------------------------------------------------------------------
# planar waveguide


@dataclass(frozen=True)
class WaveguideParams:
    """Layered refractive indices eta_0..eta_J with interfaces x_1 = 0 < ... < x_J = L.

    ``mu_form`` selects the exterior map: "matched" uses
    mu = delta_+/k^2 + delta_-^2/(4 k^2 lam^2) + lam^2/k^2, which is the
    one consistent with the Robin rows; "printed" uses delta_-/(8 k^2 lam^2).
    """

    eta: tuple = (1.5, 1.66, 1.6, 1.53, 1.66, 1.0)
    interfaces: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    k: float = 2 * math.pi / 0.6328
    mu_form: str = "matched"

    def __post_init__(self):
        if len(self.eta) != len(self.interfaces) + 1:
            raise ValueError("need J+1 indices for J interfaces")
        if any(b <= a for a, b in zip(self.interfaces[:-1], self.interfaces[1:])):
            raise ValueError("interfaces must be strictly increasing")
        if self.mu_form not in ("matched", "printed"):
            raise ValueError("mu_form must be 'matched' or 'printed'")

    @property
    def delta_plus(self):
        return self.k**2 * (self.eta[0] ** 2 + self.eta[-1] ** 2) / 2

    @property
    def delta_minus(self):
        return self.k**2 * (self.eta[0] ** 2 - self.eta[-1] ** 2) / 2

    def k2mu(self, lam):
        """k^2 mu(lam)."""
        dm = self.delta_minus
        if self.mu_form == "matched":
            return self.delta_plus + dm * dm / (4 * lam * lam) + lam * lam
        return self.delta_plus + dm / (8 * lam * lam) + lam * lam


def planar_waveguide(params: WaveguideParams = WaveguideParams()):
    bp = tuple(float(x) for x in params.interfaces)
    q = len(bp) - 1
    k2 = params.k**2
    inner = params.eta[1:-1]
    dm = params.delta_minus

    def assemble(z):
        k2mu = params.k2mu(z)
        coeffs = tuple(((k2 * inner[p] ** 2 - k2mu,), None, (1.0,)) for p in range(q))
        cons = [
            _c((0, "left", 1, 1.0), (0, "left", 0, dm / (2 * z) - z), label="robin left"),
            _c((q - 1, "right", 1, 1.0), (q - 1, "right", 0, dm / (2 * z) + z), label="robin right"),
        ]
        for p in range(q - 1):
            cons.append(_c((p, "right", 0, 1.0), (p + 1, "left", 0, -1.0), label=f"[phi] at {bp[p + 1]}"))
            cons.append(_c((p, "right", 1, 1.0), (p + 1, "left", 1, -1.0), label=f"[phi'] at {bp[p + 1]}"))
        return IntervalOperator(bp, 2, coeffs, tuple(cons))

    return NepProblem(
        "planar_waveguide",
        assemble,
        breakpoints=bp,
        region="C minus {0}",
        metadata={
            "essential_spectrum": [0.0],
            "delta_plus": params.delta_plus,
            "delta_minus": dm,
            "mu_form": params.mu_form,
        },
    )


# ---------------------------------------------------------------------------
# butterfly

BUTTERFLY_C = (0.2j, 0, 1.3, 0, 0.1, 0, 1, 0, 0, 0)

# symbols of the two building blocks:  4 + S + S^*  and  S - S^*
BUTTERFLY_BLOCKS = ({0: 4.0, 1: 1.0, -1: 1.0}, {1: 1.0, -1: -1.0})


@dataclass(frozen=True)
class ButterflyParams:
    """Coefficient vector c in C^10.

    Power 4 - j of the polynomial carries c[2j] times block (j mod 2), so
    the leading coefficient comes first; the entries c[2j+1] multiply
    shifts in a second lattice direction, which this one-dimensional model
    only supports when they vanish.
    """

    c: tuple = BUTTERFLY_C

    def __post_init__(self):
        if len(self.c) != 10:
            raise ValueError("c must have 10 entries")
        if any(self.c[2 * j + 1] != 0 for j in range(5)):
            raise ValueError("second-direction coefficients (odd positions) must be zero in the 1D model")

    def coefficient_diagonals(self):
        """Diagonals of A_0..A_4 as dicts offset -> value."""
        out = []
        for power in range(5):
            j = 4 - power
            blk = BUTTERFLY_BLOCKS[j % 2]
            out.append({k: complex(self.c[2 * j]) * v for k, v in blk.items()})
        return out


def butterfly(params: ButterflyParams = ButterflyParams()):
    coeff = params.coefficient_diagonals()

    def assemble(z):
        diag = {}
        zp = 1.0 + 0j
        for A in coeff:
            for k, v in A.items():
                diag[k] = diag.get(k, 0) + zp * v
            zp *= z
        return LaurentOperator(diag)

    return NepProblem(
        "butterfly",
        assemble,
        space="laurent",
        breakpoints=(),
        discrete_spectrum=False,
        region="C",
        metadata={"c": [complex(x) for x in params.c], "degree": 4 - min((j for j in range(5) if params.c[2 * j] != 0), default=4)},
    )
