"""Random smooth test functions drawn from a squared-exponential Gaussian process.

Each column of a probe quasimatrix is an independent draw from GP(0, K) with

    K(x, y) = exp(-(x - y)^2 / (2 mu^2)) / (mu * sqrt(2 pi)).

Randomness comes from a Philox counter-based generator keyed by
``(seed, column index)``, so column ``j`` is reproducible independently of how
many other columns are drawn or in which order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .funcore import Fun, Quasimatrix, cheb_points1, chop_length, vals_to_coeffs
from .linalg import eig_hermitian

CHOP_TOL = 1e-10
EIG_CUTOFF = 1e-8


@dataclass(frozen=True)
class GpConfig:
    """Parameters of the probe process.

    Attributes:
        domain: (a, b) interval the draws live on.
        length_scale: kernel length scale mu; ``None`` means (b - a) / 10.
        grid_size: minimum number of Chebyshev points for the sampling grid.
        seed: RNG seed.
    """

    domain: tuple = (-1.0, 1.0)
    length_scale: float | None = None
    grid_size: int = 64
    seed: int = 0

    def __post_init__(self):
        a, b = self.domain
        if not b > a:
            raise ValueError("domain must satisfy a < b")
        if self.length_scale is not None and not self.length_scale > 0:
            raise ValueError("length scale must be positive")
        if self.grid_size < 8:
            raise ValueError("grid_size must be at least 8")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def mu(self):
        a, b = self.domain
        return self.length_scale if self.length_scale is not None else (b - a) / 10

    @property
    def npoints(self):
        a, b = self.domain
        return max(self.grid_size, math.ceil(20 * (b - a) / self.mu))


def se_kernel(x, y, mu):
    """Squared-exponential covariance normalized by mu * sqrt(2 pi)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(-((x - y) ** 2) / (2 * mu * mu)) / (mu * math.sqrt(2 * math.pi))


@lru_cache(maxsize=16)
def _sampling_factor(a, b, mu, npts):
    """Square-root factor F with F F^T ~ Gram on the Chebyshev grid."""
    x = a + (b - a) * (cheb_points1(npts) + 1) / 2
    G = se_kernel(x[:, None], x[None, :], mu)
    lam, V = eig_hermitian(G)
    lam_max = lam[-1]
    if lam[0] < -1e-8 * lam_max:
        raise ValueError("kernel Gram is indefinite beyond jitter tolerance")
    keep = lam > EIG_CUTOFF * lam_max
    F = V[:, keep].real * np.sqrt(lam[keep])
    F.setflags(write=False)
    return F


def column_rng(seed, column):
    """Philox generator keyed by (seed, column)."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(column)]))


def sample_fun(cfg: GpConfig, column: int) -> Fun:
    """Draw column ``column`` of the probe family as a single-piece Fun."""
    a, b = cfg.domain
    F = _sampling_factor(float(a), float(b), float(cfg.mu), int(cfg.npoints))
    xi = column_rng(cfg.seed, column).standard_normal(F.shape[1])
    vals = F @ xi
    coeffs = vals_to_coeffs(vals)
    coeffs = coeffs[: chop_length(coeffs, CHOP_TOL)]
    return Fun((a, b), [coeffs], tol=CHOP_TOL)


def sample_quasimatrix(cfg: GpConfig, count: int, breakpoints=None, start=0) -> Quasimatrix:
    """Quasimatrix of ``count`` independent GP draws.

    Args:
        cfg: process configuration.
        count: number of columns.
        breakpoints: optional breakpoint list spanning ``cfg.domain``; the draws
            are re-resolved on each piece.
        start: index of the first column (draws are keyed by column index).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    funs = []
    for j in range(start, start + count):
        f = sample_fun(cfg, j)
        if breakpoints is not None and len(breakpoints) > 2:
            f = f.restrict(breakpoints, tol=CHOP_TOL)
        funs.append(f)
    return Quasimatrix.from_funs(funs)
