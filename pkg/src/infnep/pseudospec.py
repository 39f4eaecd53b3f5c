"""Certified pseudospectra from rectangular truncations, plus matrix-NEP baselines."""

from __future__ import annotations

import csv
import html
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedError
from .infbeyn import default_threads
from .opcore import LaurentOperator, gamma_branch


def _min_truncation(op):
    return op.min_truncation()


def gamma(problem, z, n, both_branches=None):
    """gamma_n(z): smallest singular value of the truncated T(z) (and adjoint).

    With ``both_branches`` unset, problems declaring a discrete spectrum use
    the direct branch only; otherwise the minimum over both branches is
    returned.  The value is never below ||T(z)^{-1}||^{-1} and decreases
    monotonically in n.
    """
    op = problem(z)
    if n < _min_truncation(op):
        raise ValueError(f"n must be at least {_min_truncation(op)}")
    both = (not problem.discrete_spectrum) if both_branches is None else both_branches
    val = gamma_branch(op, n)
    if both:
        adj = problem.adjoint(z) if not isinstance(op, LaurentOperator) else op.adjoint()
        val = min(val, gamma_branch(adj, n))
    return float(val)


@dataclass
class AdaptiveGamma:
    value: float
    n_used: int
    converged: bool
    history: list = field(default_factory=list)


DEFAULT_NMAX = {"interval": 1024, "laurent": 131072}


def gamma_adaptive(problem, z, tol=1e-10, n0=None, nmax=None, both_branches=None):
    """Double n until |gamma_2n - gamma_n| <= max(tol, 0.01 gamma_n).

    The last (smallest) value is returned; at the cap the point is flagged
    unconverged but the value remains a valid upper bound.  The default cap
    is larger for Laurent operators, whose banded sections are cheap and
    converge only like 1/n on the continuous spectrum.
    """
    op = problem(z)
    if nmax is None:
        nmax = DEFAULT_NMAX["laurent" if isinstance(op, LaurentOperator) else "interval"]
    n = max(_min_truncation(op), 16) if n0 is None else max(n0, _min_truncation(op))
    prev = gamma(problem, z, n, both_branches)
    history = [(n, prev)]
    while 2 * n <= nmax:
        n *= 2
        cur = gamma(problem, z, n, both_branches)
        history.append((n, cur))
        if abs(cur - prev) <= max(tol, 0.01 * prev):
            return AdaptiveGamma(cur, n, True, history)
        prev = cur
    return AdaptiveGamma(prev, n, False, history)


@dataclass
class PseudospectraGrid:
    """gamma values on a rectangular grid, stored row-major (imag outer, real inner)."""

    re: np.ndarray
    im: np.ndarray
    gamma: np.ndarray
    n_used: np.ndarray
    converged: np.ndarray
    levels: tuple = ()
    certified: bool = True

    def __post_init__(self):
        if len(self.re) < 2 or len(self.im) < 2:
            raise ValueError("grid needs at least 2 points per axis")

    @property
    def points(self):
        return self.re[None, :] + 1j * self.im[:, None]

    def sublevel(self, eps):
        """Grid points with gamma < eps, exactly as stored (no interpolation)."""
        mask = self.gamma < eps
        return self.points[mask]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im", "gamma", "n_used"])
            for i, y in enumerate(self.im):
                for j, x in enumerate(self.re):
                    w.writerow([repr(float(x)), repr(float(y)), repr(float(self.gamma[i, j])), int(self.n_used[i, j])])

    def to_record(self):
        return {
            "re": self.re.tolist(),
            "im": self.im.tolist(),
            "gamma": self.gamma.tolist(),
            "n_used": self.n_used.tolist(),
            "converged": self.converged.tolist(),
            "levels": list(self.levels),
            "certified": self.certified,
        }

    def write_svg(self, path, points=(), title=""):
        write_svg(path, self, points=points, title=title)


def _axis(spec):
    lo, hi, count = spec
    count = int(count)
    if count < 2:
        raise ValueError("grid needs at least 2 points per axis")
    return np.linspace(float(lo), float(hi), count)


def grid(problem, re_spec, im_spec, levels=(), tol=1e-10, n0=None, nmax=None, threads=None, both_branches=None):
    """gamma on the grid re_spec x im_spec, each spec being (lo, hi, count)."""
    re, im = _axis(re_spec), _axis(im_spec)
    pts = [complex(x, y) for y in im for x in re]

    def work(z):
        return gamma_adaptive(problem, z, tol=tol, n0=n0, nmax=nmax, both_branches=both_branches)

    nthreads = default_threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            res = list(ex.map(work, pts))
    else:
        res = [work(z) for z in pts]
    shape = (len(im), len(re))
    return PseudospectraGrid(
        re,
        im,
        np.array([r.value for r in res]).reshape(shape),
        np.array([r.n_used for r in res]).reshape(shape),
        np.array([r.converged for r in res]).reshape(shape),
        tuple(sorted(levels)),
    )


def matrix_sigma_min(A):
    return float(np.linalg.svd(np.asarray(A, dtype=complex), compute_uv=False)[-1])


def matrix_nep_grid(family, re_spec, im_spec, levels=(), threads=None):
    """Smallest singular value of the square matrix family(z) on a grid (dense SVD).

    These values describe the discretized problem only and carry no
    guarantee for the underlying operator.
    """
    re, im = _axis(re_spec), _axis(im_spec)
    pts = [complex(x, y) for y in im for x in re]
    n = np.asarray(family(pts[0])).shape
    if len(n) != 2 or n[0] != n[1]:
        raise UnsupportedError("matrix family must be square")

    def work(z):
        return matrix_sigma_min(family(z))

    nthreads = default_threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            vals = list(ex.map(work, pts))
    else:
        vals = [work(z) for z in pts]
    shape = (len(im), len(re))
    return PseudospectraGrid(
        re,
        im,
        np.array(vals).reshape(shape),
        np.full(shape, n[0]),
        np.ones(shape, dtype=bool),
        tuple(sorted(levels)),
        certified=False,
    )


# ---------------------------------------------------------------------------
# SVG rendering

_PALETTE = ("#08306b", "#2171b5", "#6baed6", "#c6dbef", "#deebf7", "#f7fbff")


def svg_document(width, height, body, title=""):
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    parts = [head, f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        parts.append(f'<text x="{width / 2}" y="16" text-anchor="middle" font-size="13">{html.escape(title)}</text>')
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts)


def _frame(xlo, xhi, ylo, yhi, xlabel, ylabel, width=520, height=440, margin=60):
    def sx(x):
        return margin + (x - xlo) / (xhi - xlo or 1.0) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - ylo) / (yhi - ylo or 1.0) * (height - 2 * margin)

    body = [
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" height="{height - 2 * margin}" '
        'fill="none" stroke="black"/>'
    ]
    for t in np.linspace(xlo, xhi, 5):
        body.append(f'<text x="{sx(t):.1f}" y="{height - margin + 16}" text-anchor="middle" font-size="10">{t:.3g}</text>')
    for t in np.linspace(ylo, yhi, 5):
        body.append(f'<text x="{margin - 6}" y="{sy(t) + 3:.1f}" text-anchor="end" font-size="10">{t:.3g}</text>')
    body.append(f'<text x="{width / 2}" y="{height - 18}" text-anchor="middle" font-size="12">{html.escape(xlabel)}</text>')
    body.append(
        f'<text x="16" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {height / 2})">{html.escape(ylabel)}</text>'
    )
    return sx, sy, body, width, height


def write_svg(path, g: PseudospectraGrid, points=(), title=""):
    """Filled-cell rendering of the sublevel sets; marked as non-certified."""
    re, im = g.re, g.im
    dx = (re[1] - re[0]) / 2
    dy = (im[1] - im[0]) / 2
    sx, sy, body, width, height = _frame(re[0] - dx, re[-1] + dx, im[0] - dy, im[-1] + dy, "Re z", "Im z")
    levels = sorted(g.levels, reverse=True)
    for k, eps in enumerate(levels):
        color = _PALETTE[min(len(_PALETTE) - 1, len(levels) - 1 - k)]
        for i, y in enumerate(im):
            for j, x in enumerate(re):
                if g.gamma[i, j] < eps:
                    x0, x1 = sx(x - dx), sx(x + dx)
                    y0, y1 = sy(y + dy), sy(y - dy)
                    body.append(
                        f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" height="{y1 - y0:.2f}" fill="{color}"/>'
                    )
    for z in points:
        body.append(f'<circle cx="{sx(z.real):.2f}" cy="{sy(z.imag):.2f}" r="2.5" fill="red"/>')
    legend = ", ".join(f"{eps:.1e}" for eps in sorted(g.levels))
    body.append(f'<text x="{width - 8}" y="{height - 4}" text-anchor="end" font-size="10">levels: {legend}</text>')
    body.append('<text x="8" y="30" font-size="11" fill="firebrick">non-certified rendering</text>')
    with open(path, "w") as fh:
        fh.write(svg_document(width, height, body, title))


def write_line_svg(path, x, y, xlabel, ylabel, title="", logx=False):
    """Simple polyline chart (used for woes sweeps); marked as non-certified."""
    x = np.log10(np.asarray(x, dtype=float)) if logx else np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sx, sy, body, width, height = _frame(x.min(), x.max(), y.min(), y.max(), xlabel, ylabel)
    pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
    body.append(f'<polyline points="{pts}" fill="none" stroke="#2171b5" stroke-width="1.5"/>')
    for a, b in zip(x, y):
        body.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="#08306b"/>')
    body.append('<text x="8" y="30" font-size="11" fill="firebrick">non-certified rendering</text>')
    with open(path, "w") as fh:
        fh.write(svg_document(width, height, body, title))
