"""Contour-integral eigensolver for operator families on function spaces.

The method probes T(z)^{-1} with a handful of random smooth functions,
integrates along a circle with the trapezoid rule, and reduces the
resulting quasimatrices to a small dense eigenvalue problem:

    A0 = (1/2 pi i) sum_k w_k T(z_k)^{-1} V,   A1 = same with a z_k factor,
    A0 = U S0 V0^*  (rank m),   U^* A1 V0 x = lam S0 x,   u = U S0 x.

Nothing is discretized up front: each solve is adaptive, so the computed
eigenfunctions are resolved Funs and residuals are measured on the operator
itself.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, CountTooLargeError, NodeOnSpectrumError, RankDeficiencyError, SingularSystemError
from .funcore import Fun, Quasimatrix, qm_svd
from .gp import GpConfig, sample_quasimatrix
from .linalg import eig_general
from .opcore import residual, solve

RANK_TOL = 1e-12
COUNT_TOL = 1e-10
EMPTY_TOL = 1e-8
MAX_PROBES = 64


@dataclass(frozen=True)
class Contour:
    """Circle  |z - center| = radius  with an ``nodes``-point trapezoid rule."""

    center: complex
    radius: float
    nodes: int = 32
    rotation: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.nodes < 2:
            raise ValueError("need at least two nodes")
        object.__setattr__(self, "center", complex(self.center))

    @property
    def angles(self):
        return 2 * np.pi * np.arange(self.nodes) / self.nodes + self.rotation

    @property
    def points(self):
        return self.center + self.radius * np.exp(1j * self.angles)

    @property
    def weights(self):
        return (2j * np.pi / self.nodes) * self.radius * np.exp(1j * self.angles)

    def inside(self, z, fraction=1.0):
        return np.abs(np.asarray(z) - self.center) < fraction * self.radius

    def doubled(self):
        return Contour(self.center, self.radius, 2 * self.nodes, self.rotation)


def default_threads(threads=None):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("INFNEP_THREADS")
    return max(1, int(env)) if env else 1


def _pairwise_sum(items):
    """Sum of quasimatrices in a fixed binary-tree order."""
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    return _pairwise_sum(items[:mid]) + _pairwise_sum(items[mid:])


def _solve_at(problem, z, V, tol):
    try:
        return solve(problem(z), V, tol=tol)
    except SingularSystemError as exc:
        raise NodeOnSpectrumError(complex(z)) from exc


def compute_moments(problem, contour, V, tol=1e-12, threads=None, return_norms=False):
    """Trapezoid approximations of the zeroth and first contour moments.

    Returns ``(A0, A1)`` (and the largest ||T(z_k)^{-1} V|| if
    ``return_norms``).  Raises :class:`NodeOnSpectrumError` if a node is an
    eigenvalue.
    """
    zk = contour.points
    nthreads = default_threads(threads)
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            sols = list(pool.map(lambda z: _solve_at(problem, z, V, tol), zk))
    else:
        sols = [_solve_at(problem, z, V, tol) for z in zk]
    scaled = contour.weights / (2j * np.pi)
    A0 = _pairwise_sum([X * w for X, w in zip(sols, scaled)])
    A1 = _pairwise_sum([X * (w * z) for X, w, z in zip(sols, scaled, zk)])
    if return_norms:
        return A0, A1, max(X.norm() for X in sols)
    return A0, A1


@dataclass
class InfBeynResult:
    """Eigenvalues, eigenfunctions and diagnostics of a contour solve."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    eigenfunctions: list
    residuals: np.ndarray
    relative_residuals: np.ndarray
    sigma: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    refined: np.ndarray | None = None
    pencil: tuple | None = None  # (U^* A1 V0, S0)
    moments: tuple | None = None  # (A0, A1, V0)

    @classmethod
    def empty(cls, sigma=(), diagnostics=None):
        return cls(
            np.zeros(0, dtype=complex),
            np.zeros((0, 0), dtype=complex),
            [],
            np.zeros(0),
            np.zeros(0),
            np.asarray(sigma, dtype=float),
            diagnostics or {},
            np.zeros(0, dtype=bool),
        )

    def __len__(self):
        return len(self.eigenvalues)

    def to_record(self, with_functions=True):
        rec = {
            "eigenvalues": [
                {"re": float(l.real), "im": float(l.imag), "residual": float(r), "relative_residual": float(q)}
                for l, r, q in zip(self.eigenvalues, self.residuals, self.relative_residuals)
            ],
            "sigma": [float(s) for s in self.sigma],
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
        }
        if with_functions:
            rec["eigenfunctions"] = [f.to_record() for f in self.eigenfunctions]
        return rec


def _jsonable(v):
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def probe_functions(problem, count, seed=0, length_scale=None, start=0):
    """GP probe quasimatrix on the problem's breakpoints."""
    bp = tuple(problem.breakpoints)
    cfg = GpConfig(domain=(bp[0], bp[-1]), length_scale=length_scale, seed=seed)
    return sample_quasimatrix(cfg, count, breakpoints=bp, start=start)


def run(problem, contour, m, p=5, tol=1e-10, seed=0, V=None, threads=None, length_scale=None, filter_residual=True):
    """Eigenvalues of ``problem`` inside ``contour`` (``m`` of them, counted with multiplicity).

    Args:
        problem: interval NepProblem.
        contour: :class:`Contour`.
        m: number of eigenvalues inside the contour.
        p: oversampling (extra probe columns).
        tol: solver tolerance; eigenpairs with relative residual above
            100 * tol are discarded.
        seed: probe seed.
        V: optional probe quasimatrix overriding the GP draw.

    Raises:
        CountTooLargeError: the moment has numerical rank below m.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if p < 0:
        raise ValueError("p must be non-negative")
    if V is None:
        V = probe_functions(problem, m + p, seed, length_scale)
    A0, A1 = compute_moments(problem, contour, V, tol=min(tol, 1e-12), threads=threads)
    try:
        U, S0, V0 = qm_svd(A0, m, rank_tol=RANK_TOL)
    except RankDeficiencyError as exc:
        raise CountTooLargeError(exc.rank, f"requested {m} eigenvalues but the moment has rank {exc.rank}") from exc
    Q, R = A0.qr()
    sigma = np.linalg.svd(R, compute_uv=False)
    B = U.inner(A1) @ V0
    lam, X = eig_general(B / S0[:, None], vectors=True)
    coords = S0[:, None] * X
    funs = []
    for j in range(len(lam)):
        f = (U @ coords[:, j]).column(0)
        funs.append(f / f.norm())
    res = np.zeros(len(lam))
    rel = np.zeros(len(lam))
    for j, (l, f) in enumerate(zip(lam, funs)):
        res[j], rel[j] = residual(problem(l), f)
    inside = contour.inside(lam, 0.999)
    keep = inside & (rel <= 100 * tol) if filter_residual else inside
    diag = {
        "center": contour.center,
        "radius": contour.radius,
        "nodes": contour.nodes,
        "m": m,
        "p": p,
        "seed": seed,
        "pinv_A0_norm_A1": float(A1.norm() / S0[-1]),
        "rejected": [complex(l) for l in lam[~keep]],
    }
    order = np.argsort(np.abs(lam[keep] - contour.center))
    idx = np.nonzero(keep)[0][order]
    return InfBeynResult(
        eigenvalues=lam[idx],
        vectors=X[:, idx],
        eigenfunctions=[funs[i] for i in idx],
        residuals=res[idx],
        relative_residuals=rel[idx],
        sigma=sigma,
        diagnostics=diag,
        refined=np.ones(len(idx), dtype=bool),
        pencil=(B, S0),
        moments=(A0, A1, V0),
    )


def pencil_sigma_inf(result, z):
    """Smallest singular value of  U^* A1 V0 - z S0  (an m x m matrix)."""
    B, S0 = result.pencil
    F = B - z * np.diag(S0)
    return float(np.linalg.svd(F, compute_uv=False)[-1])


def count_eigenvalues(
    problem, contour, p_probe=8, tol=1e-12, seed=0, threads=None, length_scale=None, max_nodes=1024, quad_rtol=1e-6
):
    """Number of eigenvalues inside ``contour`` from the numerical rank of A0.

    The node count is doubled (reusing earlier nodes) until A0 changes by
    less than ``quad_rtol`` relative, and the probe count is doubled while the
    detected rank is within two of it.  A moment that is negligible relative
    to  radius * max ||T(z_k)^{-1} V||  certifies an empty contour.
    """
    p = int(p_probe)
    while p <= MAX_PROBES:
        V = probe_functions(problem, p, seed, length_scale)
        A0, s, eps_hat, biggest = _converged_moment(problem, contour, V, tol, threads, max_nodes, quad_rtol)
        if s[0] <= EMPTY_TOL * contour.radius * biggest:
            return 0
        mhat = int(np.sum(s > max(COUNT_TOL * s[0], 10 * eps_hat)))
        if mhat < p - 2:
            return mhat
        p *= 2
    raise ConvergenceError(f"eigenvalue count did not settle below {MAX_PROBES} probes")


def _converged_moment(problem, contour, V, tol, threads, max_nodes, quad_rtol):
    """A0 with node doubling; returns (A0, singular values, last change, max solve norm)."""
    c = contour
    A0, _, biggest = compute_moments(problem, c, V, tol=tol, threads=threads, return_norms=True)
    while True:
        if 2 * c.nodes > max_nodes:
            raise ConvergenceError(f"contour quadrature not converged at {c.nodes} nodes")
        # the odd nodes of the doubled rule
        odd = Contour(c.center, c.radius, 2 * c.nodes, c.rotation + np.pi / c.nodes)
        half = Contour(odd.center, odd.radius, c.nodes, odd.rotation)
        B0, _, b = compute_moments(problem, half, V, tol=tol, threads=threads, return_norms=True)
        biggest = max(biggest, b)
        new = (A0 + B0) * 0.5
        change = (new - A0).norm()
        A0 = new
        c = Contour(c.center, c.radius, 2 * c.nodes, c.rotation)
        size = A0.norm()
        if change <= quad_rtol * size or change <= EMPTY_TOL * 1e-2 * c.radius * biggest:
            _, R = A0.qr()
            return A0, np.linalg.svd(R, compute_uv=False), change, biggest


def moment_norms(problem, contour, V, tol=1e-12, threads=None, converge=True, max_nodes=1024, quad_rtol=1e-6):
    """(||A0||, ||V||, radius * max ||T(z_k)^{-1} V||) for empty-contour checks.

    With ``converge`` the node count is doubled as in `count_eigenvalues`, so
    the moment is free of trapezoid error; otherwise ``contour.nodes`` is used.
    """
    if converge:
        A0, _, _, biggest = _converged_moment(problem, contour, V, tol, threads, max_nodes, quad_rtol)
    else:
        A0, _, biggest = compute_moments(problem, contour, V, tol=tol, threads=threads, return_norms=True)
    return A0.norm(), V.norm(), contour.radius * biggest


def _clusters(lam, radius):
    """Single-linkage clusters of eigenvalues closer than ``radius``."""
    n = len(lam)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) < radius:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def refine(problem, coarse, radius=None, nodes=32, tol=1e-10, p=5, seed=0, threads=None):
    """Re-run the solver on small contours around each eigenvalue (or cluster).

    Each singleton gets a circle of radius  min(radius, half the distance to
    its nearest neighbour); eigenvalues closer than ``radius`` share one
    contour with m equal to the cluster size.  An eigenpair keeps its coarse
    value when refinement fails or does not reduce the residual; such
    entries are flagged in ``result.refined``.
    """
    lam = np.asarray(coarse.eigenvalues)
    if lam.size == 0:
        return InfBeynResult.empty(coarse.sigma, dict(coarse.diagnostics))
    if radius is None:
        radius = coarse.diagnostics.get("radius", 1.0) / 10
    out_l, out_x, out_f, out_r, out_q, flags = [], [], [], [], [], []
    for group in _clusters(lam, radius):
        pts = lam[group]
        c = pts.mean()
        others = np.delete(lam, group)
        r = radius + (np.abs(pts - c).max() if len(group) > 1 else 0.0)
        if others.size:
            r = min(r, 0.5 * np.abs(others - c).min())
        result = None
        if r >= 1e-12:
            try:
                result = run(problem, Contour(c, r, nodes), len(group), p=p, tol=tol, seed=seed, threads=threads)
            except Exception:  # refinement is best effort; coarse values stay
                result = None
        for k, i in enumerate(group):
            best = None
            if result is not None and len(result) > 0:
                j = int(np.argmin(np.abs(result.eigenvalues - lam[i])))
                if result.residuals[j] <= coarse.residuals[i]:
                    best = j
            if best is None:
                out_l.append(lam[i])
                out_x.append(coarse.vectors[:, i] if coarse.vectors.size else np.zeros(0))
                out_f.append(coarse.eigenfunctions[i])
                out_r.append(coarse.residuals[i])
                out_q.append(coarse.relative_residuals[i])
                flags.append(False)
            else:
                out_l.append(result.eigenvalues[best])
                out_x.append(result.vectors[:, best])
                out_f.append(result.eigenfunctions[best])
                out_r.append(result.residuals[best])
                out_q.append(result.relative_residuals[best])
                flags.append(True)
    diag = dict(coarse.diagnostics)
    diag["refine_radius"] = radius
    width = max((len(x) for x in out_x), default=0)
    vecs = np.zeros((width, len(out_x)), dtype=complex)
    for j, x in enumerate(out_x):
        vecs[: len(x), j] = x
    return InfBeynResult(
        eigenvalues=np.array(out_l, dtype=complex),
        vectors=vecs,
        eigenfunctions=out_f,
        residuals=np.array(out_r),
        relative_residuals=np.array(out_q),
        sigma=coarse.sigma,
        diagnostics=diag,
        refined=np.array(flags, dtype=bool),
        pencil=coarse.pencil,
        moments=coarse.moments,
    )
