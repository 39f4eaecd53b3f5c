"""End-to-end acceptance checks, one test (and one PASS/FAIL line) per criterion.

Run alone with  ``pytest -s tests/test_acceptance.py``  to see the lines as
they are produced; a full run also lists them in the terminal summary.
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from infnep.gallery import (
    AcousticParams,
    ButterflyParams,
    acoustic1d_eigenvalue,
    beam_group1,
    beam_group2,
    beam_group2_asymptotic,
    butterfly_symbol_spectrum,
    butterfly_truncation,
    fem_discretize,
    loaded_string_eigenvalues,
    make_problem,
    solve_matrix_nep,
)
from infnep.infbeyn import Contour, count_eigenvalues, moment_norms, pencil_sigma_inf, probe_functions, refine, run
from infnep.opcore import resolvent_norm_oracle
from infnep.pseudospec import gamma, gamma_adaptive

# eigenvalues accepted by criteria 1, 3 and 4, re-checked by criterion 5
ACCEPTED = {}


def _guard(verdict, number, title, body):
    """Run ``body`` -> (ok, detail); exceptions count as FAIL with the error text."""
    try:
        ok, detail = body()
    except Exception as exc:  # any failure of the pipeline is a FAIL line
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    verdict(number, title, ok, detail)


def test_criterion_01_acoustic_oracle(verdict):
    def body():
        t0 = time.perf_counter()
        problem = make_problem("acoustic1d", AcousticParams(chi=0.8))
        res = run(problem, Contour(0.5 + 0.0874245j, 0.2, 32), m=1, p=5, tol=1e-10)
        elapsed = time.perf_counter() - t0
        exact = acoustic1d_eigenvalue(0.8, 1)
        err = abs(res.eigenvalues[0] - exact) / abs(exact)
        ACCEPTED["acoustic1d"] = (problem, list(res.eigenvalues))
        ok = len(res) == 1 and err <= 1e-8 and elapsed <= 30
        return ok, f"rel err {err:.1e}, {elapsed:.1f} s"

    _guard(verdict, 1, "acoustic 1D eigenvalue matches closed form", body)


def test_criterion_02_empty_certificate(verdict):
    def body():
        t0 = time.perf_counter()
        problem = make_problem("acoustic1d", AcousticParams(chi=1.0))
        contour = Contour(0.5, 1.0, 32)
        count = count_eigenvalues(problem, contour)
        a0, vnorm, _ = moment_norms(problem, contour, probe_functions(problem, 8))
        elapsed = time.perf_counter() - t0
        ok = count == 0 and a0 <= 1e-8 * vnorm and elapsed <= 30
        return ok, f"count {count}, |A0| {a0:.1e} vs |V| {vnorm:.2f}, {elapsed:.1f} s"

    _guard(verdict, 2, "empty spectrum certified for chi = 1", body)


def _loaded_string_center(k):
    # asymptote (k - 1/2)^2 pi^2 plus its first correction 2 kappa M (= 2 here)
    return ((k - 0.5) * np.pi) ** 2 + 2.0


def test_criterion_03_loaded_string(verdict):
    def body():
        t0 = time.perf_counter()
        problem = make_problem("loaded_string")
        exact = loaded_string_eigenvalues(10)
        errs, found = [], []
        for k in range(1, 11):
            res = run(problem, Contour(_loaded_string_center(k), 1.0, 32), m=1, tol=1e-10)
            lam = res.eigenvalues[0]
            found.append(lam)
            errs.append(abs(lam - exact[k - 1]) / exact[k - 1])
        elapsed = time.perf_counter() - t0
        ACCEPTED["loaded_string"] = (problem, found)
        ok = max(errs) <= 1e-8 and elapsed <= 180
        return ok, f"max rel err {max(errs):.1e}, {elapsed:.1f} s"

    _guard(verdict, 3, "first 10 loaded-string eigenvalues match roots", body)


def test_criterion_04_damped_beam(verdict):
    def body():
        problem = make_problem("damped_beam")
        errs, group1 = [], []
        for k in range(1, 6):
            exact = beam_group1(k)
            res = run(problem, Contour(exact, 1.0, 32), m=1, tol=1e-10)
            group1.append(res.eigenvalues[0])
            errs.append(abs(res.eigenvalues[0] - exact) / abs(exact))
        dev, group2 = [], []
        for k in (5, 10, 20):
            asym = beam_group2_asymptotic(k)
            res = run(problem, Contour(asym, 1.0, 32), m=1, tol=1e-10)
            group2.append(res.eigenvalues[0])
            dev.append(abs(res.eigenvalues[0] - asym))
        ACCEPTED["damped_beam"] = (problem, group1 + group2)
        decreasing = dev[0] > dev[1] > dev[2]
        # O(1/k): doubling k roughly halves the deviation
        trend = all(0.3 < dev[i + 1] / dev[i] < 0.7 for i in range(2))
        oracle2 = max(abs(l - beam_group2(k)) / abs(beam_group2(k)) for l, k in zip(group2, (5, 10, 20)))
        ok = max(errs) <= 1e-8 and decreasing and trend
        return ok, f"group 1 max rel err {max(errs):.1e}; group 2 deviations {[f'{d:.3f}' for d in dev]}, root check {oracle2:.1e}"

    _guard(verdict, 4, "damped beam group 1 exact, group 2 approaches asymptote", body)


def test_criterion_05_verified_inclusion(verdict):
    def body():
        missing = {"acoustic1d", "loaded_string", "damped_beam"} - set(ACCEPTED)
        if missing:
            return False, f"no accepted eigenvalues from {sorted(missing)}"
        worst, where = 0.0, ""
        for name, (problem, lams) in ACCEPTED.items():
            for lam in lams:
                g = gamma_adaptive(problem, lam).value
                if g > worst:
                    worst, where = g, f"{name} at {complex(lam):.6g}"
        return worst <= 1e-6, f"max gamma {worst:.1e} ({where})"

    _guard(verdict, 5, "accepted eigenvalues lie in the certified 1e-6 pseudospectrum", body)


def test_criterion_06_gamma_monotone_certificate(verdict):
    def body():
        problem = make_problem("loaded_string")
        xs = np.linspace(2.0, 7.0, 10)
        ys = np.linspace(-1.0, 1.0, 10)
        worst_mono = -np.inf
        for y in ys:
            for x in xs:
                z = complex(x, y)
                worst_mono = max(worst_mono, gamma(problem, z, 128) - gamma(problem, z, 64))
        rng = np.random.default_rng(6)
        worst_cert = np.inf
        for _ in range(5):
            z = complex(rng.choice(xs), rng.choice(ys))
            worst_cert = min(worst_cert, gamma(problem, z, 128) - resolvent_norm_oracle(problem(z)))
        ok = worst_mono <= 1e-12 and worst_cert >= -1e-6
        return ok, f"max(g128 - g64) {worst_mono:.1e}, min(g128 - oracle) {worst_cert:.1e}"

    _guard(verdict, 6, "gamma monotone in n and above the resolvent bound", body)


def test_criterion_07_butterfly(verdict):
    def body():
        params = ButterflyParams()
        problem = make_problem("butterfly", params)
        arcs = butterfly_symbol_spectrum(params, samples=2048)
        rng = np.random.default_rng(7)
        # the zero coefficient A_0 puts 0 on every fibre; sample the genuine arcs
        nonzero = arcs[np.abs(arcs) > 1e-12]
        sample = nonzero[rng.choice(len(nonzero), 50, replace=False)]
        on_arc = max(gamma_adaptive(problem, z).value for z in sample)
        lam = solve_matrix_nep(butterfly_truncation(params, 100))
        lam = lam[np.isfinite(lam)]
        dist = np.array([np.abs(arcs - l).min() for l in lam])
        far = lam[dist > 0.2]
        far_gammas = [gamma_adaptive(problem, l).value for l in far]
        invisible = sum(g >= 5e-2 for g in far_gammas)
        ok = on_arc <= 1e-2 and invisible >= 5
        return ok, (
            f"max gamma on arcs {on_arc:.1e}; {len(far)} truncation eigenvalues farther than 0.2 "
            f"from the arcs, {invisible} with gamma >= 5e-2 (need 5)"
        )

    _guard(verdict, 7, "butterfly arcs certified and truncation pollution detected", body)


def test_criterion_08_woes_trend(verdict):
    def body():
        t0 = time.perf_counter()
        sizes = [10, 20, 40, 80, 160]
        params = AcousticParams(chi=1.0)
        mins = np.array([np.abs(solve_matrix_nep(fem_discretize("acoustic1d", params, n))).min() for n in sizes])
        elapsed = time.perf_counter() - t0
        x = np.log(sizes)
        slope, icpt = np.polyfit(x, mins, 1)
        fit = slope * x + icpt
        r2 = 1 - np.sum((mins - fit) ** 2) / np.sum((mins - mins.mean()) ** 2)
        ok = bool(np.all(np.diff(mins) > 0)) and slope > 0 and r2 >= 0.9 and elapsed <= 300
        return ok, f"min|lam| {np.round(mins, 4).tolist()}, slope {slope:.3f}, R^2 {r2:.4f}"

    _guard(verdict, 8, "FEM spurious eigenvalues drift out like log n", body)


def test_criterion_09_quadrature_convergence(verdict):
    def body():
        problem = make_problem("loaded_string")
        exact = loaded_string_eigenvalues(1)[0]
        V = probe_functions(problem, 6)
        errs = []
        for nodes in (8, 16, 32):
            res = run(problem, Contour(4.5, 1.0, nodes), m=1, V=V, filter_residual=False)
            errs.append(abs(res.eigenvalues[0] - exact) / exact)
        floor = 1e-12
        ok = all(b <= a / 10 or b <= floor for a, b in zip(errs[:-1], errs[1:]))
        return ok, "errors " + ", ".join(f"{e:.1e}" for e in errs)

    _guard(verdict, 9, "eigenvalue error decays geometrically in the node count", body)


def test_criterion_10_stability_bound(verdict):
    def body():
        problem = make_problem("loaded_string")
        V = probe_functions(problem, 6)
        coarse = run(problem, Contour(4.5, 1.0, 16), m=1, V=V)
        fine = run(problem, Contour(4.5, 1.0, 32), m=1, V=V)
        a0c, a1c, _ = coarse.moments
        a0f, a1f, _ = fine.moments
        eps = max((a0c - a0f).norm(), (a1c - a1f).norm())
        amp = coarse.diagnostics["pinv_A0_norm_A1"]
        rng = np.random.default_rng(10)
        worst = -np.inf
        for _ in range(10):
            z = 4.5 + 0.95 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            diff = abs(pencil_sigma_inf(coarse, z) - pencil_sigma_inf(fine, z))
            worst = max(worst, diff - (2 * amp + abs(z) + 1) * eps)
        return worst <= 0, f"max(difference - bound) {worst:.1e}, eps {eps:.1e}"

    _guard(verdict, 10, "pencil singular values obey the quadrature perturbation bound", body)


def test_criterion_11_waveguide_accumulation(verdict):
    def body():
        problem = make_problem("planar_waveguide")
        contour = Contour(0.9j, 0.1, 64)
        m = count_eigenvalues(problem, contour)
        res = refine(problem, run(problem, contour, m, tol=1e-8), tol=1e-8)
        order = np.argsort(-np.abs(res.eigenvalues))
        mods = np.abs(res.eigenvalues[order])
        rel = res.relative_residuals[order]
        ok = len(mods) >= 3 and bool(np.all(np.diff(mods) < 0)) and rel.max() <= 1e-6
        return ok, f"{len(mods)} eigenvalues, |lam| {np.round(mods, 4).tolist()}, max rel residual {rel.max():.1e}"

    _guard(verdict, 11, "waveguide eigenvalues accumulate toward 0", body)


@pytest.mark.skipif(os.environ.get("INFNEP_INNER_RUN") == "1", reason="avoid recursion")
def test_criterion_12_property_suites(verdict):
    def body():
        here = os.path.dirname(os.path.abspath(__file__))
        env = dict(os.environ, INFNEP_INNER_RUN="1")
        proc = subprocess.run(
            [sys.executable, "-m", "pytest", "-q", "-m", "invariant", "-p", "no:cacheprovider", here],
            capture_output=True,
            text=True,
            env=env,
        )
        tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()[-200:]
        return proc.returncode == 0, tail

    _guard(verdict, 12, "module invariant suites pass", body)
