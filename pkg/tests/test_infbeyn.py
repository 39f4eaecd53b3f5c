import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infnep.cli import NOISE_FLOOR
from infnep.errors import CountTooLargeError, NodeOnSpectrumError
from infnep.gallery import AcousticParams, acoustic1d_eigenvalue, loaded_string_eigenvalues, make_problem
from infnep.infbeyn import Contour, count_eigenvalues, moment_norms, probe_functions, refine, run
from infnep.pseudospec import gamma_adaptive

PROPS = settings(max_examples=100, deadline=None, derandomize=True)


def acoustic_case(chi, k, offset):
    lam = acoustic1d_eigenvalue(chi, k)
    return make_problem("acoustic1d", AcousticParams(chi=chi)), lam, lam + offset


def test_trapezoid_rule_integrates_powers_exactly():
    c = Contour(0.3 - 0.2j, 0.7, 16)
    for j in range(-15, 15):
        s = np.sum(c.weights * (c.points - c.center) ** j) / (2j * np.pi)
        expected = c.radius**0 if j == -1 else 0.0
        assert abs(s - expected) < 1e-14 * max(1.0, c.radius**j)


def test_contour_validation():
    with pytest.raises(ValueError):
        Contour(0, 0.0)
    with pytest.raises(ValueError):
        Contour(0, 1.0, nodes=1)


def test_two_eigenvalues_counted_and_found():
    problem = make_problem("acoustic1d", AcousticParams(chi=0.8))
    exact = [acoustic1d_eigenvalue(0.8, k) for k in (1, 2)]
    contour = Contour(0.75 + 0.17j, 0.4, 64)
    assert count_eigenvalues(problem, contour) == 2
    res = run(problem, contour, 2)
    assert len(res) == 2
    for lam in exact:
        assert np.min(np.abs(res.eigenvalues - lam)) < 1e-9


def test_requesting_too_many_eigenvalues_raises():
    problem = make_problem("acoustic1d", AcousticParams(chi=0.8))
    with pytest.raises(CountTooLargeError):
        run(problem, Contour(0.5 + 0.17j, 0.2, 32), 3)


def test_node_on_eigenvalue_is_reported():
    problem = make_problem("loaded_string")
    lam = loaded_string_eigenvalues(1)[0]
    with pytest.raises(NodeOnSpectrumError):
        run(problem, Contour(lam - 0.5, 0.5, 8), 1)


def test_refine_keeps_or_improves_residuals():
    problem = make_problem("loaded_string")
    coarse = run(problem, Contour(4.5, 1.0, 8), 1, filter_residual=False)
    fine = refine(problem, coarse)
    assert fine.residuals[0] <= coarse.residuals[0]
    assert abs(fine.eigenvalues[0] - loaded_string_eigenvalues(1)[0]) < 1e-10


def test_eigenfunctions_are_normalized_and_serializable():
    problem = make_problem("loaded_string")
    res = run(problem, Contour(4.5, 1.0, 32), 1)
    assert res.eigenfunctions[0].norm() == pytest.approx(1.0, abs=1e-12)
    rec = res.to_record()
    assert rec["eigenvalues"][0]["re"] == pytest.approx(4.4820243, abs=1e-7)


def test_same_seed_same_output():
    problem = make_problem("acoustic1d", AcousticParams(chi=0.8))
    c = Contour(0.5 + 0.17j, 0.2, 32)
    a, b = run(problem, c, 1, seed=7), run(problem, c, 1, seed=7)
    assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()


# -- invariants ------------------------------------------------------------------

cases = st.tuples(st.floats(0.2, 0.9), st.integers(1, 3), st.floats(-0.08, 0.08), st.floats(-0.08, 0.08))


@pytest.mark.invariant
@PROPS
@given(cases, st.integers(0, 10**6), st.integers(0, 10**6))
def test_seed_invariance(case, s1, s2):
    chi, k, dx, dy = case
    problem, lam, center = acoustic_case(chi, k, complex(dx, dy))
    c = Contour(center, 0.2, 32)
    a = run(problem, c, 1, seed=s1).eigenvalues
    b = run(problem, c, 1, seed=s2).eigenvalues
    assert len(a) == len(b) == 1
    assert abs(a[0] - b[0]) <= 1e-6


@pytest.mark.invariant
@PROPS
@given(cases, st.integers(0, 10**6))
def test_contour_invariance(case, seed):
    chi, k, dx, dy = case
    problem, lam, center = acoustic_case(chi, k, complex(dx, dy))
    a = run(problem, Contour(center, 0.2, 32), 1, seed=seed).eigenvalues
    b = run(problem, Contour(center, 0.22, 32), 1, seed=seed).eigenvalues
    assert len(a) == len(b) == 1
    assert abs(a[0] - b[0]) <= 1e-6


@pytest.mark.invariant
@PROPS
@given(cases, st.integers(0, 10**6))
def test_accepted_eigenvalues_pass_verified_inclusion(case, seed):
    chi, k, dx, dy = case
    problem, lam, center = acoustic_case(chi, k, complex(dx, dy))
    res = run(problem, Contour(center, 0.2, 32), 1, seed=seed)
    for l, r in zip(res.eigenvalues, res.residuals):
        assert gamma_adaptive(problem, l).value <= 10 * max(r, NOISE_FLOOR)


@pytest.mark.invariant
@PROPS
@given(cases)
def test_quadrature_error_decays_geometrically(case):
    chi, k, dx, dy = case
    problem, lam, center = acoustic_case(chi, k, complex(dx, dy))
    V = probe_functions(problem, 6)
    errs = []
    for nodes in (8, 16, 32):
        res = run(problem, Contour(center, 0.2, nodes), 1, V=V, filter_residual=False)
        errs.append(abs(res.eigenvalues[0] - lam) / abs(lam))
    for a, b in zip(errs[:-1], errs[1:]):
        assert b <= a / 10 or b <= 1e-12


def test_moment_norms_converge_with_node_doubling():
    problem = make_problem("acoustic1d", AcousticParams(chi=1.0))
    V = probe_functions(problem, 8)
    coarse, vnorm, _ = moment_norms(problem, Contour(0.5, 1.0, 32), V, converge=False)
    fine, _, _ = moment_norms(problem, Contour(0.5, 1.0, 32), V)
    assert fine <= 1e-8 * vnorm < coarse
