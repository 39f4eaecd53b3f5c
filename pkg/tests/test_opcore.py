import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infnep.errors import DomainMismatchError, UnsupportedError
from infnep.funcore import Fun, Quasimatrix, build_adaptive
from infnep.gallery import AcousticParams, LoadedStringParams, make_problem
from infnep.gp import GpConfig, sample_quasimatrix
from infnep.opcore import LaurentOperator, apply, gamma_branch, residual, resolvent_norm_oracle, solve

PROPS = settings(max_examples=100, deadline=None, derandomize=True)


def test_solve_simple_bvp():
    problem = make_problem("acoustic1d", AcousticParams(chi=0.5))
    op = problem(0.3 + 0.1j)
    f = Quasimatrix.from_funs([build_adaptive(lambda x: np.cos(3 * x), (0.0, 1.0))])
    u = solve(op, f).column(0)
    interior, rows = apply(op, u)
    x = np.linspace(0, 1, 51)
    np.testing.assert_allclose(interior(x), np.cos(3 * x), atol=1e-10)
    assert np.abs(rows).max() < 1e-10


def test_apply_rejects_wrong_breakpoints():
    op = make_problem("loaded_string")(2.0)
    with pytest.raises(DomainMismatchError):
        apply(op, Fun.constant(1.0, (0.0, 0.5, 1.0)))


def test_residual_vanishes_on_exact_eigenfunction():
    # acoustic 1D: p = sin(2 pi lam x) with chi cos(2 pi lam) + i sin(2 pi lam) = 0
    from infnep.gallery import acoustic1d_eigenvalue

    lam = acoustic1d_eigenvalue(0.8, 1)
    op = make_problem("acoustic1d", AcousticParams(chi=0.8))(lam)
    u = build_adaptive(lambda x: np.sin(2 * np.pi * lam * x), (0.0, 1.0))
    _, rel = residual(op, u)
    assert rel < 1e-10


def test_laurent_gamma_equals_symbol_minimum_in_the_limit():
    op = LaurentOperator({0: 2.0, 1: -1.0})  # symbol 2 - e^{i theta}, min modulus 1
    g = [gamma_branch(op, n) for n in (16, 64, 256)]
    assert g[0] >= g[1] >= g[2] >= 1.0 - 1e-12
    assert resolvent_norm_oracle(op) == pytest.approx(1.0, abs=1e-12)


def test_laurent_banded_and_dense_sections_agree():
    op = LaurentOperator({-2: 0.3j, 0: 1.0, 1: -0.7, 3: 0.2})
    for n in (4, 20, 60):
        dense = np.linalg.svd(op.section(n), compute_uv=False)[-1]
        assert abs(gamma_branch(op, n) - dense) <= 1e-10 * dense


def test_adjoint_branch_not_assembled_for_interval_operators():
    with pytest.raises(UnsupportedError):
        gamma_branch(make_problem("loaded_string")(2.0), 16, adjoint=True)


def _problem(kind, chi):
    if kind == 0:
        return make_problem("acoustic1d", AcousticParams(chi=chi))
    if kind == 1:
        return make_problem("loaded_string", LoadedStringParams(mass=abs(chi) + 0.5, kappa=1.0))
    return make_problem("damped_beam")


zs = st.complex_numbers(min_magnitude=0.0, max_magnitude=6.0, allow_nan=False, allow_infinity=False)


# -- invariants ------------------------------------------------------------------


@pytest.mark.invariant
@PROPS
@given(st.integers(0, 2), st.floats(0.3, 2.0), zs, st.sampled_from([8, 16, 32, 64]))
def test_gamma_monotone_in_n(kind, chi, z, n):
    problem = _problem(kind, chi)
    if kind == 1 and abs(z - 1.0) < 1e-3:
        z += 0.5
    op = problem(z)
    n = max(n, op.min_truncation())
    assert gamma_branch(op, 2 * n) <= gamma_branch(op, n) + 1e-12


@pytest.mark.invariant
@PROPS
@given(st.floats(0.3, 2.0), zs)
def test_gamma_never_below_inverse_resolvent_norm(chi, z):
    op = _problem(0, chi)(z)
    oracle = resolvent_norm_oracle(op)
    for n in (16, 48):
        assert gamma_branch(op, n) >= oracle - 1e-8


@pytest.mark.invariant
@PROPS
@given(st.integers(0, 1), st.floats(0.3, 2.0), zs, st.integers(0, 10**6))
def test_apply_inverts_solve(kind, chi, z, seed):
    problem = _problem(kind, chi)
    if kind == 1 and abs(z - 1.0) < 1e-2:
        z += 0.5
    op = problem(z)
    F = sample_quasimatrix(GpConfig(domain=(0.0, 1.0), length_scale=0.2, seed=seed), 2)
    U = solve(op, F)
    for j in range(2):
        u, f = U.column(j), F.column(j)
        interior, rows = apply(op, u)
        scale = f.norm() + u.norm() * (1 + abs(z) ** 2)
        assert (interior - f).norm() <= 1e-8 * scale
        assert np.abs(rows).max(initial=0.0) <= 1e-8 * scale
