import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infnep.gallery import AcousticParams, acoustic1d_eigenvalue, loaded_string_eigenvalues, make_problem
from infnep.opcore import LaurentOperator, NepProblem, resolvent_norm_oracle
from infnep.pseudospec import (
    PseudospectraGrid,
    gamma,
    gamma_adaptive,
    grid,
    matrix_nep_grid,
    write_line_svg,
)

PROPS = settings(max_examples=100, deadline=None, derandomize=True)


def identity_family():
    return NepProblem("identity", lambda z: LaurentOperator({0: 1.0}), space="laurent", breakpoints=())


def test_identity_family_has_gamma_one():
    assert gamma(identity_family(), 0.3 + 2j, 8) == pytest.approx(1.0, abs=1e-14)


def test_gamma_small_at_loaded_string_eigenvalue():
    problem = make_problem("loaded_string")
    assert gamma(problem, loaded_string_eigenvalues(1)[0], 256) <= 1e-4


def test_truncation_below_minimum_rejected():
    with pytest.raises(ValueError):
        gamma(make_problem("loaded_string"), 2.0, 2)


def test_one_by_one_matrix_family():
    g = matrix_nep_grid(lambda z: np.array([[z]]), (-1, 1, 5), (-1, 1, 4))
    np.testing.assert_allclose(g.gamma, np.abs(g.points), atol=1e-15)
    assert not g.certified


def test_diagonal_matrix_family():
    g = matrix_nep_grid(lambda z: np.diag([z - 1, z - 2]), (0, 3, 7), (-1, 1, 3))
    z = g.points
    np.testing.assert_allclose(g.gamma, np.minimum(np.abs(z - 1), np.abs(z - 2)), atol=1e-14)


def test_grid_far_from_spectrum_has_empty_tiny_sublevel_set():
    problem = make_problem("acoustic1d", AcousticParams(chi=0.8))
    g = grid(problem, (0.1, 0.3, 3), (-0.6, -0.4, 2), levels=(1e-8,))
    assert g.sublevel(1e-8).size == 0
    assert np.all(g.gamma >= 0)
    assert np.all(g.n_used >= problem(0.2).min_truncation())


def test_sublevel_sets_shrink_onto_eigenvalue():
    problem = make_problem("acoustic1d", AcousticParams(chi=0.8))
    lam = acoustic1d_eigenvalue(0.8, 1)
    g = grid(problem, (lam.real - 0.1, lam.real + 0.1, 9), (lam.imag - 0.1, lam.imag + 0.1, 9))
    sizes = [g.sublevel(eps).size for eps in (1.0, 0.3, 0.1)]
    assert sizes[0] >= sizes[1] >= sizes[2] >= 1
    # the smallest value sits at the grid point on the eigenvalue
    i, j = np.unravel_index(np.argmin(g.gamma), g.gamma.shape)
    assert abs(g.points[i, j] - lam) < 1e-12


def test_grid_requires_two_points_per_axis():
    with pytest.raises(ValueError):
        grid(make_problem("loaded_string"), (2, 3, 1), (0, 1, 2))


def test_csv_header_and_rows(tmp_path):
    problem = make_problem("loaded_string")
    g = grid(problem, (2, 3, 2), (0.5, 1, 3))
    path = tmp_path / "g.csv"
    g.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["re", "im", "gamma", "n_used"]
    assert len(rows) == 1 + 6
    # row-major with the imaginary part outer
    assert float(rows[1][1]) == float(rows[2][1]) == 0.5
    assert float(rows[1][2]) == g.gamma[0, 0]


def test_svg_outputs_are_marked_non_certified(tmp_path):
    g = matrix_nep_grid(lambda z: np.array([[z]]), (-1, 1, 4), (-1, 1, 4), levels=(0.5, 1.0))
    p = tmp_path / "g.svg"
    g.write_svg(p, points=[0j])
    text = p.read_text()
    assert text.startswith("<svg") and "non-certified rendering" in text and "Re z" in text
    q = tmp_path / "l.svg"
    write_line_svg(q, [10, 20, 40], [0.5, 0.6, 0.7], "n", "min |lam|", logx=True)
    assert "non-certified rendering" in q.read_text()


def test_butterfly_gamma_small_on_symbol_curve():
    from infnep.gallery import butterfly_symbol_spectrum

    problem = make_problem("butterfly")
    z = butterfly_symbol_spectrum(samples=64)[5]
    assert gamma_adaptive(problem, z).value <= 1e-3


# -- invariants ------------------------------------------------------------------

zs = st.complex_numbers(min_magnitude=0.0, max_magnitude=5.0, allow_nan=False, allow_infinity=False)


@pytest.mark.invariant
@PROPS
@given(st.floats(0.3, 2.0), zs)
def test_gamma_is_an_upper_bound_certificate(chi, z):
    problem = make_problem("acoustic1d", AcousticParams(chi=chi))
    oracle = resolvent_norm_oracle(problem(z))
    assert gamma(problem, z, 32) >= oracle - 1e-8


@pytest.mark.invariant
@PROPS
@given(st.sampled_from(["acoustic1d", "loaded_string", "damped_beam", "butterfly"]), zs)
def test_gamma_monotone_at_grid_points(name, z):
    problem = make_problem(name)
    if name == "loaded_string" and abs(z - 1) < 1e-3:
        z += 0.5
    assert gamma(problem, z, 64) <= gamma(problem, z, 32) + 1e-12


@pytest.mark.invariant
@PROPS
@given(
    st.integers(2, 6),
    st.integers(2, 6),
    st.lists(st.floats(0, 1, allow_nan=False), min_size=36, max_size=36),
    st.floats(0, 1, allow_nan=False),
)
def test_sublevel_set_is_exactly_the_stored_points(nx, ny, values, eps):
    gam = np.array(values[: nx * ny]).reshape(ny, nx)
    g = PseudospectraGrid(
        np.linspace(0, 1, nx), np.linspace(0, 1, ny), gam, np.full((ny, nx), 16), np.ones((ny, nx), bool), (eps,)
    )
    pts = g.sublevel(eps)
    expected = {complex(p) for p, v in zip(g.points.ravel(), gam.ravel()) if v < eps}
    assert {complex(p) for p in pts} == expected
