"""Benchmark problem registry, reference eigenvalues and finite element baselines."""

from __future__ import annotations

from .fem import MatrixPolynomial, butterfly_truncation, fem_discretize, solve_matrix_nep
from .oracles import (
    acoustic1d_eigenvalue,
    acoustic2d_asymptotic,
    acoustic2d_characteristic,
    acoustic2d_eigenvalue,
    beam_group1,
    beam_group2,
    beam_group2_asymptotic,
    butterfly_symbol_spectrum,
    loaded_string_asymptotic,
    loaded_string_characteristic,
    loaded_string_eigenvalues,
    oracle_eigenvalues,
    symbol_spectrum,
)
from .problems import (
    AcousticParams,
    ButterflyParams,
    DampedBeamParams,
    LoadedStringParams,
    WaveguideParams,
    acoustic1d,
    acoustic2d,
    butterfly,
    damped_beam,
    loaded_string,
    planar_waveguide,
)

REGISTRY = {
    "acoustic1d": (acoustic1d, AcousticParams, "1D acoustic wave with impedance boundary"),
    "acoustic2d": (acoustic2d, AcousticParams, "2D acoustic wave, one transverse mode"),
    "butterfly": (butterfly, ButterflyParams, "quartic Laurent operator polynomial (continuous spectrum)"),
    "damped_beam": (damped_beam, DampedBeamParams, "simply supported beam with a midpoint damper"),
    "loaded_string": (loaded_string, LoadedStringParams, "string with an elastically attached mass"),
    "planar_waveguide": (planar_waveguide, WaveguideParams, "layered dielectric slab waveguide"),
}


def list_problems():
    """[(name, description)] in registry order."""
    return [(name, entry[2]) for name, entry in REGISTRY.items()]


def make_params(name, **kwargs):
    """Parameter object for ``name`` built from keyword overrides."""
    if name not in REGISTRY:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}")
    return REGISTRY[name][1](**kwargs)


def make_problem(name, params=None):
    """NepProblem for a registry name (default parameters when ``params`` is None)."""
    if name not in REGISTRY:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}")
    factory, cls, _ = REGISTRY[name]
    if params is None:
        params = cls()
    elif not isinstance(params, cls):
        raise TypeError(f"{name} expects {cls.__name__}")
    return factory(params)


__all__ = [
    "REGISTRY",
    "AcousticParams",
    "ButterflyParams",
    "DampedBeamParams",
    "LoadedStringParams",
    "MatrixPolynomial",
    "WaveguideParams",
    "acoustic1d_eigenvalue",
    "acoustic2d_asymptotic",
    "acoustic2d_eigenvalue",
    "beam_group1",
    "beam_group2",
    "beam_group2_asymptotic",
    "butterfly_symbol_spectrum",
    "butterfly_truncation",
    "fem_discretize",
    "list_problems",
    "loaded_string_asymptotic",
    "loaded_string_eigenvalues",
    "make_params",
    "make_problem",
    "oracle_eigenvalues",
    "solve_matrix_nep",
    "symbol_spectrum",
]
