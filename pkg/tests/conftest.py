"""Shared fixtures: the bundled small-bump scenario and manufactured pairs.

Solves are cached per resolution so the acceptance refinement studies reuse
the module tests' work.
"""

import numpy as np
import pytest

from nlslab.forcing import gaussian_bump
from nlslab.grids import ComplexField, assemble_operator, build_grid
from nlslab.params import derive_coefficients, validate_params
from nlslab.profile import ProfileProblem, solve_profile, sublinear_term

BUMP = dict(amplitude=1e-3, sigma=0.2, support=0.5)


def small_bump_problem(n, amplitude=1e-3):
    """The bundled scenario: m=1/2, a=1, Im p=0, N=1, R=4, gaussian bump."""
    params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=4.0))
    coeffs = derive_coefficients(params)
    grid = build_grid("interval", 1, 4.0, n)
    F = ComplexField(grid, gaussian_bump(grid.nodes, amplitude,
                                         BUMP["sigma"], BUMP["support"]))
    G = ComplexField(grid, -F.values * np.exp(-1j * grid.nodes ** 2 / 8.0))
    problem = ProfileProblem(params=params, coeffs=coeffs, grid=grid, G=G)
    return params, coeffs, grid, F, problem


_solve_cache = {}


def solve_small_bump(n, amplitude=1e-3):
    key = (n, amplitude)
    if key not in _solve_cache:
        params, coeffs, grid, F, problem = small_bump_problem(n, amplitude)
        sol = solve_profile(problem)
        _solve_cache[key] = (params, coeffs, grid, F, problem, sol)
    return _solve_cache[key]


def manufactured_profile(grid):
    """g* = (1 - x^2/4)_+^3 sampled on the grid (real, compact support)."""
    x = grid.nodes
    w = np.maximum(1.0 - x * x / 4.0, 0.0)
    return (w ** 3).astype(complex)


def manufactured_forcing_discrete(grid, params, coeffs):
    """G* from the discrete operator: the sampled g* solves the discrete
    equation exactly."""
    gstar = manufactured_profile(grid)
    op = assemble_operator(grid, coeffs.b, coeffs.c)
    G = op.apply(gstar) + params.a * sublinear_term(gstar, params.m, 0.0)
    G[grid.dirichlet] = 0.0
    return gstar, G


def manufactured_forcing_analytic(grid, params, coeffs):
    """Closed-form G* = -Lap g* + a N(g*) + b g* + c x^2 g* for the same g*.

    For |x| <= 2:  -Lap g* = (3/2) w (w - x^2) with w = 1 - x^2/4, and
    N(g*) = w^(3/2) (m = 1/2); zero outside the support.
    """
    assert params.m == 0.5
    x = grid.nodes
    w = np.maximum(1.0 - x * x / 4.0, 0.0)
    gstar = (w ** 3).astype(complex)
    G = (1.5 * w * (w - x * x)
         + params.a * w ** 1.5
         + coeffs.b * w ** 3
         + coeffs.c * x * x * w ** 3)
    G = np.where(np.abs(x) <= 2.0, G, 0.0)
    G[grid.dirichlet] = 0.0
    return gstar, np.asarray(G, dtype=complex)


_manufactured_cache = {}


def solve_manufactured(n, analytic):
    key = (n, analytic)
    if key not in _manufactured_cache:
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=4.0))
        coeffs = derive_coefficients(params)
        grid = build_grid("interval", 1, 4.0, n)
        if analytic:
            gstar, G = manufactured_forcing_analytic(grid, params, coeffs)
        else:
            gstar, G = manufactured_forcing_discrete(grid, params, coeffs)
        problem = ProfileProblem(params=params, coeffs=coeffs, grid=grid,
                                 G=ComplexField(grid, G))
        sol = solve_profile(problem)
        _manufactured_cache[key] = (params, coeffs, grid, gstar, problem, sol)
    return _manufactured_cache[key]


@pytest.fixture(scope="session")
def small_bump_2000():
    return solve_small_bump(2000)


@pytest.fixture(scope="session")
def small_bump_800():
    return solve_small_bump(800)
