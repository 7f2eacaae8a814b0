"""Gauge transforms and reconstruction of space-time solutions from profiles.

A profile U on a grid generates the space-time field
u(t, x) = t^(p/2) U(x / sqrt(t)), and a forcing profile F generates
f(t, x) = t^((p-2)/2) F(x / sqrt(t)). Complex powers of the positive reals
t and lambda use the principal logarithm. Profiles are extended by zero
outside their grid, which is exact for the compactly supported solutions
this package produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveTime
from .grids import ComplexField, gradient_values
from .params import ModelParams, complex_power
from .profile import sublinear_term


def _phase(nodes: np.ndarray, c_gauge: float, sign: float) -> np.ndarray:
    return np.exp(sign * 1j * c_gauge * nodes ** 2 / 4.0)


def gauge_forward(U: ComplexField, c_gauge: float = 0.5) -> ComplexField:
    """g(x) = U(x) exp(-i c |x|^2 / 4); the canonical c = 1/2 gives the
    quadratic phase exp(-i |x|^2 / 8)."""
    return ComplexField(U.grid, U.values * _phase(U.grid.nodes, c_gauge, -1.0))


def gauge_backward(g: ComplexField, c_gauge: float = 0.5) -> ComplexField:
    """Exact inverse of :func:`gauge_forward`."""
    return ComplexField(g.grid, g.values * _phase(g.grid.nodes, c_gauge, +1.0))


def profile_equation_residual(U: ComplexField, F: ComplexField,
                              params: ModelParams) -> float:
    """Discrete L2 defect of the untransformed profile equation
    -Lap U + a N(U) - (i p / 2) U + (i/2) x . grad U + F = 0,
    with the transport term in centered differences."""
    grid = U.grid
    x = grid.nodes
    v = U.values
    lap = np.zeros_like(v)
    lap[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / grid.h ** 2
    if grid.kind == "radial":
        r = x[1:-1]
        lap[1:-1] += (grid.N - 1) / r * (v[2:] - v[:-2]) / (2.0 * grid.h)
        # Even reflection at the origin.
        lap[0] = 2.0 * grid.N * (v[1] - v[0]) / grid.h ** 2
    grad = gradient_values(grid, v)
    res = (-lap
           + params.a * sublinear_term(v, params.m, 0.0)
           - 0.5j * params.p_exp * v
           + 0.5j * x * grad
           + F.values)
    mask = grid.interior
    return float(np.sqrt(np.sum(grid.weight[mask] * np.abs(res[mask]) ** 2)))


@dataclass(frozen=True)
class SelfSimilarSolution:
    """Space-time solution generated by a profile: u(t) = t^(p/2) U(./sqrt t)."""

    U: ComplexField
    params: ModelParams


@dataclass(frozen=True)
class SelfSimilarForcing:
    """Space-time forcing generated by a profile: f(t) = t^((p-2)/2) F(./sqrt t)."""

    F: ComplexField
    params: ModelParams


def evaluate_solution(sol: SelfSimilarSolution, t: float, x):
    """u(t, x); x may be scalar or array, zero outside the dilated support."""
    if t <= 0.0:
        raise NonpositiveTime(f"self-similar solutions require t > 0, got t={t}")
    factor = complex_power(t, sol.params.p_exp / 2.0)
    return factor * sol.U.interp(np.asarray(x) / math.sqrt(t))


def evaluate_forcing(frc: SelfSimilarForcing, t: float, x):
    """f(t, x) for t > 0."""
    if t <= 0.0:
        raise NonpositiveTime(f"self-similar forcings require t > 0, got t={t}")
    factor = complex_power(t, (frc.params.p_exp - 2.0) / 2.0)
    return factor * frc.F.interp(np.asarray(x) / math.sqrt(t))


def scaling_invariance_check(sol: SelfSimilarSolution, lam: float,
                             t: float, x: float) -> float:
    """|lambda^(-p) u(lambda^2 t, lambda x) - u(t, x)|; zero up to roundoff
    and interpolation for the self-similar evaluation rule."""
    if lam <= 0.0:
        raise NonpositiveTime(f"scaling factor must be positive, got {lam}")
    left = complex_power(lam, -sol.params.p_exp) * evaluate_solution(
        sol, lam * lam * t, lam * x)
    right = evaluate_solution(sol, t, x)
    return float(np.max(np.abs(left - right)))


def norm_scaling(U: ComplexField, params: ModelParams, q: float, t: float) -> float:
    """||u(t)||_{L^q} from the profile norm: t^(1/(1-m) + N/(2q)) ||U||_{L^q};
    for q = inf the exponent is 1/(1-m)."""
    if t <= 0.0:
        raise NonpositiveTime(f"norm scaling requires t > 0, got t={t}")
    exponent = 1.0 / (1.0 - params.m)
    if q != math.inf:
        exponent += params.N / (2.0 * q)
    return t ** exponent * U.grid.norm_lq(U.values, q)
