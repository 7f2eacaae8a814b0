"""Grids, discrete calculus and linear-operator assembly.

Two grid kinds cover the bounded domains used throughout: a 1-D interval
[-R, R] and a radial discretization of the ball B(0, R) for N >= 1.
Quadrature is trapezoid-based; ball integrals integrate the piecewise-linear
interpolant exactly, so they are continuous in the cut radius and exact for
polynomials of degree one on interval grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.linalg import solve_banded

from .errors import (
    CenterUnsupported,
    ConvergenceFailure,
    DomainError,
    InvalidDomain,
    OutOfRange,
    SingularOperator,
)

GridKind = Literal["interval", "radial"]

# n=5 is the hard floor (coarse demo grids); production analyses use n >= 16.
MIN_NODES = 5


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N (2 for N=1)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D grid with Dirichlet boundary flags and quadrature weights.

    Interval grids cover [-R, R] (both ends Dirichlet); radial grids cover
    [0, R] (Dirichlet at r=R, symmetry at r=0). ``weight`` integrates over
    the N-dimensional domain: plain trapezoid for intervals, surface-measure
    weighted trapezoid for radial grids.
    """

    kind: GridKind
    N: int
    R: float
    n: int
    h: float
    nodes: np.ndarray
    weight: np.ndarray
    dirichlet: np.ndarray  # boolean mask of boundary nodes

    @property
    def interior(self) -> np.ndarray:
        return ~self.dirichlet

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n, dtype=complex)

    def integral(self, values: np.ndarray):
        """Quadrature of a nodal field over the whole domain."""
        return np.sum(self.weight * values)

    def norm_l2(self, values: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.weight * np.abs(values) ** 2)))

    def norm_lq(self, values: np.ndarray, q: float) -> float:
        """L^q norm via quadrature; q = inf gives the nodal max."""
        if q == math.inf:
            return float(np.max(np.abs(values)))
        if q < 1:
            raise DomainError(f"q must be >= 1, got {q}")
        return float(np.sum(self.weight * np.abs(values) ** q) ** (1.0 / q))

    def norm_h1(self, values: np.ndarray) -> float:
        grad = gradient_values(self, values)
        return float(
            np.sqrt(np.sum(self.weight * (np.abs(values) ** 2 + np.abs(grad) ** 2)))
        )


@dataclass
class ComplexField:
    """Complex nodal values bound to a grid (value semantics)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise InvalidDomain(
                f"field length {vals.shape} does not match grid with n={self.grid.n}"
            )
        self.values = vals.copy()

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values)

    def interp(self, x):
        """Piecewise-linear evaluation, zero outside the grid."""
        return np.interp(x, self.grid.nodes, self.values, left=0.0, right=0.0)


def build_grid(kind: GridKind, N: int, R: float, n: int) -> Grid:
    """Create an interval or radial grid with n nodes."""
    if not R > 0.0:
        raise InvalidDomain(f"R must be positive, got {R}")
    if n < MIN_NODES:
        raise InvalidDomain(f"n must be at least {MIN_NODES}, got {n}")
    if N < 1:
        raise InvalidDomain(f"N must be >= 1, got {N}")
    if kind == "interval":
        if N != 1:
            raise InvalidDomain("interval grids require N=1")
        nodes = np.linspace(-R, R, n)
        h = 2.0 * R / (n - 1)
        weight = np.full(n, h)
        weight[0] = weight[-1] = 0.5 * h
        dirichlet = np.zeros(n, dtype=bool)
        dirichlet[0] = dirichlet[-1] = True
    elif kind == "radial":
        nodes = np.linspace(0.0, R, n)
        h = R / (n - 1)
        weight = sphere_area(N) * nodes ** (N - 1) * h
        # exact volume of the half cell [0, h/2) keeps the origin weight
        # positive (the plain trapezoid weight r^{N-1} h/2 vanishes for N >= 2)
        weight[0] = sphere_area(N) * (0.5 * h) ** N / N
        weight[-1] *= 0.5
        dirichlet = np.zeros(n, dtype=bool)
        dirichlet[-1] = True
    else:
        raise InvalidDomain(f"unknown grid kind {kind!r}")
    return Grid(kind=kind, N=N, R=float(R), n=n, h=float(h), nodes=nodes,
                weight=weight, dirichlet=dirichlet)


def _segment_integral(nodes: np.ndarray, values: np.ndarray, a: float, b: float):
    """Exact integral of the piecewise-linear interpolant over [a, b].

    [a, b] is clipped to the node range; returns 0 for an empty segment.
    """
    a = max(a, float(nodes[0]))
    b = min(b, float(nodes[-1]))
    if b <= a:
        return 0.0
    inside = nodes[(nodes > a) & (nodes < b)]
    pts = np.concatenate(([a], inside, [b]))
    vals = np.interp(pts, nodes, values)
    return np.trapezoid(vals, pts)


def _as_grid_values(field):
    if isinstance(field, ComplexField):
        return field.grid, field.values
    grid, values = field
    return grid, np.asarray(values)


def integrate_ball(field, rho: float, x0: float = 0.0):
    """Integral of a nodal field over B(x0, rho) intersected with the domain.

    ``field`` is a ComplexField or a ``(grid, values)`` pair; partial cells
    at the cut radius are weighted by the exact integral of the linear
    interpolant, so the result is continuous and non-decreasing in rho for
    non-negative integrands.
    """
    grid, values = _as_grid_values(field)
    if rho < 0:
        raise DomainError(f"rho must be non-negative, got {rho}")
    if rho == 0.0:
        return 0.0
    if grid.kind == "interval":
        return _segment_integral(grid.nodes, values, x0 - rho, x0 + rho)
    if x0 != 0.0:
        raise CenterUnsupported("radial grids only support balls centered at 0")
    radial_density = values * grid.nodes ** (grid.N - 1)
    return sphere_area(grid.N) * _segment_integral(grid.nodes, radial_density, 0.0, rho)


def gradient_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Derivative along the grid coordinate: centered interior stencils,
    one-sided second order at the ends."""
    return np.gradient(np.asarray(values), grid.h, edge_order=2)


def gradient(field: ComplexField) -> ComplexField:
    """Derivative field along the grid coordinate.

    On interval and radial grids the full gradient lives in this single
    component (its magnitude is ``abs`` of the returned values).
    """
    return ComplexField(field.grid, gradient_values(field.grid, field.values))


def shell_flux(g: ComplexField, rho: float, x0: float = 0.0) -> complex:
    """Boundary term of the ball energy identities at radius rho.

    Returns the integral of g * conj(grad g . n_out) over the sphere
    S(x0, rho) intersected with the domain, n_out the outward direction from
    x0. Sphere points at or beyond the Dirichlet boundary contribute 0; when
    the whole sphere lies outside the grid, OutOfRange is raised.
    """
    grid = g.grid
    if grid.kind == "radial" and x0 != 0.0:
        raise CenterUnsupported("radial grids only support spheres centered at 0")
    if rho < 0.0:
        raise DomainError(f"rho must be positive, got {rho}")
    if rho == 0.0:
        return 0.0 + 0.0j
    if rho >= grid.R + abs(x0) - 1e-14:
        raise OutOfRange(f"sphere of radius {rho} around {x0} lies outside the grid")
    grad = gradient_values(grid, g.values)
    if grid.kind == "radial":
        gv = np.interp(rho, grid.nodes, g.values)
        dv = np.interp(rho, grid.nodes, grad)
        return complex(gv * np.conj(dv) * sphere_area(grid.N) * rho ** (grid.N - 1))
    total = 0.0 + 0.0j
    for direction in (1.0, -1.0):
        x = x0 + direction * rho
        if abs(x) >= grid.R:
            continue
        gv = np.interp(x, grid.nodes, g.values)
        dv = np.interp(x, grid.nodes, grad)
        total += gv * np.conj(dv) * direction
    return complex(total)


@dataclass
class LinearOperator:
    """Second-order discretization of -Lap + b + c*|x|^2 with Dirichlet data.

    The radial Laplacian carries the (N-1)/r transport term; the origin row
    uses the even-reflection stencil -Lap f(0) = -2N (f_1 - f_0)/h^2. Stored
    as tridiagonal bands over the interior nodes for direct solves.

    ``edge_lower``/``edge_upper`` are the stencil couplings from the first
    and last interior rows into the adjacent Dirichlet nodes; they only
    matter when ``apply`` is given a field that is nonzero on the boundary.
    """

    grid: Grid
    b: complex
    c: complex
    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    edge_lower: complex = 0.0
    edge_upper: complex = 0.0

    @property
    def interior_idx(self) -> np.ndarray:
        return np.flatnonzero(self.grid.interior)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Operator applied at interior nodes; boundary entries are zero."""
        v = np.asarray(values, dtype=complex)
        idx = self.interior_idx
        vi = v[idx]
        out = self.diag * vi
        out[1:] += self.lower[1:] * vi[:-1]
        out[:-1] += self.upper[:-1] * vi[1:]
        left, right = idx[0] - 1, idx[-1] + 1
        if left >= 0:
            out[0] += self.edge_lower * v[left]
        if right < self.grid.n:
            out[-1] += self.edge_upper * v[right]
        result = np.zeros_like(v)
        result[idx] = out
        return result

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (op) u = rhs at interior nodes; returns a full field with
        zero Dirichlet boundary."""
        rhs = np.asarray(rhs, dtype=complex)
        idx = self.interior_idx
        ab = np.zeros((3, idx.size), dtype=complex)
        ab[0, 1:] = self.upper[:-1]
        ab[1] = self.diag
        ab[2, :-1] = self.lower[1:]
        try:
            sol = solve_banded((1, 1), ab, rhs[idx])
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularOperator(str(exc)) from exc
        if not np.all(np.isfinite(sol)):
            raise SingularOperator("banded solve produced non-finite values")
        out = np.zeros_like(rhs)
        out[idx] = sol
        return out


def assemble_operator(grid: Grid, b: complex, c: complex) -> LinearOperator:
    """Assemble -Lap_h + b + c|x|^2 on the interior nodes of the grid."""
    idx = np.flatnonzero(grid.interior)
    x = grid.nodes[idx]
    h2 = grid.h * grid.h
    diag = np.full(idx.size, 2.0 / h2, dtype=complex)
    lower = np.full(idx.size, -1.0 / h2, dtype=complex)
    upper = np.full(idx.size, -1.0 / h2, dtype=complex)
    edge_lower: complex = -1.0 / h2
    edge_upper: complex = -1.0 / h2
    if grid.kind == "radial":
        r = x
        # -Lap f = -f'' - (N-1)/r f'; centered f' shifts the couplings:
        # f_{i+1} gets -(N-1)/(2 h r_i), f_{i-1} gets +(N-1)/(2 h r_i).
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = (grid.N - 1) / (2.0 * grid.h * r)
        coef = np.where(np.isfinite(coef), coef, 0.0)
        lower += coef
        upper -= coef
        if idx[0] == 0:
            diag[0] = 2.0 * grid.N / h2
            upper[0] = -2.0 * grid.N / h2
            lower[0] = 0.0
        edge_lower = 0.0  # nothing left of the origin
        edge_upper = -1.0 / h2 - (grid.N - 1) / (2.0 * grid.h * r[-1])
    diag = diag + b + c * x * x
    return LinearOperator(grid=grid, b=complex(b), c=complex(c),
                          diag=diag, lower=lower, upper=upper,
                          edge_lower=edge_lower, edge_upper=edge_upper)


def smallest_eigenvalue(grid: Grid, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Smallest Dirichlet eigenvalue of -Lap_h via inverse power iteration."""
    op = assemble_operator(grid, b=0.0, c=0.0)
    idx = op.interior_idx
    rng = np.random.default_rng(0)
    v = np.zeros(grid.n, dtype=complex)
    v[idx] = rng.standard_normal(idx.size)
    v /= grid.norm_l2(v)
    lam_old = math.inf
    w = grid.weight
    for _ in range(max_iter):
        v = op.solve(v)
        v /= grid.norm_l2(v)
        av = op.apply(v)
        lam = float((np.sum(w * av * np.conj(v)) / np.sum(w * v * np.conj(v))).real)
        if abs(lam - lam_old) <= tol * max(1.0, abs(lam)):
            return lam
        lam_old = lam
    raise ConvergenceFailure(
        f"inverse power iteration did not converge within {max_iter} iterations"
    )
