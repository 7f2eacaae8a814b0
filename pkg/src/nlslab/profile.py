"""Damped fixed-point solver for the gauge-transformed stationary equation.

The equation solved is  -Lap g + a |g|^{-(1-m)} g + b g + c |x|^2 g = G
with zero Dirichlet data. The sublinear term is non-Lipschitz at 0 (and the
interesting solutions vanish on open sets), so the iteration regularizes it
as (|g|^2 + eps^2)^{(m-1)/2} g and anneals eps down to 0; forcing amplitude
is continued geometrically from 10% to 100% to track the small-data branch.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DomainError, InadmissibleCoefficient, InvalidDomain
from .grids import ComplexField, Grid, LinearOperator, assemble_operator
from .params import DerivedCoefficients, ModelParams, uniqueness_radius

REG_SCHEDULE = (1e-2, 1e-4, 1e-8, 0.0)


def sublinear_term(z, m: float, reg_eps: float = 0.0):
    """Regularized sublinear nonlinearity (|z|^2 + eps^2)^((m-1)/2) * z.

    At reg_eps = 0 the value at z = 0 is 0 (the natural convention for
    |z|^{-(1-m)} z, whose modulus is |z|^m).
    """
    z = np.asarray(z, dtype=complex)
    mag2 = np.abs(z) ** 2 + reg_eps * reg_eps
    with np.errstate(divide="ignore", invalid="ignore"):
        out = mag2 ** ((m - 1.0) / 2.0) * z
    return np.where(mag2 > 0.0, out, 0.0 + 0.0j)


def _reg_coefficient(z, m: float, reg_eps: float):
    """Real diagonal coefficient C with C*z = sublinear_term(z)."""
    mag2 = np.abs(z) ** 2 + reg_eps * reg_eps
    with np.errstate(divide="ignore"):
        out = mag2 ** ((m - 1.0) / 2.0)
    return np.where(mag2 > 0.0, out, 0.0)


@dataclass
class ProfileProblem:
    """Stationary problem: coefficients, grid, right-hand side and solver knobs."""

    params: ModelParams
    coeffs: DerivedCoefficients
    grid: Grid
    G: ComplexField
    reg_eps: float = 0.0              # final regularization (residuals use 0)
    theta: float = 0.5                # damping, in (0, 1]
    tol: float = 1e-8                 # absolute discrete-L2 residual target
    max_iter: int = 5000              # total iteration budget
    continuation_steps: int = 8
    continuation_threshold: float = 1e-6   # ||G|| below this skips continuation
    reg_schedule: tuple = REG_SCHEDULE
    scheme: str = "stabilized"        # "stabilized" | "picard"

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise InvalidDomain(f"theta must lie in (0, 1], got {self.theta}")
        if not self.tol > 0.0:
            raise InvalidDomain(f"tol must be positive, got {self.tol}")
        if self.reg_eps < 0.0:
            raise InvalidDomain(f"reg_eps must be >= 0, got {self.reg_eps}")
        if not np.all(np.isfinite(self.G.values)):
            raise InvalidDomain("forcing G contains non-finite values")

    def operator(self) -> LinearOperator:
        return assemble_operator(self.grid, self.coeffs.b, self.coeffs.c)


@dataclass
class ProfileSolution:
    g: ComplexField
    residual_norm: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def residual(problem: ProfileProblem, g: ComplexField, op: LinearOperator | None = None,
             scale: float = 1.0) -> float:
    """Discrete L2 norm of the unregularized equation defect over interior nodes."""
    if op is None:
        op = problem.operator()
    return _residual_values(problem, op, g.values, scale)


def _residual_values(problem, op, values, scale=1.0) -> float:
    r = (op.apply(values)
         + problem.params.a * sublinear_term(values, problem.params.m, 0.0)
         - scale * problem.G.values)
    mask = problem.grid.interior
    w = problem.grid.weight[mask]
    return float(np.sqrt(np.sum(w * np.abs(r[mask]) ** 2)))


def solve_profile(problem: ProfileProblem,
                  initial_guess: ComplexField | None = None) -> ProfileSolution:
    """Solve the stationary problem by damped fixed-point iteration.

    Picard scheme: g <- (1-theta) g + theta L^{-1}(G - a N_eps(g)) with
    L = -Lap + b + c|x|^2. The stabilized scheme (default) freezes the
    sublinear coefficient inside the banded solve instead, which keeps the
    update contractive when a|g|^{m-1} dominates L; both have the same fixed
    points. The damping halves on a residual increase and is restored after
    five consecutive decreases. Convergence is always judged by the residual
    of the unregularized equation.
    """
    grid = problem.grid
    op = problem.operator()
    if initial_guess is None:
        g = grid.zeros()
    else:
        if initial_guess.grid.n != grid.n or initial_guess.grid.R != grid.R \
                or initial_guess.grid.kind != grid.kind:
            raise InvalidDomain("initial guess grid does not match the problem grid")
        g = initial_guess.values.copy()
    g[grid.dirichlet] = 0.0

    norm_G = grid.norm_l2(problem.G.values)
    if norm_G <= problem.continuation_threshold:
        amplitudes = [1.0]
    else:
        steps = max(1, int(problem.continuation_steps))
        amplitudes = list(0.1 ** ((steps - 1 - np.arange(steps)) / max(1, steps - 1)))

    history: list = []
    total_iter = 0
    best = g.copy()
    best_res = _residual_values(problem, op, g)
    stage_budget = max(50, problem.max_iter // 16)
    # anneal down to the problem's target regularization (0 by default)
    schedule = [e for e in problem.reg_schedule if e > problem.reg_eps]
    schedule.append(problem.reg_eps)

    for j, s in enumerate(amplitudes):
        final_amplitude = j == len(amplitudes) - 1
        for eps in schedule:
            final_stage = final_amplitude and eps == problem.reg_eps
            if final_stage:
                # Convergence is judged on the unregularized defect here.
                target = problem.tol
                budget = problem.max_iter - total_iter
            else:
                # Warm-up stages stop on iterate stagnation, not residual.
                target = None
                budget = min(stage_budget, problem.max_iter - total_iter)
            if total_iter > 0 and \
                    _residual_values(problem, op, g, scale=s) <= problem.tol:
                continue  # warm start already solves this stage
            g, res, used = _run_stage(problem, op, g, s, eps, target, budget,
                                      history, total_iter)
            total_iter += used
            if final_amplitude:
                full_res = res if s == 1.0 else _residual_values(problem, op, g)
                if full_res < best_res:
                    best_res = full_res
                    best = g.copy()
            if total_iter >= problem.max_iter:
                break
        if total_iter >= problem.max_iter:
            break

    final_res = _residual_values(problem, op, g)
    if final_res <= best_res:
        best, best_res = g, final_res
    converged = bool(best_res <= problem.tol)
    return ProfileSolution(
        g=ComplexField(grid, best),
        residual_norm=best_res,
        iterations=total_iter,
        converged=converged,
        history=history,
    )


def _run_stage(problem, op, g, s, eps, target, budget, history, iter_offset):
    """One (amplitude, reg_eps) stage of the damped iteration.

    With ``target`` set, stops once the unregularized residual (at forcing
    scale s) drops below it; warm-up stages pass ``target=None`` and stop on
    iterate stagnation instead.
    """
    theta = problem.theta
    theta_min = problem.theta / 64.0
    a = problem.params.a
    m = problem.params.m
    G = s * problem.G.values
    grid = problem.grid
    mask = grid.dirichlet
    res_prev = _residual_values(problem, op, g, scale=s)
    decreases = 0
    used = 0
    while used < budget:
        if problem.scheme == "picard":
            rhs = G - a * sublinear_term(g, m, eps)
            g_raw = op.solve(rhs)
        else:
            coef = _reg_coefficient(g, m, eps)
            op_c = dataclasses.replace(
                op, diag=op.diag + a * coef[grid.interior])
            g_raw = op_c.solve(G)
        g_new = (1.0 - theta) * g + theta * g_raw
        g_new[mask] = 0.0
        used += 1
        res = _residual_values(problem, op, g_new, scale=s)
        history.append({
            "iteration": iter_offset + used,
            "residual": res,
            "theta": theta,
            "reg_eps": eps,
        })
        if res > res_prev and theta > theta_min:
            theta = max(theta_min, 0.5 * theta)
            decreases = 0
            continue  # reject the step, retry more cautiously
        step = grid.norm_l2(g_new - g)
        g = g_new
        res_prev = res
        if target is not None and res <= target:
            break
        if target is None and step <= 1e-4 * max(grid.norm_l2(g), 1e-300):
            break  # warm-up stage has stagnated
        decreases += 1
        if decreases >= 5 and theta < problem.theta:
            theta = problem.theta
            decreases = 0
    return g, res_prev, used


@dataclass
class UniquenessReport:
    max_pairwise_distance: float
    iterations: list
    converged: list
    residuals: list


def uniqueness_probe(problem: ProfileProblem, guesses) -> UniquenessReport:
    """Solve from several initial guesses and report the solution spread.

    Requires the uniqueness regime: Re(a) > 0, Im(a) = 0 and a domain radius
    within the uniqueness radius of the parameters.
    """
    a = problem.params.a
    if not (a.real > 0.0 and a.imag == 0.0):
        raise InadmissibleCoefficient(
            f"uniqueness regime requires Re(a) > 0 and Im(a) = 0, got a={a}")
    r_max = uniqueness_radius(problem.params)
    if problem.grid.R > r_max + 1e-12:
        raise DomainError(
            f"grid radius {problem.grid.R} exceeds uniqueness radius {r_max:.6g}")
    solutions = []
    iterations = []
    converged = []
    residuals = []
    for guess in guesses:
        sol = solve_profile(problem, initial_guess=guess)
        solutions.append(sol.g.values)
        iterations.append(sol.iterations)
        converged.append(sol.converged)
        residuals.append(sol.residual_norm)
    max_dist = 0.0
    for u, v in combinations(solutions, 2):
        max_dist = max(max_dist, problem.grid.norm_l2(u - v))
    return UniquenessReport(
        max_pairwise_distance=max_dist,
        iterations=iterations,
        converged=converged,
        residuals=residuals,
    )


def symmetry_check(problem: ProfileProblem, parity: str = "auto") -> float:
    """Solve with symmetric data and return the asymmetry norm of the result.

    For even forcing returns ||g(x) - g(-x)||, for odd ||g(x) + g(-x)||; the
    initial guess is the symmetric zero field. Interval grids only.
    """
    grid = problem.grid
    if grid.kind != "interval":
        raise InvalidDomain("symmetry_check requires an interval grid")
    Gv = problem.G.values
    even_defect = grid.norm_l2(Gv - Gv[::-1])
    odd_defect = grid.norm_l2(Gv + Gv[::-1])
    if parity == "auto":
        parity = "even" if even_defect <= odd_defect else "odd"
    if parity not in ("even", "odd"):
        raise InvalidDomain(f"parity must be 'even', 'odd' or 'auto', got {parity!r}")
    sol = solve_profile(problem)
    gv = sol.g.values
    if parity == "even":
        return grid.norm_l2(gv - gv[::-1])
    return grid.norm_l2(gv + gv[::-1])
