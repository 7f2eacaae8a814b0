import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import (
    small_bump_problem,
    solve_manufactured,
    solve_small_bump,
)
from nlslab.errors import DomainError, InadmissibleCoefficient
from nlslab.forcing import gaussian_bump
from nlslab.grids import ComplexField, build_grid
from nlslab.params import derive_coefficients, validate_params
from nlslab.profile import (
    ProfileProblem,
    residual,
    solve_profile,
    sublinear_term,
    symmetry_check,
    uniqueness_probe,
)


class TestSublinearTerm:
    def test_zero_at_zero(self):
        assert sublinear_term(0.0, 0.5, 0.0) == 0.0

    def test_real_value(self):
        assert sublinear_term(4.0, 0.5, 0.0) == pytest.approx(2.0)

    def test_modulus_identity_seeded(self):
        rng = np.random.default_rng(3)
        z = rng.standard_normal(100) + 1j * rng.standard_normal(100)
        for m in (0.25, 0.5, 0.75):
            out = sublinear_term(z, m, 0.0)
            assert np.allclose(np.abs(out), np.abs(z) ** m)

    @given(st.complex_numbers(min_magnitude=1e-8, max_magnitude=1e6,
                              allow_nan=False, allow_infinity=False),
           st.floats(min_value=0.05, max_value=0.95))
    def test_modulus_identity(self, z, m):
        out = complex(sublinear_term(z, m, 0.0))
        assert abs(out) == pytest.approx(abs(z) ** m, rel=1e-9)

    def test_regularization_bounds_value(self):
        # with eps > 0 the term stays below the unregularized modulus
        z = 1e-6 + 0.0j
        assert abs(complex(sublinear_term(z, 0.5, 1e-2))) < abs(z) ** 0.5


class TestSolveProfile:
    def test_zero_data_zero_solution(self):
        params, coeffs, grid, F, problem = small_bump_problem(128, amplitude=1e-3)
        zero_problem = ProfileProblem(params=params, coeffs=coeffs, grid=grid,
                                      G=ComplexField(grid, np.zeros(grid.n)))
        sol = solve_profile(zero_problem)
        assert sol.converged
        assert sol.iterations == 1
        assert np.max(np.abs(sol.g.values)) == 0.0

    def test_manufactured_recovery_discrete(self):
        params, coeffs, grid, gstar, problem, sol = solve_manufactured(500, analytic=False)
        assert sol.converged
        err = grid.norm_l2(sol.g.values - gstar) / grid.norm_l2(gstar)
        assert err <= 1e-6

    def test_manufactured_convergence_order(self):
        errs = []
        for n in (250, 500, 1000):
            params, coeffs, grid, gstar, problem, sol = solve_manufactured(n, analytic=True)
            assert sol.converged
            errs.append(grid.norm_l2(sol.g.values - gstar) / grid.norm_l2(gstar))
        order = math.log2(errs[0] / errs[-1]) / 2.0
        assert order >= 1.9, errs

    def test_small_amplitude_direct(self):
        params, coeffs, grid, F, problem = small_bump_problem(256, amplitude=1e-9)
        # ||G|| below the continuation threshold: solved in a single stage
        assert grid.norm_l2(problem.G.values) < problem.continuation_threshold
        sol = solve_profile(problem)
        assert sol.converged
        assert sol.residual_norm <= problem.tol

    def test_history_records_schedule(self):
        *_, sol = solve_small_bump(800)
        eps_seen = {h["reg_eps"] for h in sol.history}
        assert 0.0 in eps_seen and 1e-2 in eps_seen
        assert all(set(h) == {"iteration", "residual", "theta", "reg_eps"}
                   for h in sol.history)
        # final reported residual is for the unregularized equation
        assert sol.history[-1]["reg_eps"] == 0.0

    def test_nonconvergence_reports_best_iterate(self):
        params, coeffs, grid, F, problem = small_bump_problem(256)
        import dataclasses
        starved = dataclasses.replace(problem, max_iter=3)
        sol = solve_profile(starved)
        assert not sol.converged
        assert sol.iterations <= 3
        assert len(sol.history) == sol.iterations
        assert np.all(np.isfinite(sol.g.values))


class TestResidual:
    def test_exact_pair(self):
        params, coeffs, grid, gstar, problem, sol = solve_manufactured(500, analytic=False)
        assert residual(problem, ComplexField(grid, gstar)) <= 1e-10

    def test_zero_field_gives_norm_G(self):
        params, coeffs, grid, F, problem = small_bump_problem(256)
        r = residual(problem, ComplexField(grid, np.zeros(grid.n)))
        mask = grid.interior
        expected = float(np.sqrt(np.sum(grid.weight[mask]
                                        * np.abs(problem.G.values[mask]) ** 2)))
        assert r == pytest.approx(expected)

    def test_monotone_in_perturbation(self):
        params, coeffs, grid, gstar, problem, sol = solve_manufactured(500, analytic=False)
        rng = np.random.default_rng(11)
        noise = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        noise[grid.dirichlet] = 0.0
        rs = [residual(problem, ComplexField(grid, gstar + d * noise))
              for d in (1e-4, 1e-3, 1e-2)]
        assert rs[0] < rs[1] < rs[2]


class TestAPrioriBound:
    def test_h1_ratio_bounded_and_grid_stable(self):
        # ||g||_H1 <= M0 (R^2+1) ||G||_L2 : record the empirical constant over
        # an amplitude sweep and check it moves < 20% under grid refinement.
        ratios = {}
        for n in (512, 1024):
            worst = 0.0
            for amp in np.geomspace(1e-4, 1e-2, 10):
                params, coeffs, grid, F, problem, sol = solve_small_bump(n, float(amp))
                assert sol.converged
                norm_G = grid.norm_l2(problem.G.values)
                ratio = grid.norm_h1(sol.g.values) / ((params.R ** 2 + 1) * norm_G)
                worst = max(worst, ratio)
            ratios[n] = worst
        m0_emp = max(ratios.values())
        assert all(r <= m0_emp for r in ratios.values())
        assert abs(ratios[512] - ratios[1024]) <= 0.2 * ratios[1024], ratios


class TestUniquenessProbe:
    def _problem(self, n=401):
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=1.0))
        coeffs = derive_coefficients(params)
        grid = build_grid("interval", 1, 1.0, n)
        F = gaussian_bump(grid.nodes, 1e-3, 0.15, 0.4)
        G = ComplexField(grid, -F * np.exp(-1j * grid.nodes ** 2 / 8.0))
        return params, grid, ProfileProblem(params=params, coeffs=coeffs,
                                            grid=grid, G=G)

    def test_three_random_guesses_coincide(self):
        params, grid, problem = self._problem()
        rng = np.random.default_rng(0)
        guesses = []
        for _ in range(3):
            v = 1e-4 * (rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n))
            v[grid.dirichlet] = 0.0
            guesses.append(ComplexField(grid, v))
        report = uniqueness_probe(problem, guesses)
        assert all(report.converged)
        assert report.max_pairwise_distance <= 1e-6
        assert len(report.iterations) == 3
        assert all(it > 0 for it in report.iterations)

    def test_zero_data_all_zero(self):
        params, grid, problem = self._problem(128)
        import dataclasses
        zp = dataclasses.replace(problem, G=ComplexField(grid, np.zeros(grid.n)))
        rng = np.random.default_rng(1)
        guesses = [ComplexField(grid, 1e-3 * rng.standard_normal(grid.n)
                                * grid.interior) for _ in range(2)]
        report = uniqueness_probe(zp, guesses)
        assert report.max_pairwise_distance <= 1e-10

    def test_regime_enforced(self):
        params = validate_params(dict(m=0.5, a=-1.0 - 1.0j, im_p=0.0, N=1, R=1.0))
        coeffs = derive_coefficients(params)
        grid = build_grid("interval", 1, 1.0, 64)
        problem = ProfileProblem(params=params, coeffs=coeffs, grid=grid,
                                 G=ComplexField(grid, np.zeros(64)))
        with pytest.raises(InadmissibleCoefficient):
            uniqueness_probe(problem, [])

    def test_radius_enforced(self):
        # R = 2 exceeds the uniqueness radius 1.68179 at Im p = 0
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        coeffs = derive_coefficients(params)
        grid = build_grid("interval", 1, 2.0, 64)
        problem = ProfileProblem(params=params, coeffs=coeffs, grid=grid,
                                 G=ComplexField(grid, np.zeros(64)))
        with pytest.raises(DomainError):
            uniqueness_probe(problem, [])


class TestSymmetry:
    def test_even_forcing(self):
        params, coeffs, grid, F, problem = small_bump_problem(801)
        assert symmetry_check(problem) <= 1e-8

    def test_odd_forcing(self):
        params, coeffs, grid, F, problem = small_bump_problem(801)
        import dataclasses
        odd = dataclasses.replace(
            problem, G=ComplexField(grid, problem.G.values * np.sign(grid.nodes)))
        assert symmetry_check(odd, parity="odd") <= 1e-8

    def test_zero_forcing(self):
        params, coeffs, grid, F, problem = small_bump_problem(128)
        import dataclasses
        zero = dataclasses.replace(problem, G=ComplexField(grid, np.zeros(grid.n)))
        assert symmetry_check(zero) == 0.0
