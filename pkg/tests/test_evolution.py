import math

import numpy as np
import pytest

from conftest import solve_small_bump
from nlslab.errors import DomainError
from nlslab.evolution import (
    energy_balance,
    evolve,
    evolve_selfsimilar,
    extinction_probe,
    mass_balance,
    step,
)
from nlslab.grids import ComplexField, build_grid
from nlslab.params import validate_params
from nlslab.selfsimilar import gauge_backward

# a = 1e-300 is numerically indistinguishable from zero while satisfying the
# admissibility constraint Re(a) > 0 that a = 0 would violate.
LINEAR = validate_params(dict(m=0.5, a=1e-300, im_p=0.0, N=1, R=2.0))


def eigenmode(grid):
    v = np.sin(np.pi * (grid.nodes + grid.R) / (2 * grid.R)).astype(complex)
    v[grid.dirichlet] = 0.0
    return ComplexField(grid, v)


class TestStep:
    def test_linear_flow_preserves_eigenmode_amplitude(self):
        grid = build_grid("interval", 1, 2.0, 257)
        u = eigenmode(grid)
        t, dt = 1.0, 0.01
        for _ in range(10):
            u_next = step(u, t, dt, LINEAR)
            # unitary linear flow: modulus preserved pointwise on an eigenmode
            assert np.max(np.abs(np.abs(u_next.values) - np.abs(u.values))) <= 1e-10
            u, t = u_next, t + dt

    def test_zero_state_stays_zero(self):
        grid = build_grid("interval", 1, 2.0, 65)
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        z = ComplexField(grid, np.zeros(65))
        out = step(z, 1.0, 0.05, params)
        assert np.all(out.values == 0.0)

    def test_richardson_order(self):
        # error against the two-half-step composition scales at order >= 1.9
        grid = build_grid("interval", 1, 2.0, 257)
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        u0 = ComplexField(grid, (np.exp(-4 * grid.nodes ** 2)
                                 * np.cos(2 * grid.nodes)).astype(complex))
        u0.values[grid.dirichlet] = 0.0
        diffs = []
        for dt in (0.02, 0.01, 0.005):
            full = step(u0, 1.0, dt, params)
            half = step(step(u0, 1.0, dt / 2, params), 1.0 + dt / 2, dt / 2, params)
            diffs.append(grid.norm_l2(full.values - half.values))
        order = math.log2(diffs[0] / diffs[-1]) / 2.0
        assert order >= 1.9, diffs

    def test_bad_dt(self):
        grid = build_grid("interval", 1, 2.0, 65)
        with pytest.raises(DomainError):
            step(eigenmode(grid), 1.0, 0.0, LINEAR)


class TestMassBalance:
    def test_real_coefficient_conserves_mass(self):
        grid = build_grid("interval", 1, 2.0, 257)
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        u0 = ComplexField(grid, (0.1 * np.exp(-4 * grid.nodes ** 2)).astype(complex))
        u0.values[grid.dirichlet] = 0.0
        run = evolve(u0, params, 1.0, 1.5, 100)
        assert np.max(mass_balance(run)) <= 1e-8
        # Im(a) = 0 and f = 0: mass is conserved along the flow
        assert np.max(np.abs(run.mass - run.mass[0])) <= 1e-8 * run.mass[0]

    def test_dissipative_mass_strictly_decreasing(self):
        grid = build_grid("interval", 1, 2.0, 257)
        params = validate_params(dict(m=0.5, a=-1.0j, im_p=0.0, N=1, R=2.0))
        u0 = ComplexField(grid, np.exp(-4 * grid.nodes ** 2).astype(complex))
        u0.values[grid.dirichlet] = 0.0
        run = evolve(u0, params, 1.0, 2.0, 200)
        assert np.all(np.diff(run.mass) < 0.0)
        assert np.max(mass_balance(run)) <= 1e-8

    def test_zero_state(self):
        grid = build_grid("interval", 1, 2.0, 65)
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        run = evolve(ComplexField(grid, np.zeros(65)), params, 1.0, 1.2, 10)
        assert np.all(mass_balance(run) == 0.0)

    def test_forced_identity_holds(self):
        params, coeffs, grid, F, problem, sol = solve_small_bump(500)
        from nlslab.selfsimilar import SelfSimilarForcing, evaluate_forcing
        frc = SelfSimilarForcing(F=F, params=params)
        U = gauge_backward(sol.g)
        u0 = ComplexField(grid, U.values)
        run = evolve(u0, params, 1.0, 2.0, 100,
                     forcing=lambda t, x: evaluate_forcing(frc, t, x))
        assert np.max(mass_balance(run)) <= 1e-6


class TestEnergyBalance:
    def test_linear_flow_drift(self):
        grid = build_grid("interval", 1, 2.0, 257)
        u0 = eigenmode(grid)
        run = evolve(u0, LINEAR, 1.0, 2.0, 200)
        assert np.max(energy_balance(run)) <= 1e-8

    def test_nonlinear_small_data_drift(self):
        grid = build_grid("interval", 1, 2.0, 257)
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        u0 = ComplexField(grid, (0.1 * np.exp(-4 * grid.nodes ** 2)).astype(complex))
        u0.values[grid.dirichlet] = 0.0
        run = evolve(u0, params, 1.0, 2.0, 400)
        assert np.max(energy_balance(run)) <= 1e-4

    def test_zero_state_zero_energy(self):
        grid = build_grid("interval", 1, 2.0, 65)
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        run = evolve(ComplexField(grid, np.zeros(65)), params, 1.0, 1.2, 10)
        assert np.all(run.energy == 0.0)

    def test_requires_unforced_real_a(self):
        grid = build_grid("interval", 1, 2.0, 65)
        params = validate_params(dict(m=0.5, a=-1.0j, im_p=0.0, N=1, R=2.0))
        u0 = ComplexField(grid, np.exp(-grid.nodes ** 2).astype(complex))
        u0.values[grid.dirichlet] = 0.0
        run = evolve(u0, params, 1.0, 1.1, 5)
        with pytest.raises(DomainError):
            energy_balance(run)


class TestExtinction:
    def test_zero_initial_state(self):
        grid = build_grid("interval", 1, 2.0, 65)
        params = validate_params(dict(m=0.5, a=-1.0j, im_p=0.0, N=1, R=2.0))
        rep = extinction_probe(ComplexField(grid, np.zeros(65)), params,
                               horizon=1.0, steps=10)
        assert rep.extinct and rep.first_passage == 1.0

    def test_gaussian_extinguishes(self):
        grid = build_grid("interval", 1, 3.0, 301)
        params = validate_params(dict(m=0.5, a=-1.0j, im_p=0.0, N=1, R=3.0))
        u0 = ComplexField(grid, (0.5 * np.exp(-grid.nodes ** 2 / 0.5)).astype(complex))
        u0.values[grid.dirichlet] = 0.0
        rep = extinction_probe(u0, params, horizon=8.0, steps=1600)
        assert rep.extinct
        assert not rep.horizon_reached
        assert np.all(np.diff(rep.mass) < 0.0)
        # decay identity along the flow
        assert rep.decay_residual_max <= 1e-6

    def test_horizon_reached_is_reported(self):
        grid = build_grid("interval", 1, 3.0, 201)
        params = validate_params(dict(m=0.5, a=-1.0j, im_p=0.0, N=1, R=3.0))
        u0 = ComplexField(grid, np.exp(-grid.nodes ** 2).astype(complex))
        u0.values[grid.dirichlet] = 0.0
        rep = extinction_probe(u0, params, horizon=0.05, steps=10)
        assert not rep.extinct
        assert rep.horizon_reached

    def test_requires_dissipative_coefficient(self):
        grid = build_grid("interval", 1, 2.0, 65)
        params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=2.0))
        with pytest.raises(DomainError):
            extinction_probe(ComplexField(grid, np.zeros(65)), params, 1.0, 10)


class TestSelfSimilarEvolution:
    def test_deviation_zero_at_start(self):
        params, coeffs, grid, F, problem, sol = solve_small_bump(500)
        dev = evolve_selfsimilar(gauge_backward(sol.g), params, F, 1.0, 2.0, 50)
        assert dev.deviation[0] == 0.0

    def test_support_tracks_sqrt_t(self):
        from nlslab.localization import support_radius
        params, coeffs, grid, F, problem, sol = solve_small_bump(1000)
        dev = evolve_selfsimilar(gauge_backward(sol.g), params, F, 1.0, 4.0, 400)
        run = dev.run
        # measure support above the run's own error floor, otherwise the
        # dispersive error tails (~deviation level) count as support
        thr = max(1e-6, 10.0 * dev.max_deviation)
        r0 = support_radius(run.snapshots[0], thr)
        for t, snap in zip(run.snapshot_times, run.snapshots):
            r = support_radius(snap, thr)
            assert r <= math.sqrt(t) * r0 + 2 * run.grid.h, (t, r)

    def test_boundary_untouched(self):
        params, coeffs, grid, F, problem, sol = solve_small_bump(500)
        dev = evolve_selfsimilar(gauge_backward(sol.g), params, F, 1.0, 4.0, 100)
        assert dev.run.boundary_max <= 1e-10

    def test_time_starts_positive(self):
        from nlslab.errors import NonpositiveTime
        params, coeffs, grid, F, problem, sol = solve_small_bump(500)
        with pytest.raises((DomainError, NonpositiveTime)):
            evolve_selfsimilar(gauge_backward(sol.g), params, F, 0.0, 1.0, 10)


def test_evolution_grid_auto_extends():
    # profile grid too small for the growing support: a wider grid is built
    params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=1, R=1.0))
    grid = build_grid("interval", 1, 1.0, 201)
    w = np.maximum(1.0 - (grid.nodes / 0.9) ** 2, 0.0) ** 3
    U = ComplexField(grid, (0.01 * w).astype(complex))
    F = ComplexField(grid, np.zeros(grid.n))
    dev = evolve_selfsimilar(U, params, F, 1.0, 4.0, 50)
    assert dev.run.grid.R > grid.R
    assert dev.run.grid.h == pytest.approx(grid.h, rel=0.1)
    assert dev.deviation[0] <= 1e-12


def test_radial_evolution_mass_conservation():
    # the radial transport stencil is self-adjoint only to O(h^2) under the
    # weighted quadrature, so the discrete identity holds to ~1e-8 here
    # rather than machine precision; the contract tolerance is 1e-6
    grid = build_grid("radial", 3, 2.0, 201)
    params = validate_params(dict(m=0.5, a=1.0, im_p=0.0, N=3, R=2.0))
    u0 = ComplexField(grid, (0.1 * np.exp(-2 * grid.nodes ** 2)).astype(complex))
    u0.values[grid.dirichlet] = 0.0
    run = evolve(u0, params, 1.0, 1.2, 40)
    assert np.max(mass_balance(run)) <= 1e-6
    assert np.max(np.abs(run.mass - run.mass[0])) <= 1e-6 * run.mass[0]
