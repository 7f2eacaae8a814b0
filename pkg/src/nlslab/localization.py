"""Energy-method analysis: cumulative ball energies, the energy inequality,
the integral identities, the localization-radius formula and support checks.

All quantities are cumulative over balls B(x0, rho) intersected with the
domain; the integral identities (pairing the equation with conj(g) and with
i conj(g) over the ball) are exact for true solutions, which makes their
discrete defects the strongest correctness oracle of the whole package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InadmissibleCoefficient
from .grids import ComplexField, Grid, gradient_values, integrate_ball, shell_flux
from .params import ExponentSet, ModelParams, exponent_set


@dataclass
class EnergyProfile:
    """Cumulative energies, masses and boundary terms indexed by radius.

    The cumulative components (everything except the shell terms flux_*)
    are non-negative and non-decreasing in rho.
    """

    x0: float
    radii: np.ndarray
    E: np.ndarray          # ||grad g||^2 over the ball
    bmass: np.ndarray      # ||g||_{m+1}^{m+1}
    l2mass: np.ndarray     # ||g||_2^2
    wmass: np.ndarray      # || |x| g ||_2^2   (weight around the origin)
    flux_abs: np.ndarray   # |shell flux|
    flux_re: np.ndarray
    flux_im: np.ndarray
    Jterm: np.ndarray      # integral of |G g| over the ball
    Gball: np.ndarray      # ||G||_2^2 over the ball
    Gdot: np.ndarray       # complex integral of G conj(g) over the ball

    def interp(self, name: str, rho: float) -> float:
        return float(np.interp(rho, self.radii, getattr(self, name)))

    def to_dict(self) -> dict:
        out = {"x0": self.x0}
        for name in ("radii", "E", "bmass", "l2mass", "wmass",
                     "flux_abs", "flux_re", "flux_im", "Jterm", "Gball"):
            out[name] = [float(v) for v in getattr(self, name)]
        out["Gdot"] = [[float(v.real), float(v.imag)] for v in self.Gdot]
        return out


def energy_profile(g: ComplexField, G: ComplexField, grid: Grid, m: float,
                   x0: float = 0.0, n_radii: int = 64,
                   rho_max_range: float | None = None) -> EnergyProfile:
    """Tabulate all ball quantities on equispaced radii from 0.

    ``m`` is the sublinear exponent entering the L^{m+1} mass. Radii extend
    to cover the whole domain as seen from x0 by default; the shell flux is
    taken as 0 once the sphere has left the open domain.
    """
    if rho_max_range is None:
        rho_max_range = grid.R + abs(x0)
    radii = np.linspace(0.0, rho_max_range, n_radii)
    x = grid.nodes
    gv = g.values
    grad = gradient_values(grid, gv)
    dens_E = np.abs(grad) ** 2
    dens_b = np.abs(gv) ** (m + 1.0)
    dens_l2 = np.abs(gv) ** 2
    dens_w = (x * np.abs(gv)) ** 2
    dens_J = np.abs(G.values * gv)
    dens_G2 = np.abs(G.values) ** 2
    dens_Gdot = G.values * np.conj(gv)

    def cum(dens):
        return np.array([integrate_ball((grid, dens), r, x0) for r in radii])

    E = cum(dens_E).real
    bm = cum(dens_b).real
    l2 = cum(dens_l2).real
    wm = cum(dens_w).real
    Jt = cum(dens_J).real
    G2 = cum(dens_G2).real
    Gd = cum(dens_Gdot)
    w = np.array([_flux_or_zero(g, r, x0) for r in radii])
    return EnergyProfile(
        x0=x0, radii=radii, E=E, bmass=bm, l2mass=l2, wmass=wm,
        flux_abs=np.abs(w), flux_re=w.real, flux_im=w.imag,
        Jterm=Jt, Gball=G2, Gdot=Gd,
    )


def _flux_or_zero(g: ComplexField, rho: float, x0: float) -> complex:
    if rho <= 0.0:
        return 0.0 + 0.0j
    if rho >= g.grid.R + abs(x0) - 1e-14:
        return 0.0 + 0.0j
    return shell_flux(g, rho, x0)


class LemmaConstants(NamedTuple):
    A: float
    L: float
    M: float


def lemma_constants(a: complex, b: complex, c: complex, R: float) -> LemmaConstants:
    """Constants (A, L, M) of the ball energy inequality.

    A is the smallest admissible multiplier: at least 2, large enough that
    A|Im b| - |Re b| - R^2 |Re c| >= 1, and when Re(a) <= 0 also large
    enough that A|Im a| - |Re a| >= 1. Then L = min(A1, 1) and M = 2A.
    """
    a, b, c = complex(a), complex(b), complex(c)
    if not b.imag < 0.0:
        raise InadmissibleCoefficient(f"Im(b) must be < 0, got b={b}")
    if a.imag > 0.0 or (a.real <= 0.0 and a.imag >= 0.0):
        raise InadmissibleCoefficient(f"inadmissible a={a}")
    if c.imag > 0.0:
        raise InadmissibleCoefficient(f"Im(c) must be <= 0, got c={c}")
    if not R > 0.0:
        raise DomainError(f"R must be positive, got {R}")
    A = max(2.0, (1.0 + abs(b.real) + R * R * abs(c.real)) / abs(b.imag))
    if a.real <= 0.0:
        A = max(A, (1.0 + abs(a.real)) / abs(a.imag))
        A1 = A * abs(a.imag) - abs(a.real)
    else:
        A1 = a.real
    A2 = A * abs(b.imag) - abs(b.real)
    assert A2 - R * R * abs(c.real) >= 1.0 - 1e-12
    if a.real <= 0.0:
        assert A1 >= 1.0 - 1e-12
    return LemmaConstants(A=A, L=min(A1, 1.0), M=2.0 * A)


def check_energy_inequality(profile: EnergyProfile, L: float, M: float) -> np.ndarray:
    """margin(rho) = M (I + J) - [E + L bmass + L l2mass] per tabulated radius.

    Non-negative for true solutions; discretization allows a small negative
    slack (see :func:`energy_inequality_tolerance`).
    """
    lhs = profile.E + L * profile.bmass + L * profile.l2mass
    rhs = M * (profile.flux_abs + profile.Jterm)
    return rhs - lhs


def energy_inequality_tolerance(profile: EnergyProfile, L: float, M: float,
                                h: float) -> float:
    """Discretization slack for the inequality margin: 10 h^2 times the
    scale of the dominant term."""
    scale = max(
        float(np.max(profile.E + L * profile.bmass + L * profile.l2mass)),
        float(np.max(M * (profile.flux_abs + profile.Jterm))),
    )
    return 10.0 * h * h * max(scale, 1e-300)


@dataclass
class IdentityResiduals:
    """Defects of the ball integral identities per radius.

    real[j]: | E + Re(a) b + Re(b) l2 + Re(c) w - I_Re - Re(int G conj g) |
    imag[j]: | Im(a) b + Im(b) l2 + Im(c) w + I_Im - Im(int G conj g) |

    The shell term I = int_S g conj(grad g . n) enters the real part with
    I_Re and the imaginary part with +I_Im (pairing the equation with
    i conj(g) flips the conjugate flux sign).
    """

    radii: np.ndarray
    real: np.ndarray
    imag: np.ndarray
    scale: np.ndarray  # magnitude of the largest term entering each identity


def check_identities(g: ComplexField, G: ComplexField, a: complex, b: complex,
                     c: complex, rho_list, m: float, x0: float = 0.0) -> IdentityResiduals:
    """Evaluate both integral identities on balls B(x0, rho)."""
    grid = g.grid
    a, b, c = complex(a), complex(b), complex(c)
    x = grid.nodes
    gv = g.values
    grad = gradient_values(grid, gv)
    dens = {
        "E": np.abs(grad) ** 2,
        "b": np.abs(gv) ** (m + 1.0),
        "l2": np.abs(gv) ** 2,
        "w": (x * np.abs(gv)) ** 2,
        "Gdot": G.values * np.conj(gv),
    }
    rho_arr = np.atleast_1d(np.asarray(rho_list, dtype=float))
    res_re = np.zeros(rho_arr.size)
    res_im = np.zeros(rho_arr.size)
    scales = np.zeros(rho_arr.size)
    for j, rho in enumerate(rho_arr):
        E = integrate_ball((grid, dens["E"]), rho, x0).real
        bm = integrate_ball((grid, dens["b"]), rho, x0).real
        l2 = integrate_ball((grid, dens["l2"]), rho, x0).real
        wm = integrate_ball((grid, dens["w"]), rho, x0).real
        gd = integrate_ball((grid, dens["Gdot"]), rho, x0)
        w = _flux_or_zero(g, rho, x0)
        res_re[j] = abs(E + a.real * bm + b.real * l2 + c.real * wm
                        - w.real - gd.real)
        res_im[j] = abs(a.imag * bm + b.imag * l2 + c.imag * wm
                        + w.imag - gd.imag)
        scales[j] = max(E, abs(a.real) * bm, abs(b.real) * l2, abs(c.real) * wm,
                        abs(a.imag) * bm, abs(b.imag) * l2, abs(c.imag) * wm,
                        abs(w), abs(gd), 1e-300)
    return IdentityResiduals(radii=rho_arr, real=res_re, imag=res_im, scale=scales)


class RhoMaxResult(NamedTuple):
    rho_max: float
    tau_star: float


def rho_max_value(E: float, bmass: float, rho0: float, L: float, M: float,
                  C_cal: float, exponents: ExponentSet,
                  n_tau: int = 512) -> RhoMaxResult:
    """Localization radius from ball data at rho0.

    rho_max^nu = ( rho0^nu - C M^2 max(1, 1/L^2) max(rho0^(nu-1), 1)
                   * min_tau E^gamma(tau) max(b^mu(tau), b^eta(tau))
                     / (2 tau - (1+m)) )_+

    The constant C is existential in the underlying estimate and enters as
    the calibration input C_cal. The tau minimum runs over a dense grid in
    ((m+1)/2, 1], open left endpoint excluded by one grid step. Conventions
    at zero ball data: E = 0 or b = 0 annihilate the subtracted term, giving
    rho_max = rho0 (zero solution mass in the ball); b^0 maps to 1 only for
    b > 0.
    """
    if rho0 <= 0.0:
        raise DomainError(f"rho0 must be positive, got {rho0}")
    if E < 0.0 or bmass < 0.0:
        raise DomainError("ball energies must be non-negative")
    m = exponents.m
    nu = exponents.nu
    tau_min = exponents.tau_min
    taus = tau_min + (1.0 - tau_min) * np.arange(1, n_tau + 1) / n_tau
    if E == 0.0 or bmass == 0.0:
        return RhoMaxResult(rho_max=rho0, tau_star=1.0)
    gam = (2.0 * taus - (1.0 + m)) / exponents.k
    mu = 2.0 * (1.0 - taus) / exponents.k
    eta = (1.0 - m) / (1.0 + m) - gam
    b_pow = np.maximum(bmass ** mu, bmass ** eta)
    integrand = E ** gam * b_pow / (2.0 * taus - (1.0 + m))
    j = int(np.argmin(integrand))
    min_term = float(integrand[j])
    bracket = (rho0 ** nu
               - C_cal * M * M * max(1.0, 1.0 / (L * L))
               * max(rho0 ** (nu - 1.0), 1.0) * min_term)
    rho = max(0.0, bracket) ** (1.0 / nu)
    return RhoMaxResult(rho_max=min(rho, rho0), tau_star=float(taus[j]))


def rho_max(profile: EnergyProfile, rho0: float, L: float, M: float,
            C_cal: float, params: ModelParams) -> RhoMaxResult:
    """Localization radius using E(rho0), b(rho0) interpolated from a profile."""
    E = profile.interp("E", rho0)
    bm = profile.interp("bmass", rho0)
    return rho_max_value(E, bm, rho0, L, M, C_cal, exponent_set(params))


class ForcingDecayMargin(NamedTuple):
    margin: float
    forcing_free_inside: bool


def thmG_margin(profile: EnergyProfile, rho0: float, rho1: float,
                eps_star: float, params: ModelParams) -> ForcingDecayMargin:
    """Margin of the forcing-decay hypothesis.

    Over rho in (rho0, rho1) the hypothesis requires
    ||G||^2_{B(x0, rho)} <= eps_star ((rho - rho0)_+)^p with p the growth
    exponent; returns the minimal slack and whether G vanishes on B(x0, rho0)
    (the condition forces that for rho <= rho0).
    """
    if not 0.0 < rho0 < rho1:
        raise DomainError(f"need 0 < rho0 < rho1, got rho0={rho0}, rho1={rho1}")
    if eps_star <= 0.0:
        raise DomainError(f"eps_star must be positive, got {eps_star}")
    p = exponent_set(params).p_growth
    radii = profile.radii
    sel = (radii > rho0) & (radii < rho1)
    rhos = radii[sel]
    if rhos.size == 0:
        rhos = np.linspace(rho0, rho1, 33)[1:-1]
    gball = np.interp(rhos, radii, profile.Gball)
    slack = eps_star * np.maximum(rhos - rho0, 0.0) ** p - gball
    g_inside = profile.interp("Gball", rho0)
    return ForcingDecayMargin(
        margin=float(np.min(slack)),
        forcing_free_inside=bool(g_inside <= 1e-14 * max(1.0, float(profile.Gball[-1]))),
    )


def support_radius(field: ComplexField, threshold_rel: float = 1e-6) -> float:
    """Largest |x| (or r) where |field| exceeds threshold_rel * max|field|."""
    if not 0.0 < threshold_rel < 1.0:
        raise DomainError(f"threshold_rel must lie in (0, 1), got {threshold_rel}")
    mag = np.abs(field.values)
    peak = float(mag.max())
    if peak == 0.0:
        return 0.0
    above = np.abs(field.grid.nodes[mag > threshold_rel * peak])
    return float(above.max()) if above.size else 0.0


class ContainmentResult(NamedTuple):
    contained: bool
    worst_offender: float  # max over supp U of (distance to supp F) - eps


def k_eps_containment(U: ComplexField, F: ComplexField, eps: float,
                      threshold_rel: float = 1e-6) -> ContainmentResult:
    """Check numerical supp(U) against the eps-dilation of numerical supp(F).

    worst_offender <= 0 means containment, with |worst_offender| the spare
    margin; a zero U is always contained.
    """
    if eps <= 0.0:
        raise DomainError(f"eps must be positive, got {eps}")
    mag_u = np.abs(U.values)
    peak_u = float(mag_u.max())
    if peak_u == 0.0:
        return ContainmentResult(contained=True, worst_offender=-math.inf)
    mag_f = np.abs(F.values)
    peak_f = float(mag_f.max())
    nodes = U.grid.nodes
    supp_u = nodes[mag_u > threshold_rel * peak_u]
    if peak_f == 0.0:
        return ContainmentResult(contained=False, worst_offender=math.inf)
    supp_f = nodes[mag_f > threshold_rel * peak_f]
    dists = np.min(np.abs(supp_u[:, None] - supp_f[None, :]), axis=1)
    worst = float(np.max(dists) - eps)
    return ContainmentResult(contained=bool(worst <= 0.0), worst_offender=worst)


@dataclass
class LocalizationReport:
    """Aggregated localization analysis of one solved profile."""

    A: float
    L: float
    M: float
    rho_max: float
    tau_star: float
    support_radius: float
    k_eps_contained: bool
    k_eps_worst_offender: float
    identity_residuals: dict = field(default_factory=dict)
    thmG_margin: float = math.nan
    forcing_free_inside: bool = False
    min_inequality_margin: float = math.nan
    inequality_tolerance: float = math.nan
