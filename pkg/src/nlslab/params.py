"""Model parameters, derived coefficients and derived exponents.

Everything here is closed-form arithmetic on the inputs (m, a, Im p, N, R):
the complex self-similarity exponent, the zeroth-order coefficient of the
gauge-transformed stationary equation, the quadratic-potential coefficient,
and the exponent family used by the localization estimates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DomainError, InadmissibleCoefficient, InvalidDomain, InvalidExponent

# Closed-form arithmetic only in this module, so invariants are checked tight.
REL_TOL = 1e-12


def _check_admissible_a(a: complex) -> None:
    if a.imag > 0.0:
        raise InadmissibleCoefficient(f"Im(a) must be <= 0, got a={a}")
    if a.real <= 0.0 and a.imag >= 0.0:
        raise InadmissibleCoefficient(
            f"Re(a) <= 0 requires Im(a) < 0, got a={a}"
        )


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs of the sublinear Schrodinger model.

    ``p_exp`` always satisfies Re(p) = 2/(1-m); callers supply only Im(p)
    through :func:`validate_params`.
    """

    m: float
    a: complex
    p_exp: complex
    N: int
    R: float

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise InvalidExponent(f"m must lie in (0, 1), got {self.m}")
        re_p_expected = 2.0 / (1.0 - self.m)
        if abs(self.p_exp.real - re_p_expected) > REL_TOL * max(1.0, re_p_expected):
            raise InvalidExponent(
                f"Re(p) must equal 2/(1-m) = {re_p_expected}, got {self.p_exp.real}"
            )
        _check_admissible_a(complex(self.a))
        if self.N < 1 or int(self.N) != self.N:
            raise InvalidDomain(f"N must be a positive integer, got {self.N}")
        if not self.R > 0.0:
            raise InvalidDomain(f"R must be positive, got {self.R}")


def validate_params(raw: dict) -> ModelParams:
    """Build :class:`ModelParams` from a flat record.

    ``raw`` must contain ``m``, ``a``, ``im_p``, ``N`` and ``R``. Re(p) is
    always overwritten with 2/(1-m); any supplied real part is ignored.
    """
    missing = [k for k in ("m", "a", "im_p", "N", "R") if k not in raw]
    if missing:
        raise InvalidDomain(f"missing parameter keys: {missing}")
    m = float(raw["m"])
    if not 0.0 < m < 1.0:
        raise InvalidExponent(f"m must lie in (0, 1), got {m}")
    p_exp = complex(2.0 / (1.0 - m), float(raw["im_p"]))
    return ModelParams(
        m=m,
        a=complex(raw["a"]),
        p_exp=p_exp,
        N=int(raw["N"]),
        R=float(raw["R"]),
    )


@dataclass(frozen=True)
class DerivedCoefficients:
    """Coefficients of the gauge-transformed stationary equation.

    Canonical values are b = -i(N + 2p)/4 and c = -1/16, with the gauge
    phase exp(gauge_sign * i * c_gauge * |x|^2 / 4). General (b, c) may be
    constructed directly when exploring the abstract admissible family.
    """

    b: complex
    c: complex
    gauge_sign: float = -1.0
    c_gauge: float = 0.5


def derive_coefficients(params: ModelParams) -> DerivedCoefficients:
    """Canonical (b, c) for the gauge-transformed equation."""
    p = params.p_exp
    b = -1j * (params.N + 2.0 * p) / 4.0
    c = complex(-1.0 / 16.0)
    # Cross-check Im(b) against its closed form in (m, N).
    im_b_expected = -(params.N * (1.0 - params.m) + 4.0) / (4.0 * (1.0 - params.m))
    assert abs(b.imag - im_b_expected) <= REL_TOL * abs(im_b_expected)
    return DerivedCoefficients(b=b, c=c)


@dataclass(frozen=True)
class ExponentSet:
    """Exponent family driving the localization radius formula.

    gamma, mu, eta are maps over tau in ((m+1)/2, 1]; they are exposed as
    callables so the radius computation can minimize over tau on any grid.
    """

    m: float
    N: int
    k: float
    nu: float
    p_growth: float

    @property
    def tau_min(self) -> float:
        """Open left endpoint of the tau domain."""
        return (self.m + 1.0) / 2.0

    def _check_tau(self, tau: float) -> None:
        if not self.tau_min < tau <= 1.0:
            raise DomainError(
                f"tau must lie in ({self.tau_min}, 1], got {tau}"
            )

    def gamma(self, tau: float) -> float:
        self._check_tau(tau)
        return (2.0 * tau - (1.0 + self.m)) / self.k

    def mu(self, tau: float) -> float:
        self._check_tau(tau)
        return 2.0 * (1.0 - tau) / self.k

    def eta(self, tau: float) -> float:
        self._check_tau(tau)
        return (1.0 - self.m) / (1.0 + self.m) - self.gamma(tau)


def exponent_set(params: ModelParams) -> ExponentSet:
    """Derived exponents k, nu, p_growth and the tau-maps."""
    m, N = params.m, params.N
    k = 2.0 * (1.0 + m) + N * (1.0 - m)
    return ExponentSet(
        m=m,
        N=N,
        k=k,
        nu=k / (m + 1.0),
        p_growth=k / (1.0 - m),
    )


def uniqueness_radius(params: ModelParams) -> float:
    """Largest support radius for which compactly supported solutions are unique.

    Equals sqrt(4*Im(p) + 2*sqrt(4*Im(p)^2 + 2)); the argument of the outer
    root is positive for every real Im(p).
    """
    s = params.p_exp.imag
    return math.sqrt(4.0 * s + 2.0 * math.sqrt(4.0 * s * s + 2.0))


def complex_power(base: float, exponent: complex) -> complex:
    """base**exponent for base > 0 via the principal logarithm."""
    if base <= 0.0:
        raise DomainError(f"complex_power requires a positive base, got {base}")
    return cmath.exp(exponent * math.log(base))
