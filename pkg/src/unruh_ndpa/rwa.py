"""Harmonic reduction of the oscillating-detector Hamiltonian.

All quantities are dimensionless, with frequencies in units of the cavity
frequency and time ``t = omega_c t_lab``.  The detector centre of mass
moves as ``A cos(Omega_m t)`` (phase fixed to zero), giving the Lorentz
factor ``dtau/dt = sqrt(1 - xi^2 sin^2(Omega_m t))`` with
``xi = Omega_m A / c``.

Keeping harmonics up to second order,

    dtau/dt                                 ~ D0 + D2 cos(2 Omega_m t)
    dtau/dt * sin[(xi/Omega_m) cos(Omega_m t)] ~ C1 cos(Omega_m t)

and at resonance ``Omega_m = 1 + omega_d0 D0`` the interaction reduces to
``lambda (a^dag b^dag + a b)`` with

    lambda = lambda0 C1 / 2 * [J0(B) - J1(B)],   B = omega_d0 D2 / (2 Omega_m).

The coupling keeps the sign of ``lambda0``: the lab-frame interaction is
``+lambda0 dtau/dt sin[...] (a^dag + a)(b^dag + b)`` once the detector sits
at the cavity midpoint.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import binom, ellipeinc, j0, j1, jv

QUAD_EPSABS = 1e-12
_QUAD_KW = dict(epsabs=1e-13, epsrel=1e-13, limit=200)


@dataclass(frozen=True)
class DetectorParams:
    """Dimensionless detector-cavity parameters.

    Attributes
    ----------
    xi:
        Peak centre-of-mass speed over ``c``, in ``[0, 1)``.
    omega_d0:
        Bare detector frequency.
    lambda0:
        Bare cavity-detector coupling.
    Omega_m:
        Centre-of-mass drive frequency.  ``None`` selects the resonance
        ``1 + omega_d0 D0(xi)``.
    gamma:
        Energy damping rate shared by cavity and detector.
    """

    xi: float
    omega_d0: float
    lambda0: float
    Omega_m: float | None = None
    gamma: float = 0.005

    def __post_init__(self):
        if not 0.0 <= self.xi < 1.0:
            raise ValueError(f"xi must lie in [0, 1), got {self.xi}")
        if not self.omega_d0 > 0:
            raise ValueError("omega_d0 must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.Omega_m is None:
            object.__setattr__(self, "Omega_m", solve_resonance(self.xi, self.omega_d0))
        elif not self.Omega_m > 0:
            raise ValueError("Omega_m must be positive")
        if self.gamma > 0.1:
            warnings.warn(
                f"gamma = {self.gamma} is not small compared with the cavity frequency",
                stacklevel=2,
            )


@dataclass(frozen=True)
class RwaCoefficients:
    D0: float
    D2: float
    C1: float
    B: float
    omega_d: float
    lambda_: float
    Omega_m: float


def _check_xi(xi: float) -> None:
    if not 0.0 <= xi < 1.0:
        raise ValueError(f"xi must lie in [0, 1) (subluminal), got {xi}")


def lorentz_factor(xi: float, phase):
    """``dtau/dt`` at drive phase ``Omega_m t``."""
    return np.sqrt(1.0 - (xi * np.sin(phase)) ** 2)


def lorentz_coefficients(xi: float) -> tuple[float, float]:
    """Fourier coefficients ``(D0, D2)`` of the Lorentz factor.

    ``D0 = (1/pi) int_0^pi sqrt(1 - xi^2 sin^2) dtheta`` and
    ``D2 = (2/pi) int_0^pi sqrt(1 - xi^2 sin^2) cos(2 theta) dtheta``,
    by adaptive Gauss-Kronrod quadrature.
    """
    _check_xi(xi)
    if xi == 0.0:
        return 1.0, 0.0
    d0 = quad(lambda th: lorentz_factor(xi, th), 0.0, math.pi, **_QUAD_KW)[0] / math.pi
    d2 = 2.0 * quad(lambda th: lorentz_factor(xi, th) * math.cos(2 * th), 0.0, math.pi,
                    **_QUAD_KW)[0] / math.pi
    return d0, d2


def lorentz_coefficients_series(xi: float, n_terms: int = 40) -> tuple[float, float]:
    """``(D0, D2)`` from the binomial double series truncated at ``n_terms``."""
    _check_xi(xi)
    n = np.arange(n_terms + 1)
    x2n = (xi / 2.0) ** (2 * n)
    d0 = np.sum((-1.0) ** n * binom(0.5, n) * binom(2 * n, n) * x2n)
    m = n[1:]
    d2 = 2.0 * np.sum((-1.0) ** (m - 1) * binom(0.5, m) * binom(2 * m, m - 1) * x2n[1:])
    return float(d0), float(d2)


def drive_coefficient(xi: float, Omega_m: float) -> float:
    """First-harmonic cosine coefficient ``C1`` of ``dtau/dt * sin[(xi/Omega_m) cos(Omega_m t)]``.

    Computed by Fourier projection of the exact product over one period;
    the integrand is symmetric about half a period.
    """
    _check_xi(xi)
    if not Omega_m > 0:
        raise ValueError("Omega_m must be positive")
    if xi == 0.0:
        return 0.0
    z = xi / Omega_m

    def integrand(th):
        return lorentz_factor(xi, th) * math.sin(z * math.cos(th)) * math.cos(th)

    return 2.0 * quad(integrand, 0.0, math.pi, **_QUAD_KW)[0] / math.pi


def drive_coefficient_series(xi: float, Omega_m: float) -> float:
    """``C1`` from ``(D0 + D2 cos 2t)(2 J1 cos t - 2 J3 cos 3t)``, first harmonic only."""
    d0, d2 = lorentz_coefficients(xi)
    z = xi / Omega_m
    return 2.0 * j1(z) * (d0 + 0.5 * d2) - d2 * jv(3, z)


def solve_resonance(xi: float, omega_d0: float) -> float:
    """Drive frequency ``Omega_m = 1 + omega_d0 D0(xi)`` at pair-production resonance."""
    d0, _ = lorentz_coefficients(xi)
    return 1.0 + omega_d0 * d0


def renormalized_coupling(p: DetectorParams) -> RwaCoefficients:
    """Renormalised detector frequency and NDPA coupling for ``p``."""
    d0, d2 = lorentz_coefficients(p.xi)
    c1 = drive_coefficient(p.xi, p.Omega_m)
    b = p.omega_d0 * d2 / (2.0 * p.Omega_m)
    if abs(b) >= 1.0:
        warnings.warn(f"Jacobi-Anger argument B = {b:.3g} is not below 1", stacklevel=2)
    lam = 0.5 * p.lambda0 * c1 * (j0(b) - j1(b))
    return RwaCoefficients(
        D0=d0, D2=d2, C1=c1, B=b, omega_d=p.omega_d0 * d0, lambda_=float(lam), Omega_m=p.Omega_m
    )


def resonant_coupling_exact(p: DetectorParams) -> float:
    """Pair coupling from the exact detector phase, without harmonic truncation.

    Time average over one drive period of ``g(t) exp(i[t + theta_b(t)])``
    where ``theta_b`` is the exact accumulated detector phase.  Only
    meaningful at resonance; used to gauge truncation errors in ``lambda``.
    """
    om, xi = p.Omega_m, p.xi
    if xi == 0.0:
        return 0.0
    m = xi * xi
    z = xi / om

    def phase(t):
        return t + p.omega_d0 / om * ellipeinc(om * t, m)

    def g(t):
        return p.lambda0 * lorentz_factor(xi, om * t) * math.sin(z * math.cos(om * t))

    period = 2.0 * math.pi / om
    re = quad(lambda t: g(t) * math.cos(phase(t)), 0.0, period, **_QUAD_KW)[0]
    im = quad(lambda t: g(t) * math.sin(phase(t)), 0.0, period, **_QUAD_KW)[0]
    # the imaginary part vanishes by symmetry for zero drive phase
    return float(math.copysign(math.hypot(re, im), re) / period)


@dataclass(frozen=True)
class HarmonicResonance:
    k: int
    n: int
    detuning: float
    flagged: bool


def single_mode_validity(
    p: DetectorParams,
    k_max: int = 25,
    n_max: int = 40,
    threshold_factor: float = 10.0,
    omega_d: float | None = None,
) -> list[HarmonicResonance]:
    """Scan drive harmonics ``k`` against higher cavity modes ``n``.

    The detuning of harmonic ``k`` from the pair resonance with cavity mode
    ``n`` is ``|(k - n) + (k - 1) omega_d|`` once ``Omega_m = 1 + omega_d``.
    Pairs closer than ``threshold_factor * gamma`` are flagged.  The
    intended resonance ``(1, 1)`` is excluded and the result is sorted by
    detuning (ties broken by ``k`` then ``n``).
    """
    if k_max < 1 or n_max < 1:
        raise ValueError("k_max and n_max must be >= 1")
    if omega_d is None:
        omega_d = p.omega_d0 * lorentz_coefficients(p.xi)[0]
    thresh = threshold_factor * p.gamma
    out = []
    for k in range(1, k_max + 1):
        for n in range(1, n_max + 1):
            if k == 1 and n == 1:
                continue
            det = abs((k - n) + (k - 1) * omega_d)
            out.append(HarmonicResonance(k, n, det, det < thresh))
    out.sort(key=lambda r: (r.detuning, r.k, r.n))
    return out


def first_near_resonance(checks: list[HarmonicResonance]) -> HarmonicResonance | None:
    for c in checks:
        if c.flagged:
            return c
    return None
