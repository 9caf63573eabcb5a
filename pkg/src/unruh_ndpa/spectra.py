"""Input-output observables of the FBAR-pumped two-mode circuit.

Normal modes 1 and 2 (frequencies ``omega1``, ``omega2``) each leak into a
cavity-side line (rate ``gamma_cn``) and a detector-side line
(``gamma_dn``), with total widths ``gamma_n = gamma_cn + gamma_dn``.  In the
rotating frame the pump couples them through ``lambda (a1 a2 + a1^dag a2^dag)``
at ``Omega_m = omega1 + omega2``; all rates and frequencies are angular
(rad/s).

Output fields are linear in the input fields ``c(w), d(w)`` and the
conjugates ``c^dag(Omega_m - w), d^dag(Omega_m - w)``; :func:`mode_response`
returns those coefficients and :func:`cross_spectrum` the cross-correlated
spectral density of the two output lines.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.constants import hbar, k as k_B
from scipy.optimize import brentq

from .errors import InstabilityError, NumericalError

BASELINE_OMEGA1 = 2 * math.pi * 3.8e9
BASELINE_OMEGA2 = 2 * math.pi * 5.7e9
BASELINE_LAMBDA = 24.5e3
BASELINE_Q = 1e5


@dataclass(frozen=True)
class MeasurementParams:
    """Rates in s^-1, frequencies in rad/s, temperature in K, impedance in ohm."""

    omega1: float
    omega2: float
    lam: float
    gamma_c1: float
    gamma_d1: float
    gamma_c2: float
    gamma_d2: float
    temperature: float = 0.0
    Z_T: float = 50.0
    Omega_m: float | None = None
    detuning_tol: float | None = None

    def __post_init__(self):
        for name in ("omega1", "omega2", "gamma_c1", "gamma_d1", "gamma_c2", "gamma_d2", "Z_T"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.Omega_m is None:
            object.__setattr__(self, "Omega_m", self.omega1 + self.omega2)
        tol = self.detuning_tol
        if tol is None:
            tol = 1e-2 * min(self.gamma1, self.gamma2)
        if abs(self.Omega_m - self.omega1 - self.omega2) > tol:
            raise ValueError(
                f"pump detuning {self.Omega_m - self.omega1 - self.omega2:.4g} rad/s exceeds {tol:.4g}"
            )
        for n, (g, w) in enumerate(((self.gamma1, self.omega1), (self.gamma2, self.omega2)), 1):
            if g / w > 1e-2:
                warnings.warn(f"gamma_{n}/omega_{n} = {g / w:.3g} is not small", stacklevel=2)

    @classmethod
    def from_quality(
        cls,
        omega1: float = BASELINE_OMEGA1,
        omega2: float = BASELINE_OMEGA2,
        lam: float = BASELINE_LAMBDA,
        Q: float = BASELINE_Q,
        cavity_fraction: tuple[float, float] = (0.5, 0.5),
        **kw,
    ) -> "MeasurementParams":
        """``gamma_n = omega_n / Q`` split between the lines by ``cavity_fraction``."""
        g1, g2 = omega1 / Q, omega2 / Q
        f1, f2 = cavity_fraction
        if not (0 < f1 < 1 and 0 < f2 < 1):
            raise ValueError("cavity fractions must lie strictly between 0 and 1")
        return cls(omega1, omega2, lam, g1 * f1, g1 * (1 - f1), g2 * f2, g2 * (1 - f2), **kw)

    @property
    def gamma1(self) -> float:
        return self.gamma_c1 + self.gamma_d1

    @property
    def gamma2(self) -> float:
        return self.gamma_c2 + self.gamma_d2

    def with_lambda(self, lam: float) -> "MeasurementParams":
        d = asdict(self)
        d["lam"] = lam
        return MeasurementParams(**d)


def bose_einstein(omega: ArrayLike, temperature: float) -> NDArray[np.float64]:
    """Thermal occupation; exactly zero at ``T = 0``."""
    w = np.asarray(omega, dtype=float)
    if temperature == 0.0:
        return np.zeros_like(w)
    with np.errstate(over="ignore", divide="ignore"):
        return 1.0 / np.expm1(hbar * w / (k_B * temperature))


def _denominator(p: MeasurementParams, detuning):
    s = -1j * detuning
    return (s + 0.5 * p.gamma1) * (s + 0.5 * p.gamma2) - p.lam**2


@dataclass(frozen=True)
class ModeResponse:
    """Coefficients on ``(c(w), d(w), c^dag(Omega_m - w), d^dag(Omega_m - w))``."""

    a1: NDArray[np.complex128]
    a2: NDArray[np.complex128]
    c_out: NDArray[np.complex128]
    d_out: NDArray[np.complex128]


def mode_response(p: MeasurementParams, omega: float) -> ModeResponse:
    """Linear response of the intracavity and output fields at frequency ``omega``."""
    lam = p.lam
    sc1, sd1, sc2, sd2 = (math.sqrt(x) for x in (p.gamma_c1, p.gamma_d1, p.gamma_c2, p.gamma_d2))
    den1 = _denominator(p, omega - p.omega1)
    den2 = _denominator(p, omega - p.omega2)
    if min(abs(den1), abs(den2)) < 1e-30:
        raise InstabilityError("response denominator vanishes: at the parametric threshold")
    u2 = -1j * (omega - p.omega1) + 0.5 * p.gamma2
    v1 = -1j * (omega - p.omega2) + 0.5 * p.gamma1
    a1 = np.array([1j * sc1 * u2, -1j * sd1 * u2, -lam * sc2, -lam * sd2]) / den1
    a2 = np.array([1j * sc2 * v1, 1j * sd2 * v1, -lam * sc1, lam * sd1]) / den2
    c_out = np.array([1, 0, 0, 0], dtype=complex) + 1j * sc1 * a1 + 1j * sc2 * a2
    d_out = np.array([0, 1, 0, 0], dtype=complex) - 1j * sd1 * a1 + 1j * sd2 * a2
    return ModeResponse(a1, a2, c_out, d_out)


@dataclass(frozen=True)
class SpectrumResult:
    omega: NDArray[np.float64]      # rad/s
    S_cd: NDArray[np.float64]       # J (energy per unit bandwidth in rad/s)
    N_cd: NDArray[np.float64]       # S_cd / (hbar omega)
    params: MeasurementParams = field(repr=False)


def lobe_grid(p: MeasurementParams, points_per_lobe: int = 4001, span: float = 10.0):
    """Union of uniform grids spanning ``+/- span * gamma_n`` around each mode."""
    g1 = np.linspace(p.omega1 - span * p.gamma1, p.omega1 + span * p.gamma1, points_per_lobe)
    g2 = np.linspace(p.omega2 - span * p.gamma2, p.omega2 + span * p.gamma2, points_per_lobe)
    return np.union1d(g1, g2)


def cross_spectrum(p: MeasurementParams, grid: ArrayLike | None = None) -> SpectrumResult:
    """Cross-correlated output spectral density of the two lines.

    ``S_cd = hbar w (2 nbar + 1) lambda^2 [ -sqrt(g_c1 g_d1) g_2 / |P_1|^2 + sqrt(g_c2 g_d2) g_1 / |P_2|^2 ]``
    with ``P_n`` the response denominator detuned from mode ``n``.
    """
    w = lobe_grid(p) if grid is None else np.asarray(grid, dtype=float)
    nbar = bose_einstein(w, p.temperature)
    d1 = np.abs(_denominator(p, w - p.omega1)) ** 2
    d2 = np.abs(_denominator(p, w - p.omega2)) ** 2
    lobes = (-math.sqrt(p.gamma_c1 * p.gamma_d1) * p.gamma2 / d1
             + math.sqrt(p.gamma_c2 * p.gamma_d2) * p.gamma1 / d2)
    n_cd = (2.0 * nbar + 1.0) * p.lam**2 * lobes
    return SpectrumResult(w, hbar * w * n_cd, n_cd, p)


def band_power(s: SpectrumResult, omega0: float, delta: float) -> float:
    """``int S_cd dw / 2pi`` over ``[omega0 - delta/2, omega0 + delta/2]`` (watts)."""
    lo, hi = omega0 - 0.5 * delta, omega0 + 0.5 * delta
    if not delta > 0:
        raise ValueError("bandwidth must be positive")
    if lo < s.omega[0] or hi > s.omega[-1]:
        raise ValueError("band extends beyond the frequency grid")
    inside = (s.omega > lo) & (s.omega < hi)
    w = np.concatenate([[lo], s.omega[inside], [hi]])
    y = np.interp(w, s.omega, s.S_cd)
    return float(np.trapezoid(y, w) / (2 * math.pi))


def refined_band_power(p: MeasurementParams, omega0: float, delta: float,
                       points_per_lobe: int = 4001, span: float = 10.0,
                       rtol: float = 1e-3, max_doublings: int = 6) -> float:
    """Band power on lobe grids refined by interval doubling until it changes by less than ``rtol``."""
    n = points_per_lobe
    prev = band_power(cross_spectrum(p, lobe_grid(p, n, span)), omega0, delta)
    for _ in range(max_doublings):
        n = 2 * n - 1
        cur = band_power(cross_spectrum(p, lobe_grid(p, n, span)), omega0, delta)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise NumericalError(f"band power did not settle to {rtol:g} after {max_doublings} doublings")


def lobe_power_analytic(p: MeasurementParams, mode: int) -> float:
    """Closed-form total power of one lobe at ``T = 0``, taking ``hbar w`` at the mode frequency.

    Uses ``int dx / |(-ix + a)(-ix + b) - lam^2|^2 = pi / ((ab - lam^2)(a + b))``.
    """
    a, b = 0.5 * p.gamma1, 0.5 * p.gamma2
    integral = math.pi / ((a * b - p.lam**2) * (a + b))
    if mode == 1:
        pref = -math.sqrt(p.gamma_c1 * p.gamma_d1) * p.gamma2 * hbar * p.omega1
    elif mode == 2:
        pref = math.sqrt(p.gamma_c2 * p.gamma_d2) * p.gamma1 * hbar * p.omega2
    else:
        raise ValueError("mode must be 1 or 2")
    return pref * p.lam**2 * integral / (2 * math.pi)


def lobe_fwhm(s: SpectrumResult, center: float) -> float:
    """Full width at half maximum of the ``|N_cd|`` lobe containing ``center``."""
    y = np.abs(s.N_cd)
    i0 = int(np.argmin(np.abs(s.omega - center)))
    # walk to the local maximum
    while 0 < i0 < y.size - 1 and max(y[i0 - 1], y[i0 + 1]) > y[i0]:
        i0 += 1 if y[i0 + 1] > y[i0 - 1] else -1
    half = 0.5 * y[i0]
    lo = i0
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i0
    while hi < y.size - 1 and y[hi] > half:
        hi += 1
    if y[lo] > half or y[hi] > half:
        raise ValueError("lobe not resolved within the grid")
    w_lo = np.interp(half, [y[lo], y[lo + 1]], [s.omega[lo], s.omega[lo + 1]])
    w_hi = np.interp(half, [y[hi], y[hi - 1]], [s.omega[hi], s.omega[hi - 1]])
    return float(w_hi - w_lo)


def lobe_fwhm_analytic(p: MeasurementParams) -> float:
    """FWHM of ``1/|P|^2``, common to both lobes.

    ``|P|^2 = (x^2 + r1^2)(x^2 + r2^2)`` with ``r1, r2`` the decay rates of
    the coupled pair, so the width is below both ``gamma_1`` and ``gamma_2``.
    """
    a, b = 0.5 * p.gamma1, 0.5 * p.gamma2
    root = math.sqrt((0.5 * (a - b)) ** 2 + p.lam**2)
    r1, r2 = 0.5 * (a + b) + root, 0.5 * (a + b) - root
    s2 = r1 * r1 + r2 * r2
    x2 = 0.5 * (-s2 + math.sqrt(s2 * s2 + 4 * r1 * r1 * r2 * r2))
    return 2.0 * math.sqrt(x2)


def _squeezing_ratios(p: MeasurementParams, exact: bool) -> tuple[float, float]:
    g1, g2, lam = p.gamma1, p.gamma2, p.lam
    x = 2 * lam / (g1 + g2)
    y = lam * lam / (g1 * g2)
    if exact:
        x, y = 2 * x, 4 * y
    if y >= 1:
        raise InstabilityError(
            f"at or beyond parametric instability (pump ratio {y:.4g} >= 1)"
        )
    return x, y


def squeezing_variances(
    p: MeasurementParams, theta: float, temperature: float | None = None, exact: bool = False
) -> tuple[float, float]:
    """Steady-state two-mode quadrature variances ``(dX1^2, dX2^2)``.

    ``dX1^2 = (nbar1 + nbar2 + 1)/4 * (1 - x sin(theta)) / (1 - y)`` and
    ``dX2^2`` is the same with ``theta -> theta + pi``.  By default
    ``x = 2 lambda/(gamma1 + gamma2)`` and ``y = lambda^2/(gamma1 gamma2)``.
    ``exact=True`` uses ``x = 4 lambda/(gamma1 + gamma2)`` and
    ``y = 4 lambda^2/(gamma1 gamma2)``, the frequency integral of the
    quadrature spectrum, whose instability sits at ``lambda = sqrt(gamma1 gamma2)/2``.
    """
    t = p.temperature if temperature is None else temperature
    x, y = _squeezing_ratios(p, exact)
    n = float(bose_einstein(p.omega1, t) + bose_einstein(p.omega2, t))
    base = 0.25 * (n + 1.0) / (1.0 - y)
    s = math.sin(theta)
    return base * (1.0 - x * s), base * (1.0 + x * s)


def quadrature_spectrum(p: MeasurementParams, theta: float, nu: ArrayLike,
                        temperature: float | None = None) -> NDArray[np.float64]:
    """Spectral density of the joint quadrature at offset ``nu``; integrates (over ``dnu/2pi``) to ``dX1^2``."""
    t = p.temperature if temperature is None else temperature
    g1, g2, lam = p.gamma1, p.gamma2, p.lam
    n1 = float(bose_einstein(p.omega1, t))
    n2 = float(bose_einstein(p.omega2, t))
    w = np.asarray(nu, dtype=float)
    den = np.abs((-1j * w + g1 / 2) * (-1j * w + g2 / 2) - lam**2) ** 2
    num = (-(n1 + n2 + 1) * lam * g1 * g2 * math.sin(theta)
           - lam * (g1 * (2 * n1 + 1) - g2 * (2 * n2 + 1)) * w * math.cos(theta)
           + (2 * n1 + 1) * g1 / 2 * (w**2 + g2**2 / 4 + lam**2)
           + (2 * n2 + 1) * g2 / 2 * (w**2 + g1**2 / 4 + lam**2))
    return 0.25 * num / den


def squeezing_threshold(p: MeasurementParams, exact: bool = False) -> tuple[float, float]:
    """Largest ``nbar1 + nbar2`` (and line temperature, K) still giving ``dX1 < 1/2`` at ``theta = pi/2``."""
    x, y = _squeezing_ratios(p, exact)
    thr = (1.0 - y) / (1.0 - x) - 1.0
    if thr <= 0:
        return thr, 0.0

    def f(t):
        return float(bose_einstein(p.omega1, t) + bose_einstein(p.omega2, t)) - thr

    hi = 1e-3
    while f(hi) < 0:
        hi *= 2
    return thr, brentq(f, hi / 1e3 if f(hi / 1e3) < 0 else 1e-9, hi, xtol=1e-10, rtol=1e-12)


def splits_from_modes(mode_values: tuple[tuple[float, float], tuple[float, float]],
                      gamma1: float, gamma2: float) -> dict[str, float]:
    """Port splits proportional to squared mode amplitudes at the outer conductor ends.

    ``mode_values[n] = (Phi_c,n(outer), Phi_d,n(outer))``.  This weighting is a
    modelling choice, not a derived result.
    """
    out = {}
    for n, ((pc, pd), g) in enumerate(zip(mode_values, (gamma1, gamma2)), 1):
        wc, wd = pc * pc, pd * pd
        if wc + wd == 0:
            raise ValueError(f"mode {n} vanishes at both outer ends")
        out[f"gamma_c{n}"] = g * wc / (wc + wd)
        out[f"gamma_d{n}"] = g * wd / (wc + wd)
    return out


def write_spectrum_csv(path, s: SpectrumResult) -> None:
    """CSV of ``omega_Hz, S_cd_over_kB_mK, N_cd_per_Hz`` with a ``#`` JSON header."""
    meta = {k: v for k, v in asdict(s.params).items()}
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega_Hz", "S_cd_over_kB_mK", "N_cd_per_Hz"])
        for om, sv, nv in zip(s.omega, s.S_cd, s.N_cd):
            w.writerow([f"{om / (2 * math.pi):.9e}", f"{sv / k_B * 1e3:.9e}", f"{nv:.9e}"])
