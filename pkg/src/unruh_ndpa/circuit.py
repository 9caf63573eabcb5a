"""Normal modes of two transmission-line resonators coupled through an FBAR capacitor.

Both centre conductors carry flux fields with capacitance ``C`` and
inductance ``L`` per unit length and open (Neumann) ends.  Over the overlap
of length ``L_m`` the conductors are joined by the FBAR capacitance ``C_m``
per unit length, so the capacitance matrix there is
``[[C + C_m, -C_m], [-C_m, C + C_m]]``.  The symmetric channel
``Phi_c + Phi_d`` then propagates with ``k = omega sqrt(L C)`` and the
antisymmetric channel ``Phi_c - Phi_d`` with ``k sqrt(1 + 2 C_m / C)``.

The overlap is parametrised by ``s in [0, L_m]`` measured from the cavity's
open tip, ``x_c = L_c - s``.  Two layouts are supported:

``"aligned"``
    both open tips coincide, ``x_d = L_d - s``;
``"opposed"``
    the conductors point away from each other, ``x_d = L_m - s``.

Physical units are SI throughout; frequencies are angular (rad/s).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import NDArray
from scipy.optimize import brentq

from .errors import NumericalError, RootFindingError

FLUX_QUANTUM = 2.067833848e-15  # h / 2e, Wb

Geometry = Literal["aligned", "opposed"]

_REFERENCE_CAVITY_HZ = 4.5e9


def calibrated_inductance(cap_per_len: float, L_c: float, f_cavity: float = _REFERENCE_CAVITY_HZ):
    """Inductance per length that puts the bare cavity fundamental at ``f_cavity``."""
    v = 2.0 * f_cavity * L_c
    return 1.0 / (cap_per_len * v * v)


@dataclass(frozen=True)
class CircuitSpec:
    """Device parameters.

    The default inductance per length is calibrated so the uncoupled
    1.1 cm cavity sits at 4.5 GHz (wave speed 9.9e7 m/s).
    """

    cap_per_len: float = 1e-10
    ind_per_len: float = field(default_factory=lambda: calibrated_inductance(1e-10, 0.011))
    fbar_cap_per_len: float = 2e-9
    L_c: float = 0.011
    L_d: float = 0.008
    L_m: float = 90e-6
    fbar_thickness: float = 500e-9
    drive_amplitude: float = 1e-11
    sound_speed: float = 1e4
    geometry: Geometry = "aligned"

    def __post_init__(self):
        for name in ("cap_per_len", "ind_per_len", "L_c", "L_d", "L_m",
                     "fbar_thickness", "sound_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.fbar_cap_per_len < 0 or self.drive_amplitude < 0:
            raise ValueError("fbar_cap_per_len and drive_amplitude must be nonnegative")
        if not self.L_m < min(self.L_c, self.L_d):
            raise ValueError("overlap length must be shorter than both conductors")
        if self.geometry not in ("aligned", "opposed"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.drive_amplitude / self.fbar_thickness >= 0.01:
            warnings.warn(
                f"A/D = {self.drive_amplitude / self.fbar_thickness:.3g} violates the "
                "small-amplitude assumption A << D",
                stacklevel=2,
            )

    @property
    def wave_speed(self) -> float:
        return 1.0 / math.sqrt(self.ind_per_len * self.cap_per_len)

    @property
    def cap_ratio(self) -> float:
        return self.fbar_cap_per_len / self.cap_per_len

    def uncoupled_frequencies(self) -> tuple[float, float]:
        """Bare fundamentals ``pi v / L_c`` and ``pi v / L_d`` (rad/s)."""
        v = self.wave_speed
        return math.pi * v / self.L_c, math.pi * v / self.L_d


def fbar_frequency(spec: CircuitSpec) -> float:
    """Fundamental dilatational frequency ``pi v_l / D`` (rad/s)."""
    return math.pi * spec.sound_speed / spec.fbar_thickness


@dataclass(frozen=True)
class NormalMode:
    """One normal mode.

    ``coeffs = (S1, S2, D1, D2)`` fix the overlap solution
    ``Phi_c +/- Phi_d = S1 cos(ks) + S2 sin(ks) +/- [D1 cos(qs) + D2 sin(qs)]``
    and ``alpha_c``, ``alpha_d`` the free-segment amplitudes.  The overall
    scale is set so the largest flux magnitude is ``Phi_0 / 2pi`` and
    ``Phi_c(0) > 0``; ``C_n`` follows from the capacitance-weighted norm.
    """

    index: int
    omega: float
    spec: CircuitSpec = field(repr=False)
    coeffs: NDArray[np.float64] = field(repr=False)
    alpha_c: float = field(repr=False)
    alpha_d: float = field(repr=False)
    C_n: float = float("nan")

    @property
    def k(self) -> float:
        return self.omega / self.spec.wave_speed

    @property
    def q(self) -> float:
        return self.k * math.sqrt(1.0 + 2.0 * self.spec.cap_ratio)

    def _overlap(self, s, deriv=False):
        k, q = self.k, self.q
        s1, s2, d1, d2 = self.coeffs
        s = np.asarray(s, dtype=float)
        if deriv:
            sym = k * (-s1 * np.sin(k * s) + s2 * np.cos(k * s))
            anti = q * (-d1 * np.sin(q * s) + d2 * np.cos(q * s))
        else:
            sym = s1 * np.cos(k * s) + s2 * np.sin(k * s)
            anti = d1 * np.cos(q * s) + d2 * np.sin(q * s)
        return 0.5 * (sym + anti), 0.5 * (sym - anti)

    def phi_c(self, x, deriv: bool = False):
        """Cavity flux (or its ``x`` derivative) at positions ``x`` in ``[0, L_c]``."""
        sp = self.spec
        x = np.asarray(x, dtype=float)
        free = x < sp.L_c - sp.L_m
        out = np.empty_like(x)
        k = self.k
        xf = x[free]
        out[free] = -self.alpha_c * k * np.sin(k * xf) if deriv else self.alpha_c * np.cos(k * xf)
        val = self._overlap(sp.L_c - x[~free], deriv)[0]
        out[~free] = -val if deriv else val
        return out

    def phi_d(self, x, deriv: bool = False):
        """Detector flux (or its derivative) at positions ``x`` in ``[0, L_d]``."""
        sp = self.spec
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        k = self.k
        if sp.geometry == "aligned":
            free = x < sp.L_d - sp.L_m
            xf = x[free]
            out[free] = -self.alpha_d * k * np.sin(k * xf) if deriv else self.alpha_d * np.cos(k * xf)
            val = self._overlap(sp.L_d - x[~free], deriv)[1]
        else:
            free = x > sp.L_m
            u = sp.L_d - x[free]
            out[free] = self.alpha_d * k * np.sin(k * u) if deriv else self.alpha_d * np.cos(k * u)
            val = self._overlap(sp.L_m - x[~free], deriv)[1]
        out[~free] = -val if deriv else val
        return out

    def overlap_fields(self, s):
        """``(Phi_c, Phi_d)`` at overlap coordinate ``s`` (same physical point)."""
        return self._overlap(s)


def _rows(spec: CircuitSpec, omega: float) -> NDArray[np.float64]:
    """Matching matrix acting on ``(S1, S2, D1, D2)``; derivative rows divided by ``k``."""
    v = spec.wave_speed
    k = omega / v
    r = math.sqrt(1.0 + 2.0 * spec.cap_ratio)
    q = k * r
    lm = spec.L_m
    lc = spec.L_c - lm
    ld = spec.L_d - lm

    def fields(s):
        # value and derivative/k of (Phi_c, Phi_d) per coefficient
        cs, ss = math.cos(k * s), math.sin(k * s)
        cq, sq = math.cos(q * s), math.sin(q * s)
        val_sym = np.array([cs, ss, 0, 0])
        val_anti = np.array([0, 0, cq, sq])
        der_sym = np.array([-ss, cs, 0, 0])
        der_anti = r * np.array([0, 0, -sq, cq])
        return (0.5 * (val_sym + val_anti), 0.5 * (val_sym - val_anti),
                0.5 * (der_sym + der_anti), 0.5 * (der_sym - der_anti))

    c0, d0, cp0, dp0 = fields(0.0)
    c1, d1, cp1, dp1 = fields(lm)
    # free segment of length l joined at the overlap end facing it, Neumann far end:
    # Phi' cos(kl) -/+ k sin(kl) Phi = 0, sign set by the direction into the free part
    rows = [cp0, cp1 * math.cos(k * lc) - math.sin(k * lc) * c1]
    if spec.geometry == "aligned":
        rows += [dp0, dp1 * math.cos(k * ld) - math.sin(k * ld) * d1]
    else:
        rows += [dp1, dp0 * math.cos(k * ld) + math.sin(k * ld) * d0]
    return np.array(rows)


def matching_determinant(spec: CircuitSpec, omega: float) -> float:
    return float(np.linalg.det(_rows(spec, omega)))


def _scan_roots(spec: CircuitSpec, w_lo: float, w_hi: float, n_grid: int) -> list[float]:
    grid = np.linspace(w_lo, w_hi, n_grid)
    vals = np.array([matching_determinant(spec, w) for w in grid])
    roots = []
    for i in range(n_grid - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0:
            roots.append(brentq(lambda w: matching_determinant(spec, w), grid[i], grid[i + 1],
                                xtol=1e-14 * grid[i + 1], rtol=1e-14, maxiter=200))
    # a touching (double) root shows up as a near-zero local minimum without a sign change
    mag = np.abs(vals)
    scale = mag.max()
    for i in range(1, n_grid - 1):
        if mag[i] < mag[i - 1] and mag[i] < mag[i + 1] and vals[i - 1] * vals[i + 1] > 0:
            if mag[i] < 1e-6 * scale:
                raise RootFindingError(
                    f"unresolved near-degenerate roots near omega = {grid[i]:.6e} rad/s"
                )
    return roots


def _mode_from_root(spec: CircuitSpec, omega: float, index: int) -> NormalMode:
    m = _rows(spec, omega)
    _, sv, vt = np.linalg.svd(m)
    if sv[-2] < 1e-8 * sv[0]:
        raise RootFindingError(f"degenerate null space at omega = {omega:.6e} rad/s")
    coeffs = vt[-1]
    k = omega / spec.wave_speed
    lm = spec.L_m
    lc, ld = spec.L_c - lm, spec.L_d - lm
    probe = NormalMode(index, omega, spec, coeffs, 0.0, 0.0)
    # Phi(junction) = alpha cos(k l) and Phi'(junction) = alpha k sin(k l) along the free part
    fc, fd = probe.overlap_fields(lm)
    dc, dd = probe._overlap(lm, deriv=True)
    alpha_c = fc * math.cos(k * lc) + dc / k * math.sin(k * lc)
    if spec.geometry == "aligned":
        alpha_d = fd * math.cos(k * ld) + dd / k * math.sin(k * ld)
    else:
        f0d = probe.overlap_fields(0.0)[1]
        d0d = probe._overlap(0.0, deriv=True)[1]
        alpha_d = f0d * math.cos(k * ld) - d0d / k * math.sin(k * ld)
    mode = NormalMode(index, omega, spec, coeffs, float(alpha_c), float(alpha_d))
    xs_c = np.linspace(0, spec.L_c, 2001)
    xs_d = np.linspace(0, spec.L_d, 2001)
    peak = max(np.abs(mode.phi_c(xs_c)).max(), np.abs(mode.phi_d(xs_d)).max())
    scale = FLUX_QUANTUM / (2 * math.pi) / peak
    if mode.phi_c(np.array([0.0]))[0] < 0:
        scale = -scale
    mode = replace(mode, coeffs=coeffs * scale, alpha_c=alpha_c * scale, alpha_d=alpha_d * scale)
    norm = inner_product(spec, mode, mode)
    return replace(mode, C_n=(2 * math.pi / FLUX_QUANTUM) ** 2 * norm)


def solve_normal_modes(spec: CircuitSpec, n_modes: int = 2, grid_per_mode: int = 200) -> list[NormalMode]:
    """Lowest ``n_modes`` nonzero normal modes, ascending in frequency.

    Roots of the 4x4 matching determinant are bracketed on a frequency grid
    and refined by Brent's method.  The uniform zero-frequency mode is
    excluded.
    """
    if n_modes < 2:
        raise ValueError("n_modes must be >= 2")
    v = spec.wave_speed
    spacing = math.pi * v / (spec.L_c + spec.L_d)
    w_lo = 1e-3 * spacing
    w_hi = spacing * (n_modes + 2)
    n_grid = grid_per_mode * (n_modes + 2)
    for _ in range(6):
        roots = _scan_roots(spec, w_lo, w_hi, n_grid)
        if len(roots) >= n_modes:
            break
        w_hi *= 2.0
        n_grid *= 2
    else:
        raise RootFindingError(f"found only {len(roots)} of {n_modes} modes")
    roots = sorted(roots)[:n_modes]
    for a, b in zip(roots, roots[1:]):
        if b - a < 1e-6 * b:
            raise RootFindingError(f"roots {a:.9e} and {b:.9e} not resolved")
    return [_mode_from_root(spec, w, i + 1) for i, w in enumerate(roots)]


def _gauss_panels(a: float, b: float, n_panels: int, order: int = 8):
    x, w = leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _piece_integral(f, pieces, n_panels):
    total = 0.0
    for a, b in pieces:
        if b > a:
            x, w = _gauss_panels(a, b, n_panels)
            total += float(np.dot(w, f(x)))
    return total


def _converged(f, pieces, n_panels: int = 64, rtol: float = 1e-10, max_doublings: int = 5):
    prev = _piece_integral(f, pieces, n_panels)
    for _ in range(max_doublings):
        n_panels *= 2
        cur = _piece_integral(f, pieces, n_panels)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise NumericalError("composite Gauss quadrature did not converge")


def inner_product(spec: CircuitSpec, m1: NormalMode, m2: NormalMode) -> float:
    """Capacitance-weighted overlap ``int Phi^T C(x) Phi``; diagonal in the mode index."""
    cap, cm = spec.cap_per_len, spec.fbar_cap_per_len
    # split at the junctions, where the second derivative jumps
    jc = spec.L_c - spec.L_m
    jd = spec.L_d - spec.L_m if spec.geometry == "aligned" else spec.L_m
    body = (_converged(lambda x: cap * m1.phi_c(x) * m2.phi_c(x), [(0.0, jc), (jc, spec.L_c)])
            + _converged(lambda x: cap * m1.phi_d(x) * m2.phi_d(x), [(0.0, jd), (jd, spec.L_d)]))

    def fbar(s):
        c1, d1 = m1.overlap_fields(s)
        c2, d2 = m2.overlap_fields(s)
        return cm * (c1 - d1) * (c2 - d2)

    return body + _converged(fbar, [(0.0, spec.L_m)])


def gram_matrix(spec: CircuitSpec, modes: list[NormalMode]) -> NDArray[np.float64]:
    n = len(modes)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = inner_product(spec, modes[i], modes[j])
    return g


def coupling_matrix(spec: CircuitSpec, modes: list[NormalMode], n_panels: int = 64):
    """Dimensionless FBAR coupling ``lambda_nn'`` between normal modes.

    ``(pi/Phi_0)^2 C_m / sqrt(C_n C_n') int_overlap (Phi_d - Phi_c)_n (Phi_d - Phi_c)_n' ds``.
    """
    if n_panels < 64:
        raise ValueError("at least 64 quadrature panels are required")
    for m in modes:
        if not (math.isfinite(m.C_n) and m.C_n > 0):
            raise ValueError(f"mode {m.index} is not normalised")
    n = len(modes)
    lam = np.empty((n, n))
    pref = (math.pi / FLUX_QUANTUM) ** 2 * spec.fbar_cap_per_len
    for i in range(n):
        for j in range(i, n):
            def f(s, a=modes[i], b=modes[j]):
                ca, da = a.overlap_fields(s)
                cb, db = b.overlap_fields(s)
                return (da - ca) * (db - cb)

            val = _converged(f, [(0.0, spec.L_m)], n_panels) if spec.L_m > 0 else 0.0
            lam[i, j] = lam[j, i] = pref * val / math.sqrt(modes[i].C_n * modes[j].C_n)
    return lam


@dataclass(frozen=True)
class PumpCoupling:
    lam: float          # rad/s
    detuning: float     # Omega_m - (omega1 + omega2), rad/s


def pump_coupling(spec: CircuitSpec, lambda12: float, omega1: float, omega2: float) -> PumpCoupling:
    """Resonant pair-creation rate ``-lambda12 sqrt(omega1 omega2) A / D``."""
    lam = -lambda12 * math.sqrt(omega1 * omega2) * spec.drive_amplitude / spec.fbar_thickness
    return PumpCoupling(lam, fbar_frequency(spec) - (omega1 + omega2))


def sample_mode(mode: NormalMode, n_points: int = 401) -> dict[str, NDArray]:
    sp = mode.spec
    xc = np.linspace(0.0, sp.L_c, n_points)
    xd = np.linspace(0.0, sp.L_d, n_points)
    return {"x_c": xc, "phi_c": mode.phi_c(xc), "x_d": xd, "phi_d": mode.phi_d(xd)}


def write_mode_csv(path, modes: list[NormalMode], n_points: int = 401) -> None:
    """Write ``conductor, x, phi_n...`` rows for plotting mode shapes."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["conductor", "x_m"] + [f"phi_{m.index}_Wb" for m in modes])
        samples = [sample_mode(m, n_points) for m in modes]
        for label, xk, pk in (("cavity", "x_c", "phi_c"), ("detector", "x_d", "phi_d")):
            for i, x in enumerate(samples[0][xk]):
                w.writerow([label, f"{x:.9e}"] + [f"{s[pk][i]:.9e}" for s in samples])
