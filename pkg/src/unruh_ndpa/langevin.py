"""Second-moment dynamics of the damped cavity-detector pair.

For a quadratic Hamiltonian

    H(t) = omega_a(t) a^dag a + omega_b(t) b^dag b + g(t) (a^dag + a)(b^dag + b)

with both modes damped at energy rate ``gamma`` into zero-temperature
baths, the ten normal-ordered moments obey the closed linear system
``dV/dt = M(t) V + K(t)``.  The drift is assembled from the ladder-operator
Langevin equations ``dxi/dt = A xi + noise`` for ``xi = (a, a^dag, b, b^dag)``
through the symmetrised covariance ``sigma``:

    d sigma/dt = A sigma + sigma A^T + (gamma/2) N

where ``N`` pairs each annihilator with its own creator.

The resonant (NDPA) reduction uses the interaction-picture Hamiltonian
``lambda (a^dag b^dag + a b)``, with Heisenberg equations ``dO/dt = i[H, O]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import solve_ivp

from . import gaussian as gs
from .errors import InstabilityError, NonPhysicalStateError, StepCollapseError
from .rwa import DetectorParams, lorentz_factor

_SIGMA_INDEX = (
    (0, 0), (0, 1), (1, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 2), (2, 3), (3, 3),
)


@dataclass(frozen=True)
class QuadraticHamiltonianCoeffs:
    """Time-dependent coefficients of ``H(t)``; ``period`` is ``None`` for aperiodic drives."""

    omega_a: Callable[[float], float]
    omega_b: Callable[[float], float]
    g: Callable[[float], float]
    period: float | None = None

    @classmethod
    def constant(cls, omega_a: float, omega_b: float, g: float) -> "QuadraticHamiltonianCoeffs":
        return cls(lambda t: omega_a, lambda t: omega_b, lambda t: g, None)


def detector_model_hamiltonian(p: DetectorParams) -> QuadraticHamiltonianCoeffs:
    """Lab-frame coefficients of the oscillating detector at the cavity midpoint.

    ``omega_a = 1``, ``omega_b = omega_d0 dtau/dt`` and
    ``g = lambda0 dtau/dt sin[(xi/Omega_m) cos(Omega_m t)]``, exact in ``xi``.
    """
    xi, om, wd0, lam0 = p.xi, p.Omega_m, p.omega_d0, p.lambda0
    z = xi / om

    def omega_b(t):
        return wd0 * lorentz_factor(xi, om * t)

    def g(t):
        return lam0 * lorentz_factor(xi, om * t) * math.sin(z * math.cos(om * t))

    return QuadraticHamiltonianCoeffs(lambda t: 1.0, omega_b, g, 2.0 * math.pi / om)


@dataclass
class MomentOde:
    """``dV/dt = M(t) V + K(t)`` with ``M(t) = M0 + sum_i f_i(t) M_i`` and likewise for ``K``.

    Constant-coefficient systems have no time-dependent terms.
    """

    M0: NDArray[np.complex128]
    K0: NDArray[np.complex128]
    gamma: float
    terms: list[tuple[Callable[[float], float], NDArray, NDArray]] = field(default_factory=list)
    period: float | None = None

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def drift(self, t: float = 0.0) -> NDArray[np.complex128]:
        m = self.M0.copy()
        for f, mi, _ in self.terms:
            m += f(t) * mi
        return m

    def constant(self, t: float = 0.0) -> NDArray[np.complex128]:
        k = self.K0.copy()
        for f, _, ki in self.terms:
            k += f(t) * ki
        return k

    def rhs(self, t: float, v: NDArray) -> NDArray:
        return self.drift(t) @ v + self.constant(t)

    def _augmented_rhs(self, t: float, z: NDArray) -> NDArray:
        zz = z.reshape(10, 11)
        out = self.drift(t) @ zz
        out[:, 10] += self.constant(t)
        return out.reshape(-1)


def _ladder_sigma(v: NDArray, half: float) -> NDArray:
    e = v
    return np.array(
        [[e[0], e[1] + half, e[3], e[5]],
         [e[1] + half, e[2], e[4], e[6]],
         [e[3], e[4], e[7], e[8] + half],
         [e[5], e[6], e[8] + half, e[9]]],
        dtype=complex,
    )


def _extract(sigma: NDArray) -> NDArray:
    return np.array([sigma[i, j] for i, j in _SIGMA_INDEX])


def moment_map(ladder_drift: ArrayLike, noise: ArrayLike) -> tuple[NDArray, NDArray]:
    """Affine moment equations ``(M, K)`` induced by a ladder drift ``A`` and noise ``D``."""
    a = np.asarray(ladder_drift, dtype=complex)
    d = np.asarray(noise, dtype=complex)
    m = np.empty((10, 10), dtype=complex)
    for i in range(10):
        s = _ladder_sigma(np.eye(10)[i], 0.0)
        m[:, i] = _extract(a @ s + s @ a.T)
    s0 = _ladder_sigma(np.zeros(10), 0.5)
    k = _extract(a @ s0 + s0 @ a.T + d)
    return m, k


def ladder_drift(omega_a: float, omega_b: float, g: float, gamma: float) -> NDArray:
    """``A`` in ``d(a, a^dag, b, b^dag)/dt = A (a, a^dag, b, b^dag)`` for ``H(t)``."""
    h = 0.5 * gamma
    return np.array(
        [[-1j * omega_a - h, 0, -1j * g, -1j * g],
         [0, 1j * omega_a - h, 1j * g, 1j * g],
         [-1j * g, -1j * g, -1j * omega_b - h, 0],
         [1j * g, 1j * g, 0, 1j * omega_b - h]],
        dtype=complex,
    )


def _vacuum_noise(gamma: float) -> NDArray:
    d = np.zeros((4, 4), dtype=complex)
    d[0, 1] = d[1, 0] = d[2, 3] = d[3, 2] = 0.5 * gamma
    return d


def full_moment_ode(h: QuadraticHamiltonianCoeffs, gamma: float) -> MomentOde:
    """Moment equations for the general quadratic Hamiltonian ``h``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    zero = np.zeros((4, 4))
    m0, k0 = moment_map(ladder_drift(0, 0, 0, gamma), _vacuum_noise(gamma))
    terms = []
    for f, args in ((h.omega_a, (1, 0, 0)), (h.omega_b, (0, 1, 0)), (h.g, (0, 0, 1))):
        mi, ki = moment_map(ladder_drift(*args, 0.0), zero)
        terms.append((f, mi, ki))
    return MomentOde(m0, k0, gamma, terms, h.period)


def rwa_moment_ode(lam: float, gamma: float) -> MomentOde:
    """Constant drift for ``H = lambda (a^dag b^dag + a b)`` with equal damping.

    Rows follow the moment ordering of :data:`gaussian.MOMENT_LABELS`.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    il = 1j * lam
    m = -gamma * np.eye(10, dtype=complex)
    A, N, AD = gs.AA, gs.ADA, gs.ADAD
    m[A, gs.ABD] = -2 * il
    m[N, gs.AB], m[N, gs.ADBD] = il, -il
    m[AD, gs.ADB] = 2 * il
    m[gs.AB, N], m[gs.AB, gs.BDB] = -il, -il
    m[gs.ADB, gs.BB], m[gs.ADB, AD] = il, -il
    m[gs.ABD, gs.BDBD], m[gs.ABD, A] = -il, il
    m[gs.ADBD, N], m[gs.ADBD, gs.BDB] = il, il
    m[gs.BB, gs.ADB] = -2 * il
    m[gs.BDB, gs.AB], m[gs.BDB, gs.ADBD] = il, -il
    m[gs.BDBD, gs.ABD] = 2 * il
    k = np.zeros(10, dtype=complex)
    k[gs.AB], k[gs.ADBD] = -il, il
    return MomentOde(m, k, gamma)


def spectral_abscissa(matrix: ArrayLike) -> float:
    return float(np.max(np.linalg.eigvals(np.asarray(matrix)).real))


def _require_stable(ode: MomentOde) -> None:
    m = ode.M0
    a = spectral_abscissa(m)
    if a >= -1e-12 * max(1.0, float(np.abs(m).max())):
        raise InstabilityError(
            f"at or beyond parametric instability (spectral abscissa {a:.3e} >= 0)"
        )


def steady_state(ode: MomentOde) -> gs.MomentVector:
    """Fixed point ``-M^{-1} K`` of a constant-coefficient system."""
    if not ode.is_constant:
        raise ValueError("steady_state needs constant coefficients; use periodic_steady_state")
    _require_stable(ode)
    try:
        v = np.linalg.solve(ode.M0, -ode.K0)
    except np.linalg.LinAlgError as exc:
        raise InstabilityError("at or beyond parametric instability (singular drift)") from exc
    return gs.MomentVector(v)


def ndpa_steady_state(eta: float) -> gs.MomentVector:
    """Analytic steady state for ``eta = lambda/gamma < 1/2``."""
    if not abs(eta) < 0.5:
        raise InstabilityError(f"at or beyond parametric instability (eta = {eta})")
    s = 1.0 / (1.0 - 4.0 * eta * eta)
    return gs.MomentVector.from_pairs(n_a=2 * eta * eta * s, n_b=2 * eta * eta * s,
                                      ab=-1j * eta * s)


def _phi(x: float, t: NDArray) -> NDArray:
    # (1 - exp(-x t))/x with the x -> 0 limit t
    if x == 0.0:
        return np.asarray(t, dtype=float)
    return -np.expm1(-x * t) / x


def closed_form_moments(lam: float, gamma: float, t: float | ArrayLike):
    """Exact RWA moments from vacuum at time(s) ``t``.

    ``<a^dag a> = <b^dag b> = (lambda/2)[phi(gamma - 2 lambda) - phi(gamma + 2 lambda)]`` and
    ``<a^dag b^dag> = -<a b> = (i lambda/2)[phi(gamma - 2 lambda) + phi(gamma + 2 lambda)]``
    with ``phi(x) = (1 - e^{-x t})/x``, which stays finite at ``gamma = 2 lambda``.
    Returns a :class:`MomentVector` for scalar ``t`` and an ``(n, 10)`` array otherwise.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("t must be nonnegative")
    pm, pp = _phi(gamma - 2 * lam, tt), _phi(gamma + 2 * lam, tt)
    n = 0.5 * lam * (pm - pp)
    c = 0.5j * lam * (pm + pp)
    out = np.zeros(tt.shape + (10,), dtype=complex)
    out[..., gs.ADA] = n
    out[..., gs.BDB] = n
    out[..., gs.ADBD] = c
    out[..., gs.AB] = -c
    return gs.MomentVector(out) if tt.ndim == 0 else out


@dataclass(frozen=True)
class Trajectory:
    t: NDArray[np.float64]
    moments: NDArray[np.complex128]  # shape (len(t), 10)

    @property
    def n_a(self) -> NDArray[np.float64]:
        return self.moments[:, gs.ADA].real

    @property
    def n_b(self) -> NDArray[np.float64]:
        return self.moments[:, gs.BDB].real


def _check_trajectory(moments: NDArray, t: NDArray, tol: float) -> None:
    loose = max(1e-10, 100.0 * tol)
    for ti, v in zip(t, moments):
        gs.check_moment_invariants(v, tol=loose)
        e = v.copy()
        for i, j in ((gs.AA, gs.ADAD), (gs.BB, gs.BDBD), (gs.AB, gs.ADBD), (gs.ADB, gs.ABD)):
            e[j] = np.conj(e[i])
        e[gs.ADA], e[gs.BDB] = e[gs.ADA].real, e[gs.BDB].real
        try:
            gs.moments_to_covariance(e, check=True)
        except NonPhysicalStateError as exc:
            raise NonPhysicalStateError(f"at t = {ti:.6g}: {exc}", exc.eigenvalue) from exc


def integrate_moments(
    ode: MomentOde,
    v0: gs.MomentVector | ArrayLike,
    t_end: float,
    tol: float = 1e-9,
    t_eval: ArrayLike | None = None,
    n_samples: int = 501,
    check_physical: bool = True,
) -> Trajectory:
    """Adaptive Runge-Kutta (8th-order Dormand-Prince) integration from ``t = 0``.

    ``tol`` is the relative local error target; the absolute target is
    ``tol / 100``.  Samples are taken on ``t_eval`` or an even grid of
    ``n_samples`` points.
    """
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    v0 = gs.as_moments(v0).entries
    grid = np.linspace(0.0, t_end, n_samples) if t_eval is None else np.asarray(t_eval, float)
    with np.errstate(over="ignore", invalid="ignore"):
        sol = solve_ivp(ode.rhs, (0.0, t_end), v0.astype(complex), method="DOP853",
                        t_eval=grid, rtol=tol, atol=tol * 1e-2)
    if sol.status != 0 or not np.all(np.isfinite(sol.y)):
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        raise StepCollapseError(f"integration failed near t = {t_fail:.6g}: {sol.message}",
                                t_fail=t_fail)
    moments = sol.y.T.copy()
    if check_physical:
        _check_trajectory(moments, sol.t, tol)
    return Trajectory(sol.t, moments)


@dataclass(frozen=True)
class FloquetPropagator:
    """One-period propagator of a periodic moment system.

    ``V(k T + tau) = Phi(tau) V(k T) + c(tau)``; ``sample`` evaluates
    ``(Phi(tau), c(tau))`` from dense output.
    """

    period: float
    monodromy: NDArray[np.complex128]
    offset: NDArray[np.complex128]
    _dense: Callable = field(repr=False)

    def sample(self, tau: float) -> tuple[NDArray, NDArray]:
        z = self._dense(tau).reshape(10, 11)
        return z[:, :10], z[:, 10]

    @property
    def floquet_exponent(self) -> float:
        """Largest real Floquet exponent ``log|mu|/T``."""
        mu = np.abs(np.linalg.eigvals(self.monodromy))
        return float(np.log(mu.max()) / self.period)


def floquet_propagator(ode: MomentOde, tol: float = 1e-12) -> FloquetPropagator:
    if ode.period is None:
        raise ValueError("ode has no period")
    z0 = np.zeros((10, 11), dtype=complex)
    z0[:, :10] = np.eye(10)
    sol = solve_ivp(ode._augmented_rhs, (0.0, ode.period), z0.reshape(-1), method="DOP853",
                    rtol=tol, atol=tol, dense_output=True)
    if sol.status != 0:
        raise StepCollapseError(f"period integration failed: {sol.message}", float(sol.t[-1]))
    zt = sol.y[:, -1].reshape(10, 11)
    return FloquetPropagator(ode.period, zt[:, :10], zt[:, 10], sol.sol)


def propagate_periodic(
    prop: FloquetPropagator, v0: gs.MomentVector | ArrayLike, t_eval: ArrayLike
) -> Trajectory:
    """Evaluate a periodic trajectory at arbitrary (possibly very late) times."""
    t = np.asarray(t_eval, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be nonnegative")
    order = np.argsort(t, kind="stable")
    out = np.empty((t.size, 10), dtype=complex)
    v = gs.as_moments(v0).entries.astype(complex)
    k = 0
    for idx in order:
        kk = int(t[idx] // prop.period)
        while k < kk:
            v = prop.monodromy @ v + prop.offset
            k += 1
        phi, c = prop.sample(t[idx] - k * prop.period)
        out[idx] = phi @ v + c
    return Trajectory(t, out)


@dataclass(frozen=True)
class PeriodicSteadyState:
    stroboscopic: gs.MomentVector   # fixed point at t = k T
    mean: gs.MomentVector           # average over one period
    floquet_exponent: float


def periodic_steady_state(
    ode: MomentOde, tol: float = 1e-12, n_avg: int = 512, prop: FloquetPropagator | None = None
) -> PeriodicSteadyState:
    """Asymptotic periodic orbit of a stable periodic system and its period average."""
    prop = prop or floquet_propagator(ode, tol)
    mu = prop.floquet_exponent
    if mu >= 0:
        raise InstabilityError(
            f"at or beyond parametric instability (Floquet exponent {mu:.3e} >= 0)"
        )
    vstar = np.linalg.solve(np.eye(10) - prop.monodromy, prop.offset)
    taus = np.arange(n_avg) * prop.period / n_avg
    acc = np.zeros(10, dtype=complex)
    for tau in taus:
        phi, c = prop.sample(tau)
        acc += phi @ vstar + c
    return PeriodicSteadyState(gs.MomentVector(vstar), gs.MomentVector(acc / n_avg), mu)


def many_detector_scaling(lam: float, gamma: float, n_detectors: int) -> tuple[float, float]:
    """Steady cavity occupation and critical ``eta`` for ``N`` identical detectors.

    The cavity couples to the collective detector mode with strength
    ``sqrt(N) lambda``, giving ``2 N eta^2 / (1 - 4 N eta^2)`` and
    ``eta_crit = 1 / (2 sqrt(N))``.
    """
    if int(n_detectors) != n_detectors or n_detectors < 1:
        raise ValueError("number of detectors must be a positive integer")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    eta = lam / gamma
    eta_crit = 0.5 / math.sqrt(n_detectors)
    x = 4.0 * n_detectors * eta * eta
    if x >= 1.0:
        raise InstabilityError(
            f"at or beyond parametric instability: eta = {eta:.6g} >= eta_crit = {eta_crit:.6g}"
        )
    return 2.0 * n_detectors * eta * eta / (1.0 - x), eta_crit


__all__: Sequence[str] = (
    "QuadraticHamiltonianCoeffs", "MomentOde", "Trajectory", "FloquetPropagator",
    "PeriodicSteadyState", "detector_model_hamiltonian", "full_moment_ode", "rwa_moment_ode",
    "moment_map", "ladder_drift", "spectral_abscissa", "steady_state", "ndpa_steady_state",
    "closed_form_moments", "integrate_moments", "floquet_propagator", "propagate_periodic",
    "periodic_steady_state", "many_detector_scaling",
)
