"""End-to-end acceptance checks, one test per criterion (two for the spectra).

Each test records a one-line verdict that the terminal summary prints.
"""

import math
import time

import numpy as np
import pytest
from scipy.linalg import solve_sylvester

from unruh_ndpa import circuit as cz
from unruh_ndpa import gaussian as gs
from unruh_ndpa import langevin as lv
from unruh_ndpa import rwa
from unruh_ndpa import spectra as sp
from unruh_ndpa.errors import InstabilityError

from conftest import ACCEPTANCE

FIG2 = dict(xi=0.8, omega_d0=0.8, lambda0=0.01)


def record(n, part, checks, elapsed, limit):
    """Store the verdict, print it, then assert every check."""
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f}s < {limit}s"] = elapsed < limit
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    detail = " | ".join(checks) if ok else "failed: " + " | ".join(failed)
    ACCEPTANCE.setdefault(n, []).append((part, ok, detail))
    print(f"criterion {n} [{part}]: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def fig2_ode(eta):
    lam = rwa.renormalized_coupling(rwa.DetectorParams(**FIG2)).lambda_
    return lv.full_moment_ode(lv.detector_model_hamiltonian(rwa.DetectorParams(**FIG2)), lam / eta)


def test_criterion_01_rwa_renormalization():
    t0 = time.perf_counter()
    c = rwa.renormalized_coupling(rwa.DetectorParams(**FIG2))
    el = time.perf_counter() - t0
    record(1, "RWA coefficients", {
        f"omega_d={c.omega_d:.5f} vs 0.65 (1e-3)": abs(c.omega_d - 0.65) < 1e-3,
        f"Omega_m={c.Omega_m:.5f} vs 1.65 (1e-3)": abs(c.Omega_m - 1.65) < 1e-3,
        f"lambda={c.lambda_:.6f} vs 0.0021 (3%)": abs(c.lambda_ / 0.0021 - 1) < 0.03,
    }, el, 1.0)


def test_criterion_02_steady_state():
    t0 = time.perf_counter()
    checks = {}
    for eta, target, tol_val in ((0.40, 0.8889, 5e-5), (0.48, 5.878, 1e-3)):
        gamma = 1.0
        lam = eta * gamma
        closed = 2 * eta**2 / (1 - 4 * eta**2)
        linear = lv.steady_state(lv.rwa_moment_ode(lam, gamma)).n_a
        ode = lv.rwa_moment_ode(lam, gamma)
        # at t = 10/gamma the integrator tracks the time-dependent closed form
        tr = lv.integrate_moments(ode, gs.MomentVector.vacuum(), 10 / gamma, tol=1e-11, n_samples=11)
        cf = lv.closed_form_moments(lam, gamma, 10 / gamma).n_a
        # relaxation rate of the occupation is gamma (1 - 2 eta)
        t_long = 30 / (gamma * (1 - 2 * eta))
        tr_long = lv.integrate_moments(ode, gs.MomentVector.vacuum(), t_long, tol=1e-11, n_samples=3)
        checks[f"eta={eta}: closed form {closed:.6f} ~ {target}"] = abs(closed - target) < tol_val
        checks[f"eta={eta}: linear solve - closed form < 1e-6"] = abs(linear - closed) < 1e-6
        checks[f"eta={eta}: integrator at 10/gamma - closed form < 1e-6"] = abs(tr.n_a[-1] - cf) < 1e-6
        checks[f"eta={eta}: integrator at t_long - closed form < 1e-6"] = abs(tr_long.n_a[-1] - closed) < 1e-6
    raised = []
    for eta in (0.5, 0.6):
        try:
            lv.ndpa_steady_state(eta)
            raised.append(False)
        except InstabilityError:
            raised.append(True)
        try:
            lv.steady_state(lv.rwa_moment_ode(eta, 1.0))
            raised.append(False)
        except InstabilityError:
            raised.append(True)
    checks["instability raised at eta >= 0.5"] = all(raised)
    record(2, "steady state", checks, time.perf_counter() - t0, 5.0)


def test_criterion_03_full_vs_rwa():
    t0 = time.perf_counter()
    etas = (0.40, 0.44, 0.48)
    n_full = [lv.periodic_steady_state(fig2_ode(e)).mean.n_a for e in etas]
    n_rwa = [2 * e**2 / (1 - 4 * e**2) for e in etas]
    dev = [abs(f / r - 1) for f, r in zip(n_full, n_rwa)]
    record(3, "full vs RWA", {
        f"eta=0.40 full {n_full[0]:.4f} within 15% of 0.8889": abs(n_full[0] / 0.8889 - 1) < 0.15,
        f"deviation grows {dev[0]:.3f} < {dev[1]:.3f} < {dev[2]:.3f}": dev[0] < dev[1] < dev[2],
    }, time.perf_counter() - t0, 30.0)


def test_criterion_04_entanglement():
    t0 = time.perf_counter()
    etas = np.linspace(0.0, 0.49, 50)
    errs = [abs(gs.log_negativity_from_moments(lv.ndpa_steady_state(e)) - math.log2(1 + 2 * e))
            for e in etas]
    e04 = gs.log_negativity_from_moments(lv.ndpa_steady_state(0.4))
    e0 = gs.log_negativity_from_moments(lv.ndpa_steady_state(0.0))
    e_top = gs.log_negativity_from_moments(lv.ndpa_steady_state(0.5 - 1e-7))
    record(4, "log negativity", {
        f"max |E_N - log2(1+2 eta)| = {max(errs):.1e} < 1e-9 on 50 points": max(errs) < 1e-9,
        f"E_N(0.4) = {e04:.5f} ~ 0.8480": abs(e04 - 0.8480) < 5e-5,
        "E_N(0) = 0": e0 == 0.0,
        f"E_N(1/2 - 1e-7) = {e_top:.7f} -> 1": abs(e_top - 1) < 1e-6,
    }, time.perf_counter() - t0, 2.0)


def test_criterion_05_effective_temperature():
    t0 = time.perf_counter()
    t04 = gs.effective_temperature(lv.ndpa_steady_state(0.4).n_a)
    ratios = []
    for eta in np.linspace(0.45, 0.495, 10):
        t = gs.effective_temperature(lv.ndpa_steady_state(eta).n_a)
        ratios.append(t * 4 * (1 - 2 * eta))
    worst = max(abs(r - 1) for r in ratios)
    record(5, "effective temperature", {
        f"T(0.4) = {t04:.5f} vs 1.3267 (1e-4)": abs(t04 - 1.3267) < 1e-4,
        f"T (4(1-2 eta)) within 10% of 1 on [0.45, 0.495] (worst {worst:.3f})": worst < 0.10,
    }, time.perf_counter() - t0, 1.0)


def test_criterion_06_single_mode_validity():
    t0 = time.perf_counter()
    first = rwa.first_near_resonance(rwa.single_mode_validity(rwa.DetectorParams(**FIG2)))
    record(6, "single-mode validity", {
        f"first near resonance ({first.k}, {first.n}) == (21, 34)": (first.k, first.n) == (21, 34),
    }, time.perf_counter() - t0, 1.0)


def n_detector_occupation(eta, n_det):
    """Cavity occupation from the explicit (N+1)-mode Lyapunov steady state."""
    m = n_det + 1
    A = np.zeros((2 * m, 2 * m), complex)
    for k in range(m):
        A[k, k] = A[m + k, m + k] = -0.5
    for j in range(1, m):
        A[0, m + j] = A[j, m] = -1j * eta
        A[m, j] = A[m + j, 0] = 1j * eta
    D = np.zeros_like(A)
    for k in range(m):
        D[k, m + k] = D[m + k, k] = 0.5
    sigma = solve_sylvester(A, A.T, -D)
    return float(sigma[0, m].real - 0.5)


def test_criterion_07_many_detectors():
    t0 = time.perf_counter()
    eta = 0.1
    checks = {}
    for n in (1, 2, 4, 16):
        formula, _ = lv.many_detector_scaling(eta, 1.0, n)
        collective = lv.steady_state(lv.rwa_moment_ode(math.sqrt(n) * eta, 1.0)).n_a
        explicit = n_detector_occupation(eta, n)
        single, _ = lv.many_detector_scaling(math.sqrt(n) * eta, 1.0, 1)
        checks[f"N={n}: formula vs collective ODE < 1e-10"] = abs(formula - collective) < 1e-10
        checks[f"N={n}: formula vs explicit N-mode Lyapunov < 1e-10"] = abs(formula - explicit) < 1e-10
        checks[f"N={n}: (N, eta) == (1, sqrt(N) eta)"] = abs(formula - single) < 1e-12
    record(7, "many detectors", checks, time.perf_counter() - t0, 2.0)


def test_criterion_08_and_09_circuit():
    t0 = time.perf_counter()
    spec = cz.CircuitSpec()
    modes = cz.solve_normal_modes(spec, 2)
    lam = cz.coupling_matrix(spec, modes)
    f1, f2 = (m.omega / (2 * math.pi * 1e9) for m in modes)
    L = np.arange(5, 151, 5) * 1e-6
    lam12 = []
    for x in L:
        s = cz.CircuitSpec(L_m=x)
        ms = cz.solve_normal_modes(s, 2)
        lam12.append(abs(cz.coupling_matrix(s, ms)[0, 1]))
    lam12 = np.array(lam12)
    small = L <= 40e-6
    fit = np.polyfit(L[small], lam12[small], 1)
    resid = lam12[small] - np.polyval(fit, L[small])
    r2 = 1 - np.sum(resid**2) / np.sum((lam12[small] - lam12[small].mean()) ** 2)
    peak = L[np.argmax(lam12)] * 1e6
    el = time.perf_counter() - t0
    record(8, "circuit modes", {
        f"f1 = {f1:.4f} GHz within 5% of 3.8": abs(f1 / 3.8 - 1) < 0.05,
        f"f2 = {f2:.4f} GHz within 5% of 5.7": abs(f2 / 5.7 - 1) < 0.05,
        f"|lambda12| = {abs(lam[0, 1]):.4f} within 10% of 0.04": abs(abs(lam[0, 1]) / 0.04 - 1) < 0.10,
        f"linear fit R^2 = {r2:.4f} >= 0.98 below 40 um": r2 >= 0.98,
        f"extremum at {peak:.0f} um in [70, 110]": 70 <= peak <= 110,
    }, el, 60.0)
    t1 = time.perf_counter()
    pump = cz.pump_coupling(spec, lam[0, 1], modes[0].omega, modes[1].omega)
    record(9, "pump coupling", {
        f"|lambda| = {abs(pump.lam):.4g} /s within 10% of 2.45e4": abs(abs(pump.lam) / 2.45e4 - 1) < 0.10,
        "A = 1e-11 m, D = 500 nm": spec.drive_amplitude == 1e-11 and spec.fbar_thickness == 500e-9,
    }, time.perf_counter() - t1, 1.0)


def baseline_spectrum():
    p = sp.MeasurementParams.from_quality()
    return p, sp.cross_spectrum(p)


def test_criterion_10_spectra_structure():
    t0 = time.perf_counter()
    p, s = baseline_spectrum()
    n = s.N_cd
    i1 = int(np.argmin(n))
    i2 = int(np.argmax(n))
    step1 = np.diff(s.omega)[max(i1 - 1, 0)]
    step2 = np.diff(s.omega)[min(i2, len(s.omega) - 2)]
    between = (s.omega > p.omega1) & (s.omega < p.omega2)
    changes = int(np.sum(np.diff(np.sign(n[between])) != 0))
    peak_s = abs(s.S_cd[i1]) / sp.k_B * 1e3
    record(10, "two-lobe structure", {
        f"lobe at f1 negative ({n[i1]:.4f}), at f2 positive ({n[i2]:.4f})": n[i1] < 0 < n[i2],
        "one sign change between resonances": changes == 1,
        "peaks within half a grid step of omega_1, omega_2":
            abs(s.omega[i1] - p.omega1) <= step1 / 2 and abs(s.omega[i2] - p.omega2) <= step2 / 2,
        f"peak |N_cd| {abs(n[i1]):.4f}, {abs(n[i2]):.4f} in [0.005, 0.06]":
            all(0.005 <= abs(v) <= 0.06 for v in (n[i1], n[i2])),
        f"peak |S_cd|/k_B = {peak_s:.2f} mK in the mK range [0.1, 100]": 0.1 <= peak_s <= 100,
    }, time.perf_counter() - t0, 10.0)


def test_criterion_10_linewidth():
    t0 = time.perf_counter()
    p, s = baseline_spectrum()
    w1 = sp.lobe_fwhm(s, p.omega1)
    w2 = sp.lobe_fwhm(s, p.omega2)
    record(10, "linewidth", {
        f"FWHM1/gamma1 = {w1 / p.gamma1:.4f} within 5% of 1": abs(w1 / p.gamma1 - 1) < 0.05,
        f"FWHM2/gamma2 = {w2 / p.gamma2:.4f} within 5% of 1": abs(w2 / p.gamma2 - 1) < 0.05,
    }, time.perf_counter() - t0, 10.0)


def test_criterion_11_squeezing():
    t0 = time.perf_counter()
    p = sp.MeasurementParams.from_quality()
    thr, t_thr = sp.squeezing_threshold(p)
    worst = np.inf
    for temp in np.linspace(0.0, 0.3, 100):
        for theta in np.linspace(0.0, 2 * math.pi, 100):
            x1, x2 = sp.squeezing_variances(p, theta, temperature=temp)
            worst = min(worst, math.sqrt(x1 * x2))
    record(11, "squeezing", {
        f"threshold {thr:.5f} = 0.0818 +/- 0.002": abs(thr - 0.0818) <= 0.002,
        f"T_threshold {t_thr * 1e3:.2f} mK in [60, 75]": 0.060 <= t_thr <= 0.075,
        f"min dX1 dX2 = {worst:.5f} >= 1/4 on 100x100 grid": worst >= 0.25 - 1e-12,
    }, time.perf_counter() - t0, 5.0)


def test_criterion_12_physicality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240612)
    worst = np.inf
    n_states = 0
    for i in range(200):
        if i % 4 == 3:
            # full model with a moving detector
            xi = rng.uniform(0.05, 0.9)
            d = rwa.DetectorParams(xi, rng.uniform(0.3, 1.5), rng.uniform(0.002, 0.02))
            lam = rwa.renormalized_coupling(d).lambda_
            gamma = abs(lam) / rng.uniform(0.05, 0.45)
            ode = lv.full_moment_ode(lv.detector_model_hamiltonian(d), gamma)
            prop = lv.floquet_propagator(ode)
            t = np.linspace(0, 5 / gamma, 41)
            states = list(lv.propagate_periodic(prop, gs.MomentVector.vacuum(), t).moments)
            states.append(lv.periodic_steady_state(ode, prop=prop).stroboscopic.entries)
        else:
            gamma = rng.uniform(0.001, 1.0)
            lam = rng.uniform(0.0, 0.499) * gamma
            ode = lv.rwa_moment_ode(lam, gamma)
            v0 = lv.ndpa_steady_state(rng.uniform(0, 0.45)).rotated(*rng.uniform(0, 2 * np.pi, 2))
            tr = lv.integrate_moments(ode, v0, 10 / gamma, tol=1e-9, n_samples=41)
            states = list(tr.moments) + [lv.steady_state(ode).entries]
        for v in states:
            g = gs.moments_to_covariance(gs.MomentVector(0.5 * (v + _conj_partner(v))), check=False)
            worst = min(worst, gs.physicality_eigenvalues(g)[0])
            n_states += 1
    record(12, "physicality", {
        f"min eigenvalue of gamma + (i/2) Omega = {worst:.2e} >= -1e-9 over {n_states} states":
            worst >= -1e-9,
    }, time.perf_counter() - t0, 60.0)


def _conj_partner(v):
    """Moment vector with each entry replaced by the conjugate of its partner."""
    e = np.asarray(v)
    out = e.copy()
    for i, j in ((gs.AA, gs.ADAD), (gs.BB, gs.BDBD), (gs.AB, gs.ADBD), (gs.ADB, gs.ABD)):
        out[i], out[j] = np.conj(e[j]), np.conj(e[i])
    out[gs.ADA], out[gs.BDB] = np.conj(e[gs.ADA]), np.conj(e[gs.BDB])
    return out
