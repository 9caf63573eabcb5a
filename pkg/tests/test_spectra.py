import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.constants import hbar, k as k_B
from scipy.integrate import quad

from unruh_ndpa import gaussian as gs
from unruh_ndpa import langevin as lv
from unruh_ndpa import spectra as sp
from unruh_ndpa.errors import InstabilityError, NumericalError


def baseline_params(**kw):
    return sp.MeasurementParams.from_quality(**kw)


rates = st.floats(1e4, 1e6)


@st.composite
def measurement(draw):
    w1 = draw(st.floats(2e10, 3e10))
    w2 = draw(st.floats(3.2e10, 4e10))
    g = [draw(rates) for _ in range(4)]
    g1, g2 = g[0] + g[1], g[2] + g[3]
    lam = draw(st.floats(0.0, 0.45)) * math.sqrt(g1 * g2)
    return sp.MeasurementParams(w1, w2, lam, g[0], g[1], g[2], g[3],
                                temperature=draw(st.floats(0.0, 0.2)))


def lyapunov_variance(p, theta, n1, n2):
    """Quadrature variance from the steady state of the moment equations."""
    g1, g2, lam = p.gamma1, p.gamma2, p.lam
    A = np.array([[-g1 / 2, 0, 0, -1j * lam],
                  [0, -g1 / 2, 1j * lam, 0],
                  [0, -1j * lam, -g2 / 2, 0],
                  [1j * lam, 0, 0, -g2 / 2]])
    D = np.zeros((4, 4), complex)
    D[0, 1] = D[1, 0] = g1 * (n1 + 0.5)
    D[2, 3] = D[3, 2] = g2 * (n2 + 0.5)
    M, K = lv.moment_map(A, D)
    s = gs.symmetrized_ladder_matrix(np.linalg.solve(M, -K))
    c = 2 ** -1.5 * np.array([1, 1, np.exp(-1j * theta), np.exp(1j * theta)])
    return float((c @ s @ c).real)


def test_response_at_zero_pump_is_passive():
    p = baseline_params(lam=0.0)
    r = sp.mode_response(p, p.omega1 + 3e4)
    assert np.all(r.a1[2:] == 0) and np.all(r.a2[2:] == 0)
    # on resonance a bare mode with equal ports transmits fully; mode 2 is far detuned
    r0 = sp.mode_response(p, p.omega1)
    assert r0.c_out[0] == pytest.approx(0.0, abs=1e-4)
    assert r0.d_out[0] == pytest.approx(1.0, abs=1e-4)


def _commutator_defects(c, d):
    norms = [np.sum(np.abs(x[:2]) ** 2) - np.sum(np.abs(x[2:]) ** 2) - 1 for x in (c, d)]
    cross = np.vdot(d[:2], c[:2]) - np.vdot(d[2:], c[2:])
    return max(abs(norms[0]), abs(norms[1]), abs(cross))


@settings(max_examples=60, deadline=None)
@given(measurement(), st.floats(-5.0, 5.0))
def test_output_commutators_preserved(p, offset):
    e_c, e_d = np.eye(4)[0], np.eye(4)[1]
    for centre, g in ((p.omega1, p.gamma1), (p.omega2, p.gamma2)):
        r = sp.mode_response(p, centre + offset * g)
        # each lobe alone is exactly unitary
        if centre == p.omega1:
            c = e_c + 1j * math.sqrt(p.gamma_c1) * r.a1
            d = e_d - 1j * math.sqrt(p.gamma_d1) * r.a1
        else:
            c = e_c + 1j * math.sqrt(p.gamma_c2) * r.a2
            d = e_d + 1j * math.sqrt(p.gamma_d2) * r.a2
        assert _commutator_defects(c, d) < 1e-12
        # the far-detuned mode enters at first order in gamma / (omega2 - omega1)
        gain = 1 + np.sum(np.abs(r.c_out) ** 2) + np.sum(np.abs(r.d_out) ** 2)
        bound = 1e-12 + 4 * gain * max(p.gamma1, p.gamma2) / (p.omega2 - p.omega1)
        assert _commutator_defects(r.c_out, r.d_out) < bound


@settings(max_examples=40, deadline=None)
@given(measurement())
def test_cross_spectrum_matches_response_coefficients(p):
    offsets = np.linspace(-4, 4, 9)
    nbar1 = sp.bose_einstein(p.omega1 + offsets * p.gamma1, p.temperature)
    nbar2 = sp.bose_einstein(p.omega2 + offsets * p.gamma2, p.temperature)
    for mode, centre, g, nbar in ((1, p.omega1, p.gamma1, nbar1), (2, p.omega2, p.gamma2, nbar2)):
        grid = centre + offsets * g
        s = sp.cross_spectrum(p, grid)
        for w, n, val in zip(grid, nbar, s.S_cd):
            r = sp.mode_response(p, w)
            if mode == 1:
                beta_c = 1j * math.sqrt(p.gamma_c1) * r.a1[2:]
                beta_d = -1j * math.sqrt(p.gamma_d1) * r.a1[2:]
            else:
                beta_c = 1j * math.sqrt(p.gamma_c2) * r.a2[2:]
                beta_d = 1j * math.sqrt(p.gamma_d2) * r.a2[2:]
            scale = hbar * w * (2 * n + 1)
            lobe = scale * np.real(np.sum(beta_c * np.conj(beta_d)))
            full = scale * np.real(np.sum(r.c_out[2:] * np.conj(r.d_out[2:])))
            # the closed form keeps only the resonant mode
            assert val == pytest.approx(lobe, rel=1e-10, abs=1e-14 * scale)
            leak = 10 * max(p.gamma1, p.gamma2) / (p.omega2 - p.omega1)
            assert val == pytest.approx(full, rel=leak, abs=1e-14 * scale)


def test_bose_einstein_zero_temperature_exact():
    assert np.all(sp.bose_einstein(np.array([1e9, 1e10]), 0.0) == 0.0)
    w = 2 * math.pi * 5e9
    t = 0.3
    assert sp.bose_einstein(w, t) == pytest.approx(1 / (math.exp(hbar * w / (k_B * t)) - 1))


def test_lobe_signs_and_peaks():
    p = baseline_params()
    s = sp.cross_spectrum(p)
    lo = s.N_cd[np.argmin(np.abs(s.omega - p.omega1))]
    hi = s.N_cd[np.argmin(np.abs(s.omega - p.omega2))]
    assert lo < 0 < hi
    # symmetric splits: equal and opposite peak heights
    a, b = p.gamma1 / 2, p.gamma2 / 2
    expected = p.lam**2 * math.sqrt(p.gamma_c1 * p.gamma_d1) * p.gamma2 / (a * b - p.lam**2) ** 2
    assert -lo == pytest.approx(expected, rel=1e-12)
    assert hi == pytest.approx(-lo, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(measurement(), st.floats(0.1, 0.9))
def test_spectrum_scales_as_lambda_squared_for_weak_pump(p, frac):
    lam = 1e-4 * math.sqrt(p.gamma1 * p.gamma2)
    grid = np.array([p.omega1, p.omega2 + 0.3 * p.gamma2])
    s1 = sp.cross_spectrum(p.with_lambda(lam), grid).N_cd
    s2 = sp.cross_spectrum(p.with_lambda(frac * lam), grid).N_cd
    assert np.allclose(s2, frac**2 * s1, rtol=1e-6)


def test_band_power_matches_lorentzian_integral():
    p = baseline_params()
    grid = np.union1d(np.linspace(p.omega1 - 400 * p.gamma1, p.omega1 + 400 * p.gamma1, 400001),
                      np.linspace(p.omega2 - 400 * p.gamma2, p.omega2 + 400 * p.gamma2, 400001))
    s = sp.cross_spectrum(p, grid)
    for mode, w0, g in ((1, p.omega1, p.gamma1), (2, p.omega2, p.gamma2)):
        got = sp.band_power(s, w0, 800 * g)
        assert got == pytest.approx(sp.lobe_power_analytic(p, mode), rel=2e-3)


def test_band_power_converges_under_refinement():
    p = baseline_params()
    vals = [sp.band_power(sp.cross_spectrum(p, sp.lobe_grid(p, n)), p.omega2, 3.3 * p.gamma2)
            for n in (501, 2001, 8001)]
    assert abs(vals[2] - vals[1]) < 0.1 * abs(vals[1] - vals[0])
    assert vals[2] == pytest.approx(vals[1], rel=1e-4)


def test_refined_band_power_matches_analytic():
    p = baseline_params()
    got = sp.refined_band_power(p, p.omega1, 20 * p.gamma1, points_per_lobe=201, span=10.0, rtol=1e-6)
    analytic = sp.lobe_power_analytic(p, 1)
    # the band holds all but the +/-10 gamma Lorentzian tails
    assert got == pytest.approx(analytic, rel=0.1)
    assert abs(got) < abs(analytic)


def test_refined_band_power_gives_up():
    p = baseline_params()
    with pytest.raises(NumericalError):
        sp.refined_band_power(p, p.omega1, p.gamma1, points_per_lobe=5, rtol=1e-15, max_doublings=1)


def test_band_power_rejects_out_of_grid():
    p = baseline_params()
    s = sp.cross_spectrum(p)
    with pytest.raises(ValueError):
        sp.band_power(s, p.omega1, 30 * p.gamma1)
    with pytest.raises(ValueError):
        sp.band_power(s, p.omega1, -1.0)


def test_fwhm_numeric_matches_analytic():
    p = baseline_params()
    s = sp.cross_spectrum(p, sp.lobe_grid(p, 20001))
    w = sp.lobe_fwhm_analytic(p)
    assert sp.lobe_fwhm(s, p.omega1) == pytest.approx(w, rel=1e-5)
    assert sp.lobe_fwhm(s, p.omega2) == pytest.approx(w, rel=1e-5)


def test_fwhm_weak_pump_equal_rates():
    # product of two identical Lorentzians of half width gamma/2
    p = sp.MeasurementParams(2e10, 3e10, 1.0, 5e4, 5e4, 5e4, 5e4)
    assert sp.lobe_fwhm_analytic(p) == pytest.approx(1e5 * math.sqrt(math.sqrt(2) - 1), rel=1e-6)


def test_measurement_validation():
    with pytest.raises(ValueError):
        sp.MeasurementParams(1e10, 2e10, 1.0, -1, 1, 1, 1)
    with pytest.raises(ValueError):
        sp.MeasurementParams(1e10, 2e10, 1.0, 1e3, 1e3, 1e3, 1e3, Omega_m=3e10 + 1e3)
    with pytest.warns(UserWarning, match="not small"):
        sp.MeasurementParams(1e6, 2e10, 1.0, 1e4, 1e4, 1e3, 1e3)
    with pytest.raises(ValueError):
        sp.MeasurementParams.from_quality(cavity_fraction=(1.0, 0.5))


@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi / 2, 2.0, 4.0])
def test_exact_squeezing_matches_two_oracles(theta):
    p = baseline_params(temperature=0.04)
    n1 = float(sp.bose_einstein(p.omega1, p.temperature))
    n2 = float(sp.bose_einstein(p.omega2, p.temperature))
    exact = sp.squeezing_variances(p, theta, exact=True)[0]
    # w = g tan(u) maps the real line onto a finite interval
    g = p.gamma1
    integral = quad(lambda u: sp.quadrature_spectrum(p, theta, g * math.tan(u)) * g
                    / math.cos(u) ** 2, -math.pi / 2, math.pi / 2,
                    epsabs=0, epsrel=1e-12, limit=500)[0] / (2 * math.pi)
    assert exact == pytest.approx(lyapunov_variance(p, theta, n1, n2), rel=1e-10)
    assert exact == pytest.approx(integral, rel=1e-9)
    assert sp.squeezing_variances(p, theta + math.pi, exact=True)[0] == pytest.approx(
        sp.squeezing_variances(p, theta, exact=True)[1], rel=1e-12)


def test_closed_form_differs_from_exact_integral():
    p = baseline_params()
    printed = sp.squeezing_variances(p, math.pi / 2)[0]
    exact = sp.squeezing_variances(p, math.pi / 2, exact=True)[0]
    assert printed == pytest.approx(0.25 * (1 - 2 * p.lam / (p.gamma1 + p.gamma2))
                                    / (1 - p.lam**2 / (p.gamma1 * p.gamma2)), rel=1e-14)
    assert exact < printed
    # the default formula is the exact one at half the pump coupling
    half = sp.squeezing_variances(p.with_lambda(p.lam / 2), 1.0, exact=True)
    assert sp.squeezing_variances(p, 1.0) == pytest.approx(half, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(measurement(), st.floats(0.0, 2 * math.pi), st.booleans())
def test_heisenberg_product(p, theta, exact):
    x1, x2 = sp.squeezing_variances(p, theta, exact=exact)
    assert x1 * x2 >= 1 / 16 - 1e-15


def test_squeezing_threshold_values():
    p = baseline_params()
    thr, t = sp.squeezing_threshold(p)
    assert thr == pytest.approx(0.0818, abs=2e-3)
    assert 0.060 <= t <= 0.075
    n = sp.bose_einstein(p.omega1, t) + sp.bose_einstein(p.omega2, t)
    assert n == pytest.approx(thr, rel=1e-6)
    thr_x, t_x = sp.squeezing_threshold(p, exact=True)
    assert thr_x > thr and t_x > t


def test_squeezing_threshold_edges():
    p = baseline_params(lam=0.0)
    assert sp.squeezing_threshold(p) == (0.0, 0.0)
    g = math.sqrt(baseline_params().gamma1 * baseline_params().gamma2)
    with pytest.raises(InstabilityError):
        sp.squeezing_variances(baseline_params(lam=0.6 * g), 0.0, exact=True)
    sp.squeezing_variances(baseline_params(lam=0.6 * g), 0.0)
    with pytest.raises(InstabilityError):
        sp.squeezing_variances(baseline_params(lam=1.01 * g), 0.0)


def test_splits_from_modes():
    s = sp.splits_from_modes(((1.0, 1.0), (2.0, -1.0)), 10.0, 20.0)
    assert s == pytest.approx({"gamma_c1": 5.0, "gamma_d1": 5.0, "gamma_c2": 16.0, "gamma_d2": 4.0})
    with pytest.raises(ValueError):
        sp.splits_from_modes(((0.0, 0.0), (1.0, 1.0)), 1.0, 1.0)


def test_spectrum_csv(tmp_path):
    p = baseline_params()
    s = sp.cross_spectrum(p, sp.lobe_grid(p, 11))
    path = tmp_path / "s.csv"
    sp.write_spectrum_csv(path, s)
    lines = path.read_text().splitlines()
    meta = json.loads(lines[0][2:])
    assert meta["lam"] == p.lam
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["omega_Hz", "S_cd_over_kB_mK", "N_cd_per_Hz"]
    assert len(rows) == 23
    assert float(rows[1][0]) == pytest.approx(s.omega[0] / (2 * math.pi), rel=1e-9)


def test_band_between_resonances_is_negligible():
    p = baseline_params()
    mid = 0.5 * (p.omega1 + p.omega2)
    grid = np.union1d(sp.lobe_grid(p), np.linspace(mid - 1e8, mid + 1e8, 2001))
    s = sp.cross_spectrum(p, grid)
    peak_band = abs(sp.band_power(s, p.omega1, 2 * p.gamma1))
    assert abs(sp.band_power(s, mid, 2e8)) < 1e-6 * peak_band


@pytest.mark.parametrize("scale", [1.0, 3.0, 10.0])
def test_damping_scaling_at_fixed_pump(scale):
    # weak pump: peak density ~ lambda^2 / gamma^2, lobe-integrated rate ~ lambda^2 / gamma
    base = baseline_params(lam=100.0)
    p = baseline_params(lam=100.0, Q=1e5 / scale)
    g = sp.cross_spectrum(base, [base.omega2]).N_cd[0]
    assert sp.cross_spectrum(p, [p.omega2]).N_cd[0] == pytest.approx(g / scale**2, rel=1e-4)
    assert sp.lobe_power_analytic(p, 2) == pytest.approx(
        sp.lobe_power_analytic(base, 2) / scale, rel=1e-4)


def test_peak_is_invariant_at_fixed_eta():
    base = baseline_params()
    p = baseline_params(lam=10 * base.lam, Q=1e4)
    assert sp.cross_spectrum(p, [p.omega1]).N_cd[0] == pytest.approx(
        sp.cross_spectrum(base, [base.omega1]).N_cd[0], rel=1e-12)
