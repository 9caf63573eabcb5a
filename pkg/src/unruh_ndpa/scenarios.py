"""Scenario runners behind the command line.

Each runner takes a resolved :class:`~unruh_ndpa.config.RunConfig` and
returns tables plus a summary; nothing here touches the filesystem.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.constants import k as k_B

from . import circuit as cz
from . import gaussian as gs
from . import langevin as lv
from . import rwa
from . import spectra as sp
from .config import RunConfig, build_config
from .errors import ConfigError, InstabilityError

FIG2 = dict(xi=0.8, omega_d0=0.8, lambda0=0.01)
FIG2_ETA = {"fig2a": 0.40, "fig2b": 0.48}
FIG3_FULL_ETA = (0.1, 0.2, 0.3, 0.4, 0.45)
FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "fig4", "fig5", "fig6")
ETA_MARGIN = 0.05


@dataclass
class Table:
    name: str
    columns: list[tuple[str, str]]      # (name, unit)
    rows: list[list[Any]]


@dataclass
class ScenarioResult:
    tables: list[Table]
    summary: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _columns_to_rows(*cols) -> list[list[Any]]:
    return [list(r) for r in zip(*cols)]


# --- parameter builders ---------------------------------------------------

def detector_params(p: dict, gamma: float | None = None) -> rwa.DetectorParams:
    return rwa.DetectorParams(
        p["xi"], p["omega_d0"], p["lambda0"], p.get("Omega_m"),
        p["gamma"] if gamma is None else gamma,
    )


def circuit_spec(p: dict, L_m: float | None = None) -> cz.CircuitSpec:
    ind = p["ind_per_len_H_per_m"]
    if ind is None:
        ind = cz.calibrated_inductance(p["cap_per_len_F_per_m"], p["L_c_mm"])
    return cz.CircuitSpec(
        cap_per_len=p["cap_per_len_F_per_m"],
        ind_per_len=ind,
        fbar_cap_per_len=p["fbar_cap_per_len_F_per_m"],
        L_c=p["L_c_mm"],
        L_d=p["L_d_mm"],
        L_m=p["L_m_um"] if L_m is None else L_m,
        fbar_thickness=p["fbar_thickness_nm"],
        drive_amplitude=p["drive_amplitude_pm"],
        sound_speed=p["sound_speed_m_per_s"],
        geometry=p["geometry"],
    )


_SPLITS = ("gamma_c1_per_s", "gamma_d1_per_s", "gamma_c2_per_s", "gamma_d2_per_s")


def measurement_params(p: dict) -> sp.MeasurementParams:
    w1, w2 = p["f1_GHz"], p["f2_GHz"]
    common = dict(temperature=p["temperature_mK"], Z_T=p["Z_T_ohm"],
                  Omega_m=w1 + w2 + p["pump_offset_per_s"])
    given = [k for k in _SPLITS if p[k] is not None]
    if given:
        missing = [k for k in _SPLITS if p[k] is None]
        if missing:
            raise ConfigError(f"parameters: explicit port rates need all four; missing {', '.join(missing)}")
        return sp.MeasurementParams(w1, w2, p["lambda_per_s"], *(p[k] for k in _SPLITS), **common)
    return sp.MeasurementParams.from_quality(
        w1, w2, p["lambda_per_s"], p["Q"], (p["cavity_fraction_1"], p["cavity_fraction_2"]), **common
    )


def _t_eff(n: float) -> float:
    return gs.effective_temperature(n) if n > 0 else 0.0


def _eta_warning(eta: float, eta_crit: float = 0.5) -> str | None:
    if eta >= eta_crit:
        return f"η={eta:.2f} at or beyond instability threshold {eta_crit:.4g}"
    if eta_crit - eta <= ETA_MARGIN * eta_crit:
        return f"η={eta:.2f} within 5% of instability threshold"
    return None


# --- dimensionless detector scenarios -------------------------------------

def _rwa_coeffs(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    d = detector_params(p)
    c = rwa.renormalized_coupling(d)
    exact = rwa.resonant_coupling_exact(d)
    checks = rwa.single_mode_validity(d, p["k_max"], p["n_max"], omega_d=c.omega_d)
    first = rwa.first_near_resonance(checks)
    coeffs = Table("coefficients",
                   [("D0", "1"), ("D2", "1"), ("C1", "1"), ("B", "1"), ("omega_d", "omega_c"),
                    ("lambda", "omega_c"), ("lambda_exact_phase", "omega_c"), ("Omega_m", "omega_c")],
                   [[c.D0, c.D2, c.C1, c.B, c.omega_d, c.lambda_, exact, c.Omega_m]])
    validity = Table("validity", [("k", "1"), ("n", "1"), ("detuning", "omega_c"), ("flagged", "1")],
                     [[r.k, r.n, r.detuning, int(r.flagged)] for r in checks])
    summary = {"lambda": c.lambda_, "omega_d": c.omega_d, "eta": c.lambda_ / d.gamma,
               "first_near_resonance": None if first is None else [first.k, first.n]}
    return ScenarioResult([coeffs, validity], summary)


def _check_states(moments: np.ndarray) -> None:
    for v in moments:
        gs.moments_to_covariance(gs.MomentVector(v))


def evolve_table(d: rwa.DetectorParams, t_end: float, n_samples: int, model: str,
                 tol: float, name: str = "trajectory") -> ScenarioResult:
    c = rwa.renormalized_coupling(d)
    lam, gamma = c.lambda_, d.gamma
    eta = lam / gamma
    t = np.linspace(0.0, t_end, n_samples)
    cols: list[tuple[str, str]] = [("t", "1/omega_c")]
    data = [t]
    if model in ("full", "both"):
        ode = lv.full_moment_ode(lv.detector_model_hamiltonian(d), gamma)
        traj = lv.propagate_periodic(lv.floquet_propagator(ode, tol), gs.MomentVector.vacuum(), t)
        _check_states(traj.moments)
        cols += [("n_a_full", "quanta"), ("n_b_full", "quanta")]
        data += [traj.moments[:, gs.ADA].real, traj.moments[:, gs.BDB].real]
    if model in ("rwa", "both"):
        cf = lv.closed_form_moments(lam, gamma, t)
        _check_states(cf)
        cols += [("n_a_rwa", "quanta"), ("n_b_rwa", "quanta")]
        data += [cf[:, gs.ADA].real, cf[:, gs.BDB].real]
    res = ScenarioResult([], {"lambda": lam, "gamma": gamma, "eta": eta, "t_end": t_end})
    if eta < 0.5:
        n_ss = lv.ndpa_steady_state(eta).n_a
        cols.append(("n_steady", "quanta"))
        data.append(np.full_like(t, n_ss))
        res.summary["n_steady"] = n_ss
    else:
        res.warnings.append(_eta_warning(eta))
    res.tables.append(Table(name, cols, _columns_to_rows(*data)))
    return res


def _evolve(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    d = detector_params(p)
    t_end = p["t_end"] if p["t_end"] is not None else 10.0 / d.gamma
    if not t_end > 0 or p["n_samples"] < 2:
        raise ConfigError("parameters: t_end must be positive and n_samples at least 2")
    return evolve_table(d, t_end, p["n_samples"], p["model"], cfg.tolerances["floquet_tol"])


_STEADY_COLS = [("model", "-"), ("eta", "1"), ("n_a", "quanta"), ("n_b", "quanta"),
                ("abs_ab", "1"), ("E_N", "ebit"), ("T_eff_a", "hbar omega_c / k_B")]


def _steady_row(model: str, eta: float, v: gs.MomentVector) -> list:
    return [model, eta, v.n_a, v.n_b, abs(v.entries[gs.AB]),
            gs.log_negativity_from_moments(v), _t_eff(v.n_a)]


def full_steady_row(d: rwa.DetectorParams, eta: float, tol: float, n_phase: int = 64):
    """Period-averaged steady row of the full model.

    Occupations come from the averaged moments; ``|<ab>|`` and ``E_N`` are
    averaged over instantaneous states, since lab-frame pair correlations
    rotate and cancel in the moment average.
    """
    ode = lv.full_moment_ode(lv.detector_model_hamiltonian(d), d.gamma)
    prop = lv.floquet_propagator(ode, tol)
    ps = lv.periodic_steady_state(ode, tol, prop=prop)
    ab, en = 0.0, 0.0
    for tau in np.arange(n_phase) * prop.period / n_phase:
        phi, c = prop.sample(tau)
        v = gs.MomentVector(phi @ ps.stroboscopic.entries + c)
        ab += abs(v.entries[gs.AB])
        en += gs.log_negativity_from_moments(v)
    m = ps.mean
    row = ["full_period_mean", eta, m.n_a, m.n_b, ab / n_phase, en / n_phase, _t_eff(m.n_a)]
    return row, ps


def _steady_state(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    det_keys = ("xi", "omega_d0", "lambda0")
    have = [k for k in det_keys if p[k] is not None]
    if p["eta"] is not None:
        if have or "Omega_m" in cfg.given or "gamma" in cfg.given:
            raise ConfigError("parameters: give either eta or the detector model, not both")
        v = lv.ndpa_steady_state(p["eta"])
        return ScenarioResult([Table("steady_state", _STEADY_COLS, [_steady_row("rwa", p["eta"], v)])])
    if len(have) != len(det_keys):
        missing = [k for k in det_keys if p[k] is None]
        raise ConfigError(f"parameters.{missing[0]}: required field is missing (or give eta)")
    d = detector_params(p)
    lam = rwa.renormalized_coupling(d).lambda_
    eta = lam / d.gamma
    row, ps = full_steady_row(d, eta, cfg.tolerances["floquet_tol"])
    rows = [_steady_row("rwa", eta, lv.ndpa_steady_state(eta)), row]
    return ScenarioResult([Table("steady_state", _STEADY_COLS, rows)],
                          {"floquet_exponent": ps.floquet_exponent})


def sweep_rows(etas: np.ndarray) -> list[list]:
    rows = []
    for eta in etas:
        v = lv.ndpa_steady_state(float(eta))
        rows.append([float(eta), v.n_a, gs.log_negativity_from_moments(v),
                     math.log2(1 + 2 * eta), _t_eff(v.n_a)])
    return rows


def _entanglement_sweep(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    if p["n_points"] < 2 or not 0 <= p["eta_min"] < p["eta_max"]:
        raise ConfigError("parameters: need 0 <= eta_min < eta_max and n_points >= 2")
    etas = np.linspace(p["eta_min"], p["eta_max"], p["n_points"])
    cols = [("eta", "1"), ("n_a", "quanta"), ("E_N", "ebit"), ("E_N_closed_form", "ebit"),
            ("T_eff_a", "hbar omega_c / k_B")]
    return ScenarioResult([Table("sweep", cols, sweep_rows(etas))])


def _many_detectors(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    eta = p["eta"]
    rows = []
    for n in p["N"]:
        n_formula, eta_crit = lv.many_detector_scaling(eta, 1.0, n)
        n_ode = lv.steady_state(lv.rwa_moment_ode(math.sqrt(n) * eta, 1.0)).n_a
        rows.append([n, eta, math.sqrt(n) * eta, n_formula, n_ode, eta_crit])
    cols = [("N", "1"), ("eta", "1"), ("eta_collective", "1"), ("n_a_formula", "quanta"),
            ("n_a_collective_ode", "quanta"), ("eta_crit", "1")]
    return ScenarioResult([Table("many_detectors", cols, rows)])


# --- circuit scenarios ----------------------------------------------------

def _modes_and_couplings(spec: cz.CircuitSpec, n_modes: int):
    modes = cz.solve_normal_modes(spec, n_modes)
    return modes, cz.coupling_matrix(spec, modes)


def _circuit_modes(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    if p["n_modes"] < 1:
        raise ConfigError("parameters.n_modes: must be at least 1")
    spec = circuit_spec(p)
    modes, lam = _modes_and_couplings(spec, p["n_modes"])
    mode_tab = Table("modes", [("index", "1"), ("f", "GHz"), ("C_n", "F")],
                     [[m.index, m.omega / (2 * math.pi * 1e9), m.C_n] for m in modes])
    coup = Table("coupling", [("n", "1"), ("n_prime", "1"), ("lambda", "1")],
                 [[modes[i].index, modes[j].index, lam[i, j]]
                  for i in range(len(modes)) for j in range(i, len(modes))])
    summary = {"fbar_frequency_GHz": cz.fbar_frequency(spec) / (2 * math.pi * 1e9),
               "wave_speed_m_per_s": spec.wave_speed}
    if len(modes) >= 2:
        pc = cz.pump_coupling(spec, lam[0, 1], modes[0].omega, modes[1].omega)
        summary.update(pump_lambda_per_s=pc.lam, pump_detuning_per_s=pc.detuning)
    return ScenarioResult([mode_tab, coup, profile_table(modes, p["n_samples"], "profiles")], summary)


def profile_table(modes, n_points: int, name: str) -> Table:
    """Mode shapes on one axis: cavity from its free end, then the detector beyond the overlap."""
    spec = modes[0].spec
    xc = np.linspace(0.0, spec.L_c, n_points)
    xd = np.linspace(0.0, spec.L_d, n_points)
    # position of detector coordinate x_d on the joint axis
    if spec.geometry == "opposed":
        x_joint = spec.L_c - spec.L_m + xd
    else:
        x_joint = spec.L_c - spec.L_m + (spec.L_d - xd)
    rows = []
    pc = [m.phi_c(xc) for m in modes]
    pd = [m.phi_d(xd) for m in modes]
    for i, x in enumerate(xc):
        rows.append(["cavity", x] + [v[i] for v in pc])
    for i in np.argsort(x_joint, kind="stable"):
        rows.append(["detector", x_joint[i]] + [v[i] for v in pd])
    cols = [("conductor", "-"), ("x", "m")] + [(f"phi_{m.index}", "Wb") for m in modes]
    return Table(name, cols, rows)


def _sweep_point(args) -> list[float]:
    p, L_m = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = circuit_spec(p, L_m)
    modes, lam = _modes_and_couplings(spec, 2)
    pc = cz.pump_coupling(spec, lam[0, 1], modes[0].omega, modes[1].omega)
    return [L_m * 1e6, modes[0].omega / (2 * math.pi * 1e9), modes[1].omega / (2 * math.pi * 1e9),
            lam[0, 0], lam[0, 1], lam[1, 1], pc.lam]


def coupling_sweep_table(p: dict, L_values: np.ndarray, threads: int, name: str = "sweep") -> Table:
    jobs = [(p, float(L)) for L in L_values]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(_sweep_point, jobs))     # map keeps submission order
    else:
        rows = [_sweep_point(j) for j in jobs]
    cols = [("L_m", "um"), ("f1", "GHz"), ("f2", "GHz"), ("lambda_11", "1"),
            ("lambda_12", "1"), ("lambda_22", "1"), ("pump_lambda", "1/s")]
    return Table(name, cols, rows)


def _coupling_sweep(cfg: RunConfig, threads: int = 1) -> ScenarioResult:
    p = cfg.parameters
    if p["n_points"] < 2 or not 0 < p["L_m_min_um"] < p["L_m_max_um"]:
        raise ConfigError("parameters: need 0 < L_m_min_um < L_m_max_um and n_points >= 2")
    circuit_spec(p)     # validate the base geometry up front
    L = np.linspace(p["L_m_min_um"], p["L_m_max_um"], p["n_points"])
    return ScenarioResult([coupling_sweep_table(p, L, threads)])


# --- measurement scenarios ------------------------------------------------

def spectrum_result(m: sp.MeasurementParams, points: int, span: float, name="spectrum") -> ScenarioResult:
    if points < 11 or not span > 0:
        raise ConfigError("parameters: points_per_lobe must be >= 11 and span_gamma positive")
    s = sp.cross_spectrum(m, sp.lobe_grid(m, points, span))
    rows = _columns_to_rows(s.omega / (2 * math.pi), s.S_cd / k_B * 1e3, s.N_cd)
    table = Table(name, [("omega_Hz", "Hz"), ("S_cd_over_kB_mK", "mK"), ("N_cd_per_Hz", "1/Hz")], rows)
    summary: dict[str, Any] = {"fwhm_analytic_per_s": sp.lobe_fwhm_analytic(m)}
    for n, (w, g) in enumerate(((m.omega1, m.gamma1), (m.omega2, m.gamma2)), 1):
        i = int(np.argmin(np.abs(s.omega - w)))
        summary[f"N_cd_at_f{n}"] = float(s.N_cd[i])
        summary[f"S_cd_over_kB_mK_at_f{n}"] = float(s.S_cd[i] / k_B * 1e3)
        summary[f"fwhm{n}_per_s"] = sp.lobe_fwhm(s, w)
        summary[f"fwhm{n}_over_gamma{n}"] = sp.lobe_fwhm(s, w) / g
        summary[f"lobe{n}_power_W"] = sp.band_power(s, w, 2 * span * g * (1 - 1e-9))
    return ScenarioResult([table], summary)


def _spectrum(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    return spectrum_result(measurement_params(p), p["points_per_lobe"], p["span_gamma"])


def _squeezing(cfg: RunConfig) -> ScenarioResult:
    p = cfg.parameters
    m = measurement_params(p)
    if p["n_theta"] < 2:
        raise ConfigError("parameters.n_theta: must be at least 2")
    theta = np.linspace(0.0, 2 * math.pi, p["n_theta"])
    res = ScenarioResult([])
    cols = [("theta", "rad"), ("dX1_sq", "1"), ("dX2_sq", "1")]
    data = [theta, *np.array([sp.squeezing_variances(m, t) for t in theta]).T]
    thr, t_thr = sp.squeezing_threshold(m)
    res.summary.update(nbar_threshold=thr, T_threshold_mK=t_thr * 1e3)
    try:
        exact = np.array([sp.squeezing_variances(m, t, exact=True) for t in theta]).T
    except InstabilityError as exc:
        res.warnings.append(f"exact variances unavailable: {exc}")
    else:
        cols += [("dX1_sq_exact", "1"), ("dX2_sq_exact", "1")]
        data += list(exact)
        thr_x, t_x = sp.squeezing_threshold(m, exact=True)
        res.summary.update(nbar_threshold_exact=thr_x, T_threshold_exact_mK=t_x * 1e3)
    res.tables.append(Table("variances", cols, _columns_to_rows(*data)))
    return res


# --- figures ----------------------------------------------------------------

def _fig2_params(eta: float) -> rwa.DetectorParams:
    lam = rwa.renormalized_coupling(rwa.DetectorParams(**FIG2)).lambda_
    return rwa.DetectorParams(**FIG2, gamma=lam / eta)


def reproduce_figure(target: str, tol: dict, threads: int = 1) -> ScenarioResult:
    res = _figure(target, tol, threads)
    if target in FIG2_ETA:
        params = dict(FIG2, eta=FIG2_ETA[target])
    elif target in ("fig3a", "fig3b"):
        params = dict(FIG2, eta_grid=[0.0, 0.49, 50], eta_full=list(FIG3_FULL_ETA))
    elif target == "fig4":
        params = {k: v for k, v in build_config("coupling-sweep").echo.items() if k != "L_m_um"}
    elif target == "fig5":
        params = build_config("circuit-modes").echo
    else:
        params = build_config("spectrum").echo
    res.summary["figure_parameters"] = params
    return res


def _figure(target: str, tol: dict, threads: int) -> ScenarioResult:
    if target in FIG2_ETA:
        eta = FIG2_ETA[target]
        d = _fig2_params(eta)
        # five slowest relaxation times, gamma (1 - 2 eta) / 2 each
        t_end = 10.0 / (d.gamma * (1 - 2 * eta))
        return evolve_table(d, t_end, 801, "both", tol["floquet_tol"])
    if target in ("fig3a", "fig3b"):
        etas = np.linspace(0.0, 0.49, 50)
        res = ScenarioResult([Table("rwa",
                                    [("eta", "1"), ("n_a", "quanta"), ("E_N", "ebit"),
                                     ("E_N_closed_form", "ebit"), ("T_eff_a", "hbar omega_c / k_B")],
                                    sweep_rows(etas))])
        rows = []
        for eta in FIG3_FULL_ETA:
            rows.append(full_steady_row(_fig2_params(eta), eta, tol["floquet_tol"])[0])
        res.tables.append(Table("full", _STEADY_COLS, rows))
        return res
    if target == "fig4":
        p = build_config("coupling-sweep").parameters
        return ScenarioResult([coupling_sweep_table(p, np.linspace(5e-6, 150e-6, 30), threads)])
    if target == "fig5":
        p = build_config("circuit-modes").parameters
        modes = cz.solve_normal_modes(circuit_spec(p), 2)
        return ScenarioResult([profile_table(modes, 401, "profiles")])
    if target == "fig6":
        p = build_config("spectrum").parameters
        return spectrum_result(measurement_params(p), 4001, 10.0)
    raise ConfigError(f"unknown figure {target!r}; choose from {', '.join(FIGURES)}")


RUNNERS: dict[str, Callable[[RunConfig], ScenarioResult]] = {
    "rwa-coeffs": _rwa_coeffs,
    "evolve": _evolve,
    "steady-state": _steady_state,
    "entanglement-sweep": _entanglement_sweep,
    "many-detectors": _many_detectors,
    "circuit-modes": _circuit_modes,
    "coupling-sweep": _coupling_sweep,
    "spectrum": _spectrum,
    "squeezing": _squeezing,
}


def run_scenario(cfg: RunConfig, threads: int = 1) -> ScenarioResult:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if cfg.scenario == "coupling-sweep":
            res = _coupling_sweep(cfg, threads)
        else:
            res = RUNNERS[cfg.scenario](cfg)
    res.warnings.extend(_unique(str(w.message) for w in caught))
    return res


def _unique(items) -> list[str]:
    out: list[str] = []
    for i in items:
        if i not in out:
            out.append(i)
    return out


# --- dry-run validation -----------------------------------------------------

def validate(scenario: str, data: dict | None) -> dict[str, Any]:
    """Dry-run report: resolved parameters, stability pre-checks and warnings."""
    report: dict[str, Any] = {"scenario": scenario, "resolved": None, "stability": {},
                              "validity": [], "warnings": [], "errors": []}
    try:
        cfg = build_config(scenario, data)
    except ConfigError as exc:
        report["errors"].append(str(exc))
        return report
    report["resolved"] = cfg.echo
    p = cfg.parameters
    warn = report["warnings"]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            _prechecks(cfg, p, report)
        except (ValueError, ConfigError, InstabilityError) as exc:
            report["errors"].append(str(exc))
    for w in _unique(str(c.message) for c in caught):
        if w not in warn:
            warn.append(w)
    return report


def _prechecks(cfg: RunConfig, p: dict, report: dict) -> None:
    warn, stab = report["warnings"], report["stability"]

    def eta_check(eta, crit=0.5):
        stab.update(eta=eta, eta_crit=crit)
        msg = _eta_warning(eta, crit)
        if msg:
            warn.append(msg)

    s = cfg.scenario
    if s in ("rwa-coeffs", "evolve") or (s == "steady-state" and p["eta"] is None):
        if s == "steady-state" and p["xi"] is None:
            raise ConfigError("parameters.xi: required field is missing (or give eta)")
        d = detector_params(p)
        c = rwa.renormalized_coupling(d)
        eta_check(c.lambda_ / d.gamma)
        checks = rwa.single_mode_validity(d, omega_d=c.omega_d)
        flagged = [r for r in checks if r.flagged]
        report["validity"] = [
            {"k": r.k, "n": r.n, "detuning": r.detuning} for r in flagged
        ]
        for r in flagged:
            warn.append(f"harmonic k={r.k} is within {r.detuning:.3g} of pair resonance "
                        f"with cavity mode n={r.n}")
    elif s == "steady-state":
        eta_check(p["eta"])
    elif s == "entanglement-sweep":
        eta_check(p["eta_max"])
    elif s == "many-detectors":
        for n in p["N"]:
            crit = 0.5 / math.sqrt(n)
            msg = _eta_warning(p["eta"], crit)
            if msg:
                warn.append(f"N={n}: {msg}")
        stab.update(eta=p["eta"], eta_crit_min=0.5 / math.sqrt(max(p["N"])))
    elif s in ("circuit-modes", "coupling-sweep"):
        spec = circuit_spec(p)
        stab["A_over_D"] = spec.drive_amplitude / spec.fbar_thickness
    elif s in ("spectrum", "squeezing"):
        m = measurement_params(p)
        ratio = m.lam**2 / (m.gamma1 * m.gamma2)
        stab.update(lambda_sq_over_gamma1_gamma2=ratio, exact_instability_ratio=4 * ratio)
        if ratio >= 1:
            warn.append(f"λ²/(γ₁γ₂)={ratio:.3g} at or beyond instability")
        elif 4 * ratio >= 1 - ETA_MARGIN:
            warn.append(f"4λ²/(γ₁γ₂)={4 * ratio:.3g} within 5% of the pair-instability threshold")
