"""Strict JSON run configuration.

A config file is a JSON object with an optional ``scenario`` name, a
``parameters`` map and an optional ``tolerances`` map.  Parameter keys
carry their unit in the name (``L_m_um``, ``temperature_mK``) and are
converted to internal units on load.  Unknown keys are errors, which also
keeps dimensionless model parameters and SI circuit parameters from being
mixed in one scenario.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigError

REQUIRED = object()


@dataclass(frozen=True)
class Field:
    key: str
    kind: str                   # "float", "int", "str", "int_list"
    default: Any = REQUIRED
    scale: float = 1.0          # config unit -> internal unit
    choices: tuple = ()
    help: str = ""

    def convert(self, raw: Any) -> Any:
        k = self.key
        if self.kind == "float":
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise ConfigError(f"{k}: expected a number, got {raw!r}")
            if not math.isfinite(raw):
                raise ConfigError(f"{k}: must be finite")
            return float(raw) * self.scale
        if self.kind == "int":
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ConfigError(f"{k}: expected an integer, got {raw!r}")
            return raw
        if self.kind == "str":
            if not isinstance(raw, str):
                raise ConfigError(f"{k}: expected a string, got {raw!r}")
            if self.choices and raw not in self.choices:
                raise ConfigError(f"{k}: must be one of {', '.join(self.choices)}, got {raw!r}")
            return raw
        if self.kind == "int_list":
            if not isinstance(raw, list) or not raw or not all(
                isinstance(x, int) and not isinstance(x, bool) for x in raw
            ):
                raise ConfigError(f"{k}: expected a nonempty list of integers, got {raw!r}")
            return tuple(raw)
        raise AssertionError(self.kind)


def _f(key, default=REQUIRED, scale=1.0, help=""):
    return Field(key, "float", default, scale, help=help)


def _i(key, default=REQUIRED, help=""):
    return Field(key, "int", default, help=help)


# dimensionless detector model, frequencies in units of the cavity frequency
DETECTOR = (
    _f("xi", help="peak detector speed over c"),
    _f("omega_d0", help="bare detector frequency"),
    _f("lambda0", help="bare coupling"),
    _f("Omega_m", None, help="drive frequency; resonance when omitted"),
    _f("gamma", 0.005, help="damping rate"),
)

CIRCUIT = (
    _f("cap_per_len_F_per_m", 1e-10),
    _f("ind_per_len_H_per_m", None, help="calibrated to a 4.5 GHz bare cavity when omitted"),
    _f("fbar_cap_per_len_F_per_m", 2e-9),
    _f("L_c_mm", 11.0, 1e-3),
    _f("L_d_mm", 8.0, 1e-3),
    _f("L_m_um", 90.0, 1e-6),
    _f("fbar_thickness_nm", 500.0, 1e-9),
    _f("drive_amplitude_pm", 10.0, 1e-12),
    _f("sound_speed_m_per_s", 1e4),
    Field("geometry", "str", "aligned", choices=("aligned", "opposed")),
    _i("n_modes", 2),
)

MEASUREMENT = (
    _f("f1_GHz", 3.8, 2 * math.pi * 1e9),
    _f("f2_GHz", 5.7, 2 * math.pi * 1e9),
    _f("lambda_per_s", 24.5e3),
    _f("Q", 1e5),
    _f("cavity_fraction_1", 0.5),
    _f("cavity_fraction_2", 0.5),
    _f("gamma_c1_per_s", None),
    _f("gamma_d1_per_s", None),
    _f("gamma_c2_per_s", None),
    _f("gamma_d2_per_s", None),
    _f("temperature_mK", 0.0, 1e-3),
    _f("Z_T_ohm", 50.0),
    _f("pump_offset_per_s", 0.0, help="Omega_m - omega1 - omega2"),
)

SCHEMAS: dict[str, tuple[Field, ...]] = {
    "rwa-coeffs": DETECTOR + (_i("k_max", 25), _i("n_max", 40)),
    "evolve": DETECTOR + (
        _f("t_end", None, help="defaults to 10/gamma"),
        _i("n_samples", 501),
        Field("model", "str", "both", choices=("full", "rwa", "both")),
    ),
    "steady-state": (
        _f("eta", None, help="RWA-only run at coupling ratio eta"),
        _f("xi", None), _f("omega_d0", None), _f("lambda0", None),
        _f("Omega_m", None), _f("gamma", 0.005),
    ),
    "entanglement-sweep": (_f("eta_min", 0.0), _f("eta_max", 0.49), _i("n_points", 50)),
    "many-detectors": (_f("eta", 0.1), Field("N", "int_list", (1, 2, 4, 16))),
    "circuit-modes": CIRCUIT + (_i("n_samples", 401),),
    "coupling-sweep": CIRCUIT + (_f("L_m_min_um", 5.0, 1e-6), _f("L_m_max_um", 150.0, 1e-6),
                                 _i("n_points", 30)),
    "spectrum": MEASUREMENT + (_i("points_per_lobe", 4001), _f("span_gamma", 10.0)),
    "squeezing": MEASUREMENT + (_i("n_theta", 181),),
}

TOLERANCES = (
    _f("ode_tol", 1e-9),
    _f("floquet_tol", 1e-12),
)

SCENARIOS = tuple(SCHEMAS) + ("reproduce-figure", "validate")


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    parameters: dict[str, Any]
    tolerances: dict[str, float]
    given: frozenset[str]
    echo: dict[str, Any]          # resolved values in config units


def _resolve(fields, raw: dict, section: str) -> tuple[dict, dict]:
    known = {f.key: f for f in fields}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(
            f"{section}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(known)}"
        )
    out, echo = {}, {}
    for f in fields:
        if f.key in raw:
            out[f.key] = f.convert(raw[f.key])
            echo[f.key] = raw[f.key]
        elif f.default is REQUIRED:
            raise ConfigError(f"{section}.{f.key}: required field is missing")
        else:
            out[f.key] = f.default if f.default is None or f.kind != "float" else f.default * f.scale
            echo[f.key] = list(f.default) if isinstance(f.default, tuple) else f.default
    return out, echo


def build_config(scenario: str, data: dict | None = None) -> RunConfig:
    """Validate a parsed JSON object for ``scenario``."""
    if scenario not in SCHEMAS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCHEMAS)}")
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    extra = sorted(set(data) - {"scenario", "parameters", "tolerances"})
    if extra:
        raise ConfigError(f"unknown top-level key(s) {', '.join(extra)}")
    if data.get("scenario", scenario) != scenario:
        raise ConfigError(f"config is for scenario {data['scenario']!r}, not {scenario!r}")
    params = data.get("parameters", {})
    tols = data.get("tolerances", {})
    if not isinstance(params, dict) or not isinstance(tols, dict):
        raise ConfigError("parameters and tolerances must be JSON objects")
    p, echo = _resolve(SCHEMAS[scenario], params, "parameters")
    t, techo = _resolve(TOLERANCES, tols, "tolerances")
    for key in ("ode_tol", "floquet_tol"):
        if not 1e-12 <= t[key] <= 1e-4:
            raise ConfigError(f"tolerances.{key}: must lie in [1e-12, 1e-4], got {t[key]:g}")
    return RunConfig(scenario, p, t, frozenset(params), {**echo, **techo})


def default_tolerances() -> dict[str, float]:
    return _resolve(TOLERANCES, {}, "tolerances")[0]


def load_json(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        return json.loads(text, parse_constant=lambda c: _reject_constant(c))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def _reject_constant(c):
    raise ConfigError(f"non-finite JSON constant {c} is not allowed")
