"""Command-line entry point.

    unruh-ndpa <scenario> [target] [--config PATH] [--out DIR] [--threads N]

Exit codes: 0 success, 2 configuration error, 3 physics error
(instability, non-physical state), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import SCENARIOS, build_config, default_tolerances, load_json
from .errors import ConfigError, NumericalError, PhysicsError
from .scenarios import FIGURES, ScenarioResult, Table, reproduce_figure, run_scenario, validate

OUT_ENV = "UNRUH_NDPA_OUT"
DEFAULT_OUT = "unruh-ndpa-out"

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_NUMERICAL = 0, 2, 3, 4


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12e")
    return str(v)


def write_table(path: Path, table: Table, title: str, parameters: dict | None = None) -> None:
    lines = [f"# {title} table={table.name}"]
    if parameters is not None:
        lines.append("# parameters " + json.dumps(_jsonable(parameters), sort_keys=True, ensure_ascii=False))
    lines += [
             "# " + ", ".join(f"{n} [{u}]" for n, u in table.columns),
             ",".join(n for n, _ in table.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    path.write_text("\n".join(lines) + "\n")


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_outputs(out: Path, stem: str, title: str, res: ScenarioResult, meta: dict) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for t in res.tables:
        path = out / f"{stem}_{t.name}.csv"
        write_table(path, t, title, meta.get("parameters"))
        files.append(path)
    sidecar = dict(meta, summary=res.summary, warnings=res.warnings,
                   outputs=[p.name for p in files])
    side = out / f"{stem}.json"
    side.write_text(json.dumps(_jsonable(sidecar), indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return files + [side]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="unruh-ndpa",
        description="Vacuum photon-pair production by an oscillating detector: "
                    "moment dynamics, circuit modes and output spectra.",
    )
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("target", nargs="?",
                    help=f"figure for reproduce-figure ({', '.join(FIGURES)}); "
                         "scenario to check for validate")
    ap.add_argument("--config", type=Path, help="JSON config file")
    ap.add_argument("--out", type=Path,
                    help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _execute(args) -> int:
    data = load_json(args.config) if args.config else None
    if args.scenario == "validate":
        target = args.target or (data or {}).get("scenario")
        if not target:
            raise ConfigError("validate needs a scenario name (positional or in the config)")
        print(json.dumps(_jsonable(validate(target, data)), indent=2, sort_keys=True, ensure_ascii=False))
        return EXIT_OK
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    out = args.out or Path(os.environ.get(OUT_ENV, DEFAULT_OUT))
    meta: dict[str, Any] = {"tool": "unruh-ndpa", "version": __version__, "scenario": args.scenario}
    start = time.perf_counter()
    if args.scenario == "reproduce-figure":
        if args.target not in FIGURES:
            raise ConfigError(f"reproduce-figure needs a target from {', '.join(FIGURES)}")
        if data:
            raise ConfigError("reproduce-figure uses fixed figure parameters; drop --config")
        tol = default_tolerances()
        res = reproduce_figure(args.target, tol, args.threads)
        stem = args.target
        meta.update(target=args.target, parameters=res.summary.pop("figure_parameters"),
                    tolerances=tol)
    else:
        if args.target:
            raise ConfigError(f"scenario {args.scenario} takes no positional target")
        cfg = build_config(args.scenario, data)
        res = run_scenario(cfg, args.threads)
        stem = args.scenario
        meta.update(parameters=cfg.echo)
    meta["wall_time_s"] = time.perf_counter() - start
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    files = write_outputs(out, stem, f"unruh-ndpa {__version__} {args.scenario} {stem}", res, meta)
    for f in files:
        print(f)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _execute(args)
    except PhysicsError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
