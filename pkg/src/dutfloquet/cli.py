"""Command-line front end: parameter sweeps, comparisons and figure presets.

All frequencies on the command line are ratios to the modulation frequency
(``omega = 1``).  Output is CSV (17 significant digits, LF line endings) plus
a JSON sidecar holding the fully resolved configuration, so that
``dutfloquet rerun out.csv.json`` regenerates ``out.csv`` byte for byte.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import os
import platform
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .dut import dut_two_level
from .errors import ConsistencyError, DegenerateChannelError, NumericFailure
from .floquet import DEFAULT_NC, FloquetOptions, folded_quasienergies, options_for, populations, solve
from .gvv import DEFAULT_WINDOW, Kind, coupling_table, gvv_shifts, nearest_resonances, \
    rho11_analytic, rho11_two_level, table_size
from .model import DriveSpec2L, DriveSpec3L, build_hamiltonian_3l
from .oracle import propagate_fourier, propagate_square_wave

METHODS = ("floquet", "grwa", "gvv", "oracle")
SWEEPS = ("delta", "omega_c", "epsilon_0", "two_d_map")
SYSTEMS = ("two_level", "three_level")
METHOD_VERSIONS = {"floquet": "dense-eigh/1", "grwa": "lorentzian/1", "gvv": "lorentzian+3x3/1",
                   "oracle": "piecewise-exact/1", "coefficients": "nested-bessel/1"}
FAILURES = (NumericFailure, DegenerateChannelError, ConsistencyError, np.linalg.LinAlgError)

BASE_DEFAULTS = {
    "system": "three_level", "sweep": "delta", "min": -4.0, "max": 4.0, "steps": 161,
    "min2": 0.0, "max2": 12.0, "steps2": 49,
    "omega_p": 0.12, "omega_c": 3.0, "delta": 0.0, "epsilon0": 0.0, "amplitude": 5.0,
    "nc": None, "qmax": 20, "window": DEFAULT_WINDOW, "methods": ["floquet"],
    "jobs": None, "output": None, "strict": False, "quasienergies": False,
    "orders": [-2, -1, 0, 1, 2], "oracle_periods": 2000,
}

COMMAND_DEFAULTS = {
    "sweep": {},
    "map2d": {"sweep": "two_d_map", "steps": 81},
    "quasienergies": {"quasienergies": True},
    "coefficients": {"sweep": "omega_c", "min": 0.0, "max": 12.0, "steps": 121},
    "two-level": {"system": "two_level", "sweep": "epsilon_0", "min": 0.0, "max": 4.0,
                  "steps": 201, "delta": 0.1, "methods": ["floquet", "grwa"]},
    "compare": {"methods": ["floquet", "grwa", "gvv"]},
}

PRESETS = {
    "fig2": ("coefficients", {"omega_p": 0.12, "min": 0.0, "max": 12.0, "steps": 241}),
    "fig3": ("coefficients", {"omega_p": 0.12, "min": 0.0, "max": 12.0, "steps": 241}),
    "fig4": ("map2d", {"omega_p": 0.12, "min": -4.0, "max": 4.0, "steps": 161,
                       "min2": 0.0, "max2": 12.0, "steps2": 61}),
    "fig5": ("quasienergies", {"omega_p": 0.12, "omega_c": 3.0, "min": -4.0, "max": 4.0,
                               "steps": 801, "methods": ["floquet"]}),
    "fig6": ("compare", {"omega_p": 0.12, "omega_c": 3.0, "steps": 401}),
    "fig6b": ("compare", {"omega_p": 0.12, "omega_c": 9.5, "steps": 401}),
    "fig7": ("compare", {"omega_p": 0.12, "delta": 0.25, "sweep": "omega_c", "min": 0.0,
                         "max": 12.0, "steps": 241}),
    "fig8": ("compare", {"omega_p": 0.5, "omega_c": 3.0, "steps": 401}),
}
PRESETS["fig5a"] = PRESETS["fig5"]


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit status 2)."""


# ---------------------------------------------------------------------------
# configuration


def _parse_methods(value) -> list[str]:
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _parse_orders(value) -> list[int]:
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    return [int(v) for v in value]


_CASTS = {"min": float, "max": float, "min2": float, "max2": float, "omega_p": float,
          "omega_c": float, "delta": float, "epsilon0": float, "amplitude": float,
          "steps": int, "steps2": int, "qmax": int, "window": int, "jobs": int,
          "oracle_periods": int, "nc": int, "methods": _parse_methods, "orders": _parse_orders,
          "system": str, "sweep": str, "output": str,
          "strict": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes"),
          "quasienergies": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes")}


def _cast(key: str, value):
    if value is None:
        return None
    if key not in _CASTS:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        return _CASTS[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def read_config_file(path: str) -> tuple[str | None, dict]:
    """Flat key=value INI (any section) or a JSON sidecar; returns (command, settings)."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        cfg = data.get("config", data)
        command = cfg.get("command")
        return command, {k: _cast(k, v) for k, v in cfg.items() if k != "command"}
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    out, command = {}, None
    for section in parser.sections():
        for key, value in parser.items(section):
            key = key.replace("-", "_")
            if key == "command":
                command = value
            else:
                out[key] = _cast(key, value)
    return command, out


def resolve_config(command: str, file_settings: dict, flag_settings: dict) -> dict:
    """Defaults, then command defaults, then config file, then flags."""
    cfg = dict(BASE_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    cfg.update({k: v for k, v in file_settings.items() if v is not None})
    cfg.update({k: v for k, v in flag_settings.items() if v is not None})
    cfg["command"] = command
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    if cfg["system"] not in SYSTEMS:
        raise ConfigError(f"system must be one of {SYSTEMS}, got {cfg['system']!r}")
    if cfg["sweep"] not in SWEEPS:
        raise ConfigError(f"sweep must be one of {SWEEPS}, got {cfg['sweep']!r}")
    if cfg["command"] == "map2d" and cfg["sweep"] != "two_d_map":
        raise ConfigError("map2d sweeps the (delta, omega_c) plane; drop --sweep")
    for key in ("steps", "steps2"):
        if cfg[key] < 1:
            raise ConfigError(f"{key} must be >= 1, got {cfg[key]}")
    for lo, hi in (("min", "max"), ("min2", "max2")):
        if not cfg[lo] <= cfg[hi]:
            raise ConfigError(f"{lo} must not exceed {hi}")
    if not cfg["methods"]:
        raise ConfigError("at least one method is required")
    bad = [m for m in cfg["methods"] if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
    if cfg["system"] == "two_level":
        if "gvv" in cfg["methods"]:
            raise ConfigError("two-level system supports methods floquet, grwa, oracle")
        if cfg["sweep"] not in ("epsilon_0", "delta"):
            raise ConfigError("two-level sweeps run over epsilon_0 or delta")
    elif cfg["sweep"] == "epsilon_0":
        raise ConfigError("epsilon_0 sweeps need --system two_level")
    if cfg["command"] == "compare" and len(cfg["methods"]) < 2:
        raise ConfigError("compare needs at least two methods")
    if cfg["nc"] is not None and cfg["nc"] < 1:
        raise ConfigError("nc must be >= 1")
    if cfg["qmax"] < 1 or cfg["window"] < 0:
        raise ConfigError("qmax must be >= 1 and window >= 0")
    if cfg["jobs"] is not None and cfg["jobs"] < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg["omega_p"] < 0 or cfg["omega_c"] < 0:
        raise ConfigError("Rabi frequencies must be >= 0")
    if cfg["command"] == "coefficients" and (cfg["system"] != "three_level"
                                             or cfg["sweep"] != "omega_c"):
        raise ConfigError("coefficient tables sweep omega_c of the three-level system")


# ---------------------------------------------------------------------------
# evaluation


def grid(lo: float, hi: float, steps: int) -> np.ndarray:
    return np.array([lo]) if steps == 1 else np.linspace(lo, hi, steps)


def sweep_points(cfg: dict) -> list[tuple[float, ...]]:
    axis = grid(cfg["min"], cfg["max"], cfg["steps"])
    if cfg["sweep"] == "two_d_map":
        axis2 = grid(cfg["min2"], cfg["max2"], cfg["steps2"])
        return [(float(d), float(c)) for c in axis2 for d in axis]
    return [(float(v),) for v in axis]


def _spec3(cfg: dict, point) -> DriveSpec3L:
    values = {"omega_p": cfg["omega_p"], "omega_c": cfg["omega_c"], "delta": cfg["delta"]}
    if cfg["sweep"] == "two_d_map":
        values["delta"], values["omega_c"] = point
    else:
        values[cfg["sweep"]] = point[0]
    return DriveSpec3L.from_ratios(values["omega_p"], values["omega_c"], values["delta"],
                                   q_max=cfg["qmax"])


def _spec2(cfg: dict, point) -> DriveSpec2L:
    values = {"epsilon_0": cfg["epsilon0"], "delta": cfg["delta"]}
    values[cfg["sweep"]] = point[0]
    return DriveSpec2L(values["epsilon_0"], cfg["amplitude"], 1.0, values["delta"])


def param_columns(cfg: dict) -> list[str]:
    return ["delta", "omega_c"] if cfg["sweep"] == "two_d_map" else [cfg["sweep"]]


def value_columns(cfg: dict) -> list[str]:
    if cfg["command"] == "coefficients":
        cols = []
        for kind in ("OmegaP", "OmegaQ", "deltaP", "deltaQ", "deltaPQ"):
            cols += [f"{kind}_{k}" for k in cfg["orders"]]
        return cols
    dim = 2 if cfg["system"] == "two_level" else 3
    cols = []
    for method in dict.fromkeys(cfg["methods"]):
        if method in ("floquet", "oracle"):
            cols += [f"{method}_rho{s}{s}" for s in range(dim)]
        else:
            cols.append(f"{method}_rho11")
    if cfg["quasienergies"]:
        cols += [f"q{i}" for i in range(dim)]
    return cols


def _eval_coefficients(cfg: dict, point) -> dict:
    spec = _spec3(cfg, point)
    out = {}
    orders = cfg["orders"]
    reach = max(abs(k) for k in orders)
    table = coupling_table(spec, table_size(spec, reach, reach, cfg["window"]))
    for k in orders:
        out[f"OmegaP_{k}"] = table.p(k)
        out[f"OmegaQ_{k}"] = table.q(k)
    w = spec.omega
    for k in orders:
        # P branch at its resonance Delta = Omega_c/4 - k w, Q partner nearest
        at_p = DriveSpec3L(spec.omega_p, spec.omega_c, spec.omega_c / 4 - k * w, spec.tau, spec.q_max)
        _, m = nearest_resonances(at_p)
        sh = gvv_shifts(table, at_p, k, m)
        out[f"deltaP_{k}"] = sh.delta_P
        out[f"deltaPQ_{k}"] = sh.delta_PQ
        at_q = DriveSpec3L(spec.omega_p, spec.omega_c, -spec.omega_c / 4 - k * w, spec.tau, spec.q_max)
        n, _ = nearest_resonances(at_q)
        out[f"deltaQ_{k}"] = gvv_shifts(table, at_q, n, k).delta_Q
    return out


def _eval_three_level(cfg: dict, point) -> dict:
    spec = _spec3(cfg, point)
    out = {}
    spectrum = None
    for method in dict.fromkeys(cfg["methods"]):
        if method == "floquet":
            spectrum = solve(build_hamiltonian_3l(spec), options_for(spec, cfg["nc"]))
            rho = populations(spectrum, 0)
        elif method == "oracle":
            rho = propagate_square_wave(spec, n_periods=cfg["oracle_periods"]).long_time_average
        else:
            out[f"{method}_rho11"] = rho11_analytic(spec, Kind(method.upper()), cfg["window"])
            continue
        for s in range(3):
            out[f"{method}_rho{s}{s}"] = float(rho[s])
    if cfg["quasienergies"]:
        if spectrum is None:
            spectrum = solve(build_hamiltonian_3l(spec), options_for(spec, cfg["nc"]))
        for i, q in enumerate(np.sort(folded_quasienergies(spectrum))):
            out[f"q{i}"] = float(q)
    return out


def _eval_two_level(cfg: dict, point) -> dict:
    spec = _spec2(cfg, point)
    out = {}
    dut = dut_two_level(spec)
    n_c = cfg["nc"] or DEFAULT_NC
    spectrum = None
    for method in dict.fromkeys(cfg["methods"]):
        if method == "floquet":
            # diabatic basis after the rotation; |1> is the upper diabatic state
            spectrum = solve(dut.transformed_h1, FloquetOptions(n_c))
            rho = populations(spectrum, 0)
        elif method == "oracle":
            rho = propagate_fourier(dut.transformed_h1, cfg["oracle_periods"] * spec.tau,
                                    rtol=1e-10, atol=1e-10, n_phases=8).long_time_average
        else:
            out["grwa_rho11"] = rho11_two_level(spec, cfg["window"])
            continue
        for s in range(2):
            out[f"{method}_rho{s}{s}"] = float(rho[s])
    if cfg["quasienergies"]:
        if spectrum is None:
            spectrum = solve(dut.transformed_h1, FloquetOptions(n_c))
        for i, q in enumerate(np.sort(folded_quasienergies(spectrum))):
            out[f"q{i}"] = float(q)
    return out


def evaluate_point(cfg: dict, point) -> tuple[dict, str | None]:
    """Values for one sweep point; on numeric failure returns NaNs and the message."""
    try:
        if cfg["command"] == "coefficients":
            return _eval_coefficients(cfg, point), None
        if cfg["system"] == "two_level":
            return _eval_two_level(cfg, point), None
        return _eval_three_level(cfg, point), None
    except FAILURES as exc:
        return {c: math.nan for c in value_columns(cfg)}, f"{type(exc).__name__}: {exc}"


def _task(args):
    return evaluate_point(*args)


def run_points(cfg: dict, points) -> list[tuple[dict, str | None]]:
    jobs = cfg["jobs"] or os.cpu_count() or 1
    tasks = [(cfg, p) for p in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map preserves submission order
            return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_task(t) for t in tasks]


# ---------------------------------------------------------------------------
# output


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def render_csv(header: list[str], rows: list[list[float]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def metadata(cfg: dict) -> dict:
    spec_nc = cfg["nc"]
    return {
        "config": {k: cfg[k] for k in sorted(cfg) if k not in ("jobs", "output")},
        "truncation": {
            "n_c": spec_nc if spec_nc is not None else
            f"auto: max({DEFAULT_NC}, ceil(5 * omega_c) + 20)",
            "q_max": cfg["qmax"], "n_window": cfg["window"],
        },
        "method_versions": {m: METHOD_VERSIONS[m] for m in dict.fromkeys(cfg["methods"])},
        "versions": {"dutfloquet": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "units": "frequencies as ratios to the modulation frequency omega",
    }


def deviation_stats(header: list[str], rows: list[list[float]], methods: list[str]) -> dict:
    """Max-abs and RMS deviation of each method's rho11 from the first listed method."""
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    col = {h: i for i, h in enumerate(header)}
    ref = methods[0]
    ref_vals = data[:, col[f"{ref}_rho11"]]
    stats = {}
    for method in methods[1:]:
        diff = data[:, col[f"{method}_rho11"]] - ref_vals
        key = f"{method}_vs_{ref}"
        stats[key] = {"max_abs": float(np.nanmax(np.abs(diff))),
                      "l2": float(np.sqrt(np.nanmean(diff ** 2)))}
    return stats


def execute(cfg: dict, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    points = sweep_points(cfg)
    results = run_points(cfg, points)
    header = param_columns(cfg) + value_columns(cfg)
    rows, failures = [], 0
    for point, (values, err) in zip(points, results):
        if err is not None:
            failures += 1
            print(f"warning: point {point} failed: {err}", file=stderr)
        rows.append(list(point) + [values.get(c, math.nan) for c in value_columns(cfg)])
    text = render_csv(header, rows)
    meta = metadata(cfg)
    meta["rows"] = len(rows)
    meta["failed_points"] = failures
    if cfg["command"] == "compare":
        meta["comparison"] = deviation_stats(header, rows, cfg["methods"])
        for key, st in meta["comparison"].items():
            print(f"{key}: max_abs={fmt(st['max_abs'])} l2={fmt(st['l2'])}", file=stderr)
    if cfg["output"]:
        out = Path(cfg["output"])
        out.write_bytes(text.encode("utf-8"))
        Path(str(out) + ".json").write_bytes(
            (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    else:
        stdout.write(text)
    if failures and cfg["strict"]:
        return 1
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _common(parser: argparse.ArgumentParser) -> None:
    a = parser.add_argument
    a("--config", help="INI file of key = value settings or a JSON sidecar")
    a("--system", choices=SYSTEMS)
    a("--sweep", choices=SWEEPS)
    a("--min", type=float)
    a("--max", type=float)
    a("--steps", type=int)
    a("--min2", type=float, help="omega_c lower bound for 2-D maps")
    a("--max2", type=float)
    a("--steps2", type=int)
    a("--omega-p", dest="omega_p", type=float)
    a("--omega-c", dest="omega_c", type=float)
    a("--delta", type=float)
    a("--epsilon0", type=float)
    a("--amplitude", type=float)
    a("--nc", type=int, help="photon cutoff (default: automatic, at least 40)")
    a("--qmax", type=int)
    a("--window", type=int)
    a("--methods", type=_parse_methods, help="comma list of floquet,grwa,gvv,oracle")
    a("--orders", type=_parse_orders, help="photon indices for coefficient tables")
    a("--oracle-periods", dest="oracle_periods", type=int)
    a("--quasienergies", action="store_const", const=True, default=None)
    a("--jobs", type=int, help="worker processes (default: all cores)")
    a("--output", "-o")
    a("--strict", action="store_const", const=True, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dutfloquet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMAND_DEFAULTS:
        _common(sub.add_parser(name))
    preset = sub.add_parser("preset", help="figure-reproduction presets")
    preset.add_argument("name", choices=sorted(PRESETS))
    _common(preset)
    rerun = sub.add_parser("rerun", help="regenerate a CSV from its JSON sidecar")
    rerun.add_argument("sidecar")
    rerun.add_argument("--output", "-o")
    rerun.add_argument("--jobs", type=int)
    return parser


_NON_SETTINGS = {"command", "config", "name", "sidecar"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(args).items() if k not in _NON_SETTINGS}
    try:
        command = args.command
        file_settings: dict = {}
        if command == "rerun":
            command, file_settings = read_config_file(args.sidecar)
            if command is None:
                raise ConfigError("sidecar does not record a command")
        elif args.config:
            file_command, file_settings = read_config_file(args.config)
            if command == "preset" and file_command:
                raise ConfigError("a preset cannot be combined with a config that names a command")
        if command == "preset":
            command, preset_settings = PRESETS[args.name]
            file_settings = {**preset_settings, **file_settings}
        if command not in COMMAND_DEFAULTS:
            raise ConfigError(f"unknown command {command!r}")
        cfg = resolve_config(command, file_settings, flags)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
