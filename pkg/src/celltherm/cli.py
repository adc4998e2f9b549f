"""Command-line interface: simulate / calibrate / fit / estimate / freqresp.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every subcommand takes --seed, --config (JSON overrides) and --out.  All
defaults mirror the shipped configuration: dt = 1 s, impedance cadence 24 s,
sigma_n = 1e-4, beta_v = 0.1, beta_e = 2.5, x0 = [25, 0], chamber at 8 degC.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace

import numpy as np

from .analytic import analytical_frequency_response, qa_frequency_response
from .errors import (
    CalibrationError,
    CellThermError,
    ConfigError,
    DataError,
    InvalidParameterError,
    NumericalError,
)
from .estimation import EstimatorConfig, rmse, run_estimator
from .identify import FitProblem, fit_thermal_params
from .impedance import (
    default_calibration,
    fit_admittance_poly,
    load_admittance_poly,
    read_calibration_csv,
    save_admittance_poly,
)
from .telemetry import (
    DriveCycleSpec,
    generate_drive_cycle,
    load_telemetry,
    save_sweep,
    save_telemetry,
    save_trace,
    synthesize_telemetry,
)
from .thermal import DEFAULT_CELL, ThermalParams, pa_frequency_response

__all__ = ["cli_main", "FILTERS"]

# filter flag -> (measurement kind, dual estimation of h)
FILTERS = {
    "ekf": ("admittance", False),
    "dekf": ("admittance", True),
    "kf": ("surface_temp", False),
    "dkf": ("surface_temp", True),
}

# Surface-temperature filters follow the conventional thermocouple tunings;
# the impedance filters follow the shipped impedance tunings.
FILTER_TUNING = {
    "admittance": {"sigma_n": 1e-4, "beta_v": 0.1, "beta_e": 2.5},
    "surface_temp": {"sigma_n": 0.05, "beta_v": 0.1, "beta_e": 0.25},
}

SIMULATE_DEFAULTS = {
    "total_s": 3500.0,
    "cadence_s": 24.0,
    "excitation_s": 20.0,
    "rest_s": 4.0,
    "sigma_adm": 1e-4,
    "sigma_temp": 0.05,
    "r0_ohm": 0.01,
    "u_ocv": 3.3,
    "t_inf_c": 8.0,
    "fd_nodes": 201,
    "fd_dt": 0.1,
}

FIT_INITIAL = {"cp": 1050.0, "kt": 0.55, "h": 20.0}


class UsageError(Exception):
    """Bad command line or conflicting options (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataError(f"config {path} must hold a JSON object")
    return raw


def _params_from_dict(raw: dict) -> ThermalParams:
    base = asdict(DEFAULT_CELL)
    base.pop("v_b", None)
    unknown = set(raw) - set(base) - {"v_b"}
    if unknown:
        raise ConfigError(f"unknown thermal parameter keys: {sorted(unknown)}")
    base.update({k: float(v) for k, v in raw.items() if k != "v_b"})
    return ThermalParams(**base)


def _resolve_params(args, config) -> ThermalParams:
    raw = {}
    if getattr(args, "params", None):
        with open(args.params, encoding="utf-8") as fh:
            payload = json.load(fh)
        raw = payload.get("params", payload)
    raw.update(config.get("params", {}))
    return _params_from_dict(raw) if raw else DEFAULT_CELL


def _build_parser() -> _Parser:
    parser = _Parser(prog="celltherm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--config", help="JSON file with option overrides")
        p.add_argument("--out", required=True, help="output file path")

    p = sub.add_parser("simulate", help="oracle run -> telemetry CSV")
    common(p)

    p = sub.add_parser("calibrate", help="calibration CSV -> admittance poly JSON")
    common(p)
    p.add_argument("--data", required=True, help="CSV with header temp_c,adm_real")
    p.add_argument("--freq-hz", type=float, default=215.0)

    p = sub.add_parser("fit", help="telemetry CSV -> fitted thermal params JSON")
    common(p)
    p.add_argument("--data", required=True, help="telemetry CSV with truth channels")

    p = sub.add_parser("estimate", help="telemetry -> estimator trace CSV")
    common(p)
    p.add_argument("--data", required=True, help="telemetry CSV")
    p.add_argument("--filter", choices=sorted(FILTERS), default=None)
    p.add_argument("--poly", help="admittance calibration JSON (default: shipped)")
    p.add_argument("--params", help="thermal params JSON (bare or fit report)")

    p = sub.add_parser("freqresp", help="analytical/PA/QA frequency sweep CSV")
    common(p)
    p.add_argument("--params", help="thermal params JSON (bare or fit report)")
    return parser


def _cmd_simulate(args, config) -> int:
    cfg = dict(SIMULATE_DEFAULTS)
    for key in set(config) & set(cfg):
        cfg[key] = type(SIMULATE_DEFAULTS[key])(config[key])
    params = _resolve_params(args, config)
    poly = load_admittance_poly(config["poly"]) if "poly" in config else default_calibration()
    spec = DriveCycleSpec(
        excitation_s=cfg["excitation_s"], rest_s=cfg["rest_s"], total_s=cfg["total_s"]
    )
    if cfg["cadence_s"] % spec.block_s > 1e-9:
        raise ConfigError("cadence_s must be a multiple of excitation_s + rest_s")
    current = generate_drive_cycle(spec, seed=args.seed)
    records = synthesize_telemetry(
        current,
        params,
        poly,
        noise=(cfg["sigma_adm"], cfg["sigma_temp"]),
        seed=args.seed,
        r0_ohm=cfg["r0_ohm"],
        u_ocv=cfg["u_ocv"],
        t_inf=cfg["t_inf_c"],
        cadence_s=cfg["cadence_s"],
        rest_s=cfg["rest_s"],
        excitation_s=cfg["excitation_s"],
        fd_nodes=cfg["fd_nodes"],
        fd_dt=cfg["fd_dt"],
    )
    save_telemetry(records, args.out)
    n_meas = sum(1 for r in records if r.adm_real is not None)
    print(f"wrote {len(records)} records ({n_meas} impedance samples) to {args.out}")
    return 0


def _cmd_calibrate(args, config) -> int:
    samples = read_calibration_csv(args.data)
    freq = float(config.get("freq_hz", args.freq_hz))
    poly, rms_resid = fit_admittance_poly(samples, freq)
    save_admittance_poly(poly, args.out)
    print(
        f"fitted a=({poly.a1:.6g}, {poly.a2:.6g}, {poly.a3:.6g}) over "
        f"[{poly.t_min:g}, {poly.t_max:g}] degC, residual rms {rms_resid:.3g}"
    )
    return 0


def _cmd_fit(args, config) -> int:
    records = load_telemetry(args.data)
    initial = dict(FIT_INITIAL)
    initial.update(config.get("initial", {}))
    rho = float(config.get("rho", DEFAULT_CELL.rho))
    guess = replace(
        DEFAULT_CELL, rho=rho, cp=initial["cp"], kt=initial["kt"], h=initial["h"], v_b=0.0
    )
    problem = FitProblem(
        records=tuple(records),
        initial_guess=guess,
        u_ocv=float(config.get("u_ocv", 3.3)),
    )
    fitted, report = fit_thermal_params(problem)
    payload = {
        "params": {k: v for k, v in asdict(fitted).items()},
        "objective": report.objective,
        "rmse_core": report.rmse_core,
        "rmse_surf": report.rmse_surf,
        "iterations": report.iterations,
        "converged": report.converged,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"fitted cp={fitted.cp:.1f} kt={fitted.kt:.4f} h={fitted.h:.2f} "
        f"(rmse core {report.rmse_core:.3f} / surf {report.rmse_surf:.3f} degC)"
    )
    if not report.converged:
        print("warning: simplex did not converge; best point returned", file=sys.stderr)
    return 0


def _cmd_estimate(args, config) -> int:
    config_filter = config.get("filter")
    if args.filter and config_filter and args.filter != config_filter:
        raise UsageError(
            f"--filter {args.filter} conflicts with config filter {config_filter!r}"
        )
    filter_name = args.filter or config_filter or "ekf"
    if filter_name not in FILTERS:
        raise UsageError(f"unknown filter {filter_name!r}")
    kind, dual = FILTERS[filter_name]

    records = load_telemetry(args.data)
    params = _resolve_params(args, config)
    poly = load_admittance_poly(args.poly) if args.poly else default_calibration()

    tuning = dict(FILTER_TUNING[kind])
    h0 = config.get("h0")
    if h0 is None and "h0_scale" in config:
        h0 = float(config["h0_scale"]) * params.h
    x0_raw = config.get("x0", [25.0, 0.0])
    from .thermal import ThermalState

    cfg = EstimatorConfig(
        sigma_n=float(config.get("sigma_n", tuning["sigma_n"])),
        beta_v=float(config.get("beta_v", tuning["beta_v"])),
        beta_e=float(config.get("beta_e", tuning["beta_e"])),
        dt=float(config.get("dt", 1.0)),
        x0=ThermalState(float(x0_raw[0]), float(x0_raw[1])),
        p0_x=np.diag([float(v) for v in config.get("p0_x_diag", [25.0, 1.0])]),
        h0=None if h0 is None else float(h0),
        p0_h=float(config.get("p0_h", 25.0)),
        measurement_kind=kind,
        dual=dual,
    )
    trace = run_estimator(records, cfg, params, poly, u_ocv=float(config.get("u_ocv", 3.3)))
    save_trace(trace, records, args.out)

    truth_core = np.array(
        [np.nan if r.t_core_truth is None else r.t_core_truth for r in records]
    )
    if np.any(np.isfinite(truth_core)):
        err = rmse(trace, truth_core, "core")
        print(f"{filter_name}: {len(records)} records, core rmse {err:.3f} degC -> {args.out}")
    else:
        print(f"{filter_name}: {len(records)} records -> {args.out}")
    return 0


def _cmd_freqresp(args, config) -> int:
    params = _resolve_params(args, config)
    f_min = float(config.get("f_min_hz", 1e-6))
    f_max = float(config.get("f_max_hz", 1.0))
    n_points = int(config.get("n_points", 61))
    if not (0 < f_min < f_max) or n_points < 2:
        raise ConfigError("need 0 < f_min_hz < f_max_hz and n_points >= 2")
    freqs = np.logspace(np.log10(f_min), np.log10(f_max), n_points)
    responses = {"analytic": [], "pa": [], "qa": []}
    for f in freqs:
        omega = 2.0 * np.pi * f
        responses["analytic"].append(analytical_frequency_response(params, omega))
        responses["pa"].append(pa_frequency_response(params, omega))
        responses["qa"].append(qa_frequency_response(params, omega))
    save_sweep(freqs, responses, args.out)
    print(f"wrote {n_points} frequencies ({f_min:g}..{f_max:g} Hz) to {args.out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "fit": _cmd_fit,
    "estimate": _cmd_estimate,
    "freqresp": _cmd_freqresp,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, ConfigError, CalibrationError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CellThermError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:  # console-script entry point
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
