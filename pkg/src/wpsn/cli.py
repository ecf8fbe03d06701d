"""Command-line front end.

Four subcommands: simulate a scenario to a trace CSV, sweep attenuations for
converged operating points, optimize a single planning instance, calibrate
model pieces from measurement CSVs.  Failures print one machine-readable
line to stderr ("error: {json}") and exit 1; usage errors exit 2.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

from .calibration import (CalibrationError, FitError, SurfaceInvariantError,
                          TraceParseError, TraceSchemaError, fit_leakage,
                          fit_loads, fit_path_loss, load_iv_surface,
                          load_pae_curve, load_trace)
from .device_models import SensorMode, channel_attenuation, db_to_attenuation
from .energy_management import (ControllerState, max_efficiency_point,
                                optimal_strategy)
from .sim_harness import (ScenarioError, emit_sweep, emit_trace,
                          parse_scenario, run_scenario, sweep_attenuation)


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH",
                        help="output file (default depends on subcommand)")
    common.add_argument("--seed", type=int,
                        help="override the scenario seed")
    common.add_argument("--discrete", action="store_true",
                        help="frame-level closed-form energy update instead "
                             "of the integrator")
    common.add_argument("--quiet", action="store_true",
                        help="suppress the stdout summary")

    parser = argparse.ArgumentParser(
        prog="wpsn",
        description="Wireless-powered sensor network simulator and "
                    "controller toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common],
                       help="run a scenario and write the frame trace")
    p.add_argument("scenario", help="scenario file")

    p = sub.add_parser("sweep", parents=[common],
                       help="converged operating points per attenuation, "
                            "both controller schemes")
    p.add_argument("scenario", help="scenario file")
    p.add_argument("--attenuations", required=True, metavar="DB,DB,...",
                   help="comma-separated channel attenuations in dB")

    p = sub.add_parser("optimize", parents=[common],
                       help="solve one planning instance at a fixed channel")
    p.add_argument("scenario", help="scenario file")
    p.add_argument("--attenuation", type=float, metavar="DB",
                   help="channel attenuation in dB (default: scenario "
                        "channel at t=0)")

    p = sub.add_parser("calibrate", parents=[common],
                       help="fit model parameters from a measurement CSV")
    p.add_argument("kind", choices=["path-loss", "leakage", "loads",
                                    "iv-surface", "pae"])
    p.add_argument("trace", help="measurement CSV")
    p.add_argument("--capacitance", type=float, default=0.1, metavar="F",
                   help="storage capacitance for leakage fits (default 0.1)")
    return parser


def _err_kind(exc):
    for cls, kind in ((TraceParseError, "trace-parse"),
                      (TraceSchemaError, "trace-schema"),
                      (SurfaceInvariantError, "surface-invariant"),
                      (FitError, "fit"),
                      (CalibrationError, "calibration"),
                      (ScenarioError, "scenario"),
                      (OSError, "io"),
                      (ValueError, "value")):
        if isinstance(exc, cls):
            return kind
    return "internal"


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _load(args):
    sc = parse_scenario(args.scenario)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    return sc


def _cmd_simulate(args):
    sc = _load(args)
    records = run_scenario(sc, discrete=args.discrete)
    out = args.out or f"{sc.name}_trace.csv"
    emit_trace(records, out)
    if not args.quiet:
        awake = sum(r.awake for r in records)
        brown = sum(r.brownout for r in records)
        last = records[-1]
        print(f"{sc.name}: {len(records)} frames, {awake} awake, "
              f"{brown} brownout")
        print(f"final energy {last.energy_J * 1e3:.3f} mJ "
              f"({last.voltage_V:.3f} V), case {last.case}")
        print(f"trace written to {out}")
    return 0


def _cmd_sweep(args):
    sc = _load(args)
    try:
        attens = [float(tok) for tok in args.attenuations.split(",") if tok]
    except ValueError:
        raise ScenarioError(
            f"--attenuations: expected comma-separated dB values, "
            f"got {args.attenuations!r}") from None
    if not attens:
        raise ScenarioError("--attenuations: list is empty")
    rows = sweep_attenuation(sc, attens)
    out = args.out or f"{sc.name}_sweep.csv"
    emit_sweep(rows, out)
    if not args.quiet:
        for r in rows:
            flag = "" if r.converged else "  [not converged]"
            print(f"{r.atten_db:7.2f} dB  {r.scheme:<8s} case {r.case:<3s} "
                  f"alpha={r.alpha:.4f} upsilon={r.upsilon_W:.4f} W "
                  f"tau={r.tau_frames:g} p_cons={r.p_cons_W * 1e3:.2f} mW"
                  f"{flag}")
        print(f"sweep written to {out}")
    return 0


def _cmd_optimize(args):
    sc = _load(args)
    params = sc.device
    if args.attenuation is not None:
        h = db_to_attenuation(args.attenuation)
    else:
        h = channel_attenuation(params.channel, d=sc.distance, t=0.0)
    state = ControllerState(**sc.controller)
    mep = max_efficiency_point(params, state.e_tgt, h)
    ctrl, case = optimal_strategy(params, state.e_tgt, 1.0 / state.tau_tgt,
                                  h, alpha_min=state.alpha_min)
    payload = {
        "attenuation_db": -10.0 * math.log10(h),
        "case": case,
        "alpha": ctrl.alpha,
        "upsilon_W": ctrl.upsilon,
        "tau_frames": _jsonable(ctrl.tau),
        "feasible": math.isfinite(ctrl.tau),
        "avg_beacon_power_W": _jsonable(
            ctrl.alpha * ctrl.upsilon
            / params.amplifier.pae_curve.theta(ctrl.upsilon)),
        "best_upsilon_W": mep.upsilon_hat,
        "best_end_to_end_rate_W_per_W": 1.0 / mep.mu_hat,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
    if not args.quiet:
        print(text)
    elif not args.out:
        print(text)  # quiet without --out would otherwise discard the result
    return 0


def _cmd_calibrate(args):
    kind = args.kind
    results = {}
    if kind == "path-loss":
        trace = load_trace(args.trace, "path-loss")
        g_ref, exponent, rms = fit_path_loss(trace)
        results = {"g_ref": g_ref, "exponent": exponent,
                   "rms_log_residual": rms}
    elif kind == "leakage":
        trace = load_trace(args.trace, "leakage")
        r_leak, rms = fit_leakage(trace, args.capacitance)
        if math.isinf(r_leak):
            results = {"leak_resistance_ohm": None, "rms_residual": rms,
                       "note": "no measurable leakage"}
        else:
            results = {"leak_resistance_ohm": r_leak, "rms_residual": rms}
    elif kind == "loads":
        traces = load_trace(args.trace, "loads")
        table = fit_loads(traces)
        results = {
            mode.name.lower(): {
                "gamma_ohm": _jsonable(table.gamma[mode]),
                "zeta_A": table.zeta[mode],
            } for mode in SensorMode
        }
    elif kind == "iv-surface":
        surf = load_iv_surface(args.trace)
        results = {"voltage_points": len(surf.v_axis),
                   "power_points": len(surf.p_axis),
                   "v_range_V": [float(surf.v_axis[0]),
                                 float(surf.v_axis[-1])],
                   "p_range_W": [float(surf.p_axis[0]),
                                 float(surf.p_axis[-1])],
                   "invariants": "ok"}
    else:  # pae
        curve = load_pae_curve(args.trace)
        results = {"points": len(curve.power),
                   "p_range_W": [float(curve.power[0]),
                                 float(curve.power[-1])],
                   "pae_range": [float(min(curve.pae)),
                                 float(max(curve.pae))],
                   "invariants": "ok"}
    text = json.dumps(results, indent=2)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text + "\n")
    if not args.quiet or not args.out:
        print(text)
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "optimize": _cmd_optimize,
    "calibrate": _cmd_calibrate,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (ValueError, OSError) as exc:
        line = json.dumps({"kind": _err_kind(exc), "message": str(exc)})
        print(f"error: {line}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
