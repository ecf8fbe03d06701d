"""Parameter fitting from measurement traces and fixture-file ingestion.

All fits are closed-form linear least squares in a transformed domain
(log-log for path loss, log-linear for leakage, linear for loads), so they
are deterministic and need no starting guesses.  File loaders raise a
distinct error per failure class: TraceParseError for unreadable content,
TraceSchemaError for wrong structure, SurfaceInvariantError for physically
inconsistent surfaces, FitError for degenerate regressions.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .device_models import (HarvesterIvSurface, LoadTable, PaeCurve,
                            SensorMode)


class CalibrationError(ValueError):
    """Base class for everything this module raises on bad input."""


class TraceParseError(CalibrationError):
    pass


class TraceSchemaError(CalibrationError):
    pass


class SurfaceInvariantError(CalibrationError):
    pass


class FitError(CalibrationError):
    pass


@dataclass(frozen=True)
class MeasurementTrace:
    """One measured curve: kind tag plus paired x/y samples."""
    kind: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape:
            raise TraceSchemaError("trace needs matching 1-D x and y columns")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.x.size


def _require_rows(trace, n=3):
    if len(trace) < n:
        raise FitError(f"need at least {n} samples, got {len(trace)}")


# ---------------------------------------------------------------------------
# regressions


def fit_path_loss(trace):
    """Fit h = g_ref / d**exponent by least squares on log h vs log d.

    Returns (g_ref, exponent, rms_log_residual).
    """
    _require_rows(trace)
    d, h = trace.x, trace.y
    if np.any(d <= 0.0) or np.any(h <= 0.0):
        raise FitError("distances and attenuations must be positive")
    ld, lh = np.log(d), np.log(h)
    if np.ptp(ld) == 0.0:
        raise FitError("all samples at one distance; exponent unidentifiable")
    slope, intercept = np.polyfit(ld, lh, 1)
    resid = lh - (slope * ld + intercept)
    return math.exp(intercept), -slope, float(np.sqrt(np.mean(resid ** 2)))


def fit_leakage(trace, capacitance):
    """Fit self-discharge v(t) = v(0) exp(-t / (R C)); returns (r_leak, residual).

    A non-negative slope of ln v means no measurable leakage and reports
    r_leak = inf.
    """
    _require_rows(trace)
    if capacitance <= 0.0:
        raise FitError("capacitance must be positive")
    t, v = trace.x, trace.y
    if np.any(np.diff(t) <= 0.0):
        raise FitError("time axis must be strictly increasing")
    if np.any(v <= 0.0):
        raise FitError("voltages must be positive")
    lv = np.log(v)
    slope, intercept = np.polyfit(t, lv, 1)
    resid = lv - (slope * t + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    # total ln-v drop below double resolution is no measurable decay
    if slope >= 0.0 or -slope * float(np.ptp(t)) < 1e-12:
        return math.inf, rms
    return -1.0 / (slope * capacitance), rms


def _through_origin(x, y):
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise FitError("degenerate regressor")
    return float(np.dot(x, y)) / denom


def fit_loads(traces):
    """Recover the per-mode load table from voltage-power sweeps.

    `traces` maps each SensorMode to a trace of (volts, watts).  The idle
    sweep pins the constant current floor first; the active sweep then fits
    the resistive term with that floor subtracted (skipping the subtraction
    biases the resistance by the floor current, which is why the naive
    P = V^2/gamma fit misses the 0.5% band); receive/transmit fit their
    extra constant current against the fitted active curve.
    """
    for m in SensorMode:
        if m not in traces:
            raise FitError(f"missing trace for mode {m.name}")
        _require_rows(traces[m])
    v_id, p_id = traces[SensorMode.IDLE].x, traces[SensorMode.IDLE].y
    zeta_idle = _through_origin(v_id, p_id)
    v_ac, p_ac = traces[SensorMode.ACTIVE].x, traces[SensorMode.ACTIVE].y
    gamma_inv = _through_origin(v_ac ** 2, p_ac - zeta_idle * v_ac)
    if gamma_inv < 0.0:
        raise FitError("active sweep implies negative resistance")
    gamma = math.inf if gamma_inv == 0.0 else 1.0 / gamma_inv
    zeta = {SensorMode.IDLE: max(zeta_idle, 0.0)}
    for m in (SensorMode.RECEIVE, SensorMode.TRANSMIT):
        v, p = traces[m].x, traces[m].y
        extra = _through_origin(v, p - gamma_inv * v ** 2 - zeta_idle * v)
        zeta[m] = max(extra + zeta_idle, 0.0)
    zeta[SensorMode.ACTIVE] = zeta[SensorMode.IDLE]
    return LoadTable(
        gamma={SensorMode.IDLE: math.inf, SensorMode.ACTIVE: gamma,
               SensorMode.RECEIVE: gamma, SensorMode.TRANSMIT: gamma},
        zeta=zeta,
    )


# ---------------------------------------------------------------------------
# file ingestion


def packaged_fixture(name):
    """Filesystem path of a fixture CSV shipped inside the package."""
    return resources.files("wpsn.data").joinpath(name)


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise TraceParseError(f"{path}: {exc}") from None
    if not rows:
        raise TraceSchemaError(f"{path}: empty file")
    return rows


def _floats(cells, path, where):
    out = []
    for c in cells:
        try:
            out.append(float(c))
        except ValueError:
            raise TraceParseError(
                f"{path}: non-numeric value {c!r} in {where}") from None
    return out


def load_pae_curve(path):
    """Two-column CSV (p_tx_mW, pae) -> PaeCurve in watts."""
    rows = _read_rows(path)
    header = [c.strip().lower() for c in rows[0]]
    if header != ["p_tx_mw", "pae"]:
        raise TraceSchemaError(f"{path}: expected header p_tx_mW,pae")
    body = [_floats(r, path, f"row {i + 2}") for i, r in enumerate(rows[1:])]
    if any(len(r) != 2 for r in body):
        raise TraceSchemaError(f"{path}: every data row needs two columns")
    p = np.array([r[0] for r in body]) * 1e-3
    y = np.array([r[1] for r in body])
    try:
        return PaeCurve(power=p, pae=y)
    except ValueError as exc:
        raise TraceSchemaError(f"{path}: {exc}") from None


def load_iv_surface(path, rel_tol=0.02):
    """Harvester I-V grid CSV -> HarvesterIvSurface.

    First row: blank cell then receive power in dBm ascending; each later
    row: voltage in volts then current in mA per power column.
    """
    rows = _read_rows(path)
    head = rows[0]
    if head[0].strip() != "":
        raise TraceSchemaError(f"{path}: first header cell must be blank")
    p_dbm = np.array(_floats(head[1:], path, "header"))
    if p_dbm.size < 2 or np.any(np.diff(p_dbm) <= 0.0):
        raise TraceSchemaError(f"{path}: power header must ascend in dBm")
    volts, grid = [], []
    for i, row in enumerate(rows[1:]):
        if len(row) != p_dbm.size + 1:
            raise TraceSchemaError(
                f"{path}: row {i + 2} has {len(row)} cells, "
                f"expected {p_dbm.size + 1}")
        vals = _floats(row, path, f"row {i + 2}")
        volts.append(vals[0])
        grid.append(vals[1:])
    volts = np.array(volts)
    if volts.size < 2 or np.any(np.diff(volts) <= 0.0):
        raise TraceSchemaError(f"{path}: voltage rows must ascend")
    try:
        return HarvesterIvSurface(
            v_axis=volts,
            p_axis=10.0 ** (p_dbm / 10.0) * 1e-3,
            current=np.array(grid) * 1e-3,
            rel_tol=rel_tol,
        )
    except ValueError as exc:
        raise SurfaceInvariantError(f"{path}: {exc}") from None


_TRACE_SCHEMAS = {
    "path-loss": ("d_m", "atten_db"),
    "leakage": ("t_s", "v_V"),
}
_LOADS_HEADER = ("v_V", "p_idle_W", "p_act_W", "p_rx_W", "p_tx_W")
_LOADS_ORDER = (SensorMode.IDLE, SensorMode.ACTIVE,
                SensorMode.RECEIVE, SensorMode.TRANSMIT)


def load_trace(path, kind):
    """Measurement CSV -> MeasurementTrace (or mode dict for kind "loads")."""
    rows = _read_rows(path)
    header = [c.strip() for c in rows[0]]
    body = [_floats(r, path, f"row {i + 2}") for i, r in enumerate(rows[1:])]
    if kind == "loads":
        if tuple(header) != _LOADS_HEADER:
            raise TraceSchemaError(
                f"{path}: expected header {','.join(_LOADS_HEADER)}")
        if any(len(r) != 5 for r in body):
            raise TraceSchemaError(f"{path}: every data row needs five columns")
        cols = np.array(body)
        return {m: MeasurementTrace("loads", cols[:, 0], cols[:, j + 1])
                for j, m in enumerate(_LOADS_ORDER)}
    if kind not in _TRACE_SCHEMAS:
        raise TraceSchemaError(f"unknown trace kind {kind!r}")
    want = _TRACE_SCHEMAS[kind]
    if tuple(h.lower() for h in header) != tuple(w.lower() for w in want):
        raise TraceSchemaError(f"{path}: expected header {','.join(want)}")
    if any(len(r) != 2 for r in body):
        raise TraceSchemaError(f"{path}: every data row needs two columns")
    x = np.array([r[0] for r in body])
    y = np.array([r[1] for r in body])
    if kind == "path-loss":
        y = 10.0 ** (-y / 10.0)  # dB column to linear attenuation
    return MeasurementTrace(kind, x, y)


# ---------------------------------------------------------------------------
# synthetic trace generators (test oracles and CLI demos)


def synth_path_loss(g_ref, exponent, distances, noise_frac=0.0, rng=None):
    d = np.asarray(distances, dtype=np.float64)
    h = g_ref / d ** exponent
    if noise_frac > 0.0:
        rng = rng or np.random.default_rng(0)
        h = h * (1.0 + noise_frac * rng.standard_normal(d.size))
        h = np.maximum(h, 1e-12)
    return MeasurementTrace("path-loss", d, h)


def synth_leakage(r_leak, capacitance, v0, times, noise_v=0.0, rng=None):
    t = np.asarray(times, dtype=np.float64)
    v = v0 * np.exp(-t / (r_leak * capacitance))
    if noise_v > 0.0:
        rng = rng or np.random.default_rng(0)
        v = np.maximum(v + noise_v * rng.standard_normal(t.size), 1e-9)
    return MeasurementTrace("leakage", t, v)


def synth_loads(loads, voltages, noise_frac=0.0, rng=None):
    v = np.asarray(voltages, dtype=np.float64)
    out = {}
    for m in SensorMode:
        p = v ** 2 / loads.gamma[m] + loads.zeta[m] * v
        if noise_frac > 0.0:
            rng = rng or np.random.default_rng(0)
            p = np.maximum(p * (1.0 + noise_frac * rng.standard_normal(v.size)),
                           0.0)
        out[m] = MeasurementTrace("loads", v, p)
    return out
