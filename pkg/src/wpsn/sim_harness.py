"""Scenario-driven closed-loop simulator: beacon, channel, node, controller.

A scenario binds a device model, a channel script, controller settings and a
run length.  run_scenario advances one frame at a time: resolve the channel,
wake the node when its sleep counter hits zero, feed its report to the
controller, apply the fresh tuple in the same frame, integrate the stored
energy, append a trace record.  Everything is deterministic given the seed.

Scenario files are flat key = value text with [section] headers; physical
quantities carry unit suffixes (see parse_scenario).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .calibration import load_iv_surface, load_pae_curve, load_trace, packaged_fixture
from .device_models import (AmplifierModel, AttenuationSchedule, DeviceParams,
                            FixedAttenuation, FrameTiming, PathLoss,
                            SupercapModel, channel_attenuation,
                            db_to_attenuation, default_loads,
                            energy_to_voltage)
from .energy_evolution import (avg_amplifier_power, discrete_step,
                               integrate_frame)
from .energy_management import (ControllerState, SensorReport, applied_tau,
                                epoch_decision)


class ScenarioError(ValueError):
    """Malformed scenario file or inconsistent run configuration."""


@dataclass(frozen=True)
class FixedControl:
    """Open-loop override: constant (alpha, upsilon, tau), controller bypassed."""
    alpha: float
    upsilon: float
    tau: int = 1

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("duty cycle must lie in [0, 1]")
        if self.upsilon < 0.0:
            raise ValueError("transfer power must be non-negative")
        if self.tau < 1 or self.tau != int(self.tau):
            raise ValueError("wake-up interval must be a positive integer")


@dataclass(frozen=True)
class Scenario:
    device: DeviceParams
    controller: dict = field(default_factory=dict)
    frames: int = 1000
    initial_energy: float = 0.380
    noise_std: float = 0.0      # relative std applied to both report fields
    loss_prob: float = 0.0
    seed: int | None = None
    distance: float | None = None  # m, for path-loss channels
    fixed: FixedControl | None = None
    name: str = "scenario"

    def validate(self):
        if self.frames < 1:
            raise ScenarioError("run length must be at least one frame")
        if (self.noise_std > 0.0 or self.loss_prob > 0.0) and self.seed is None:
            raise ScenarioError("seed is mandatory when any stochastic "
                                "element is nonzero")
        if not 0.0 <= self.loss_prob < 1.0:
            raise ScenarioError("loss probability must lie in [0, 1)")
        if self.noise_std < 0.0:
            raise ScenarioError("noise std must be non-negative")
        if self.initial_energy < 0.0:
            raise ScenarioError("initial energy must be non-negative")


@dataclass
class NodeState:
    """Sensor-node frame state: sleep countdown plus energy bookkeeping."""
    sigma: int = 0
    awake: bool = False
    energy: float = 0.0
    brownout: bool = False
    tau: int = 1  # last applied wake-up interval, kept on beacon loss


def node_step(node, beacon_received, commanded_tau):
    """Advance the wake-up state machine by one frame.

    A positive counter decrements (asleep frame); at zero the node wakes and
    reloads the counter from the commanded interval, or from its previously
    applied interval when the beacon was lost this frame.
    """
    if commanded_tau < 1 or commanded_tau != int(commanded_tau):
        raise ValueError("commanded wake-up interval must be a positive integer")
    if node.sigma > 0:
        return replace(node, sigma=node.sigma - 1, awake=False)
    tau = int(commanded_tau) if beacon_received else node.tau
    return replace(node, sigma=tau - 1, awake=True, tau=tau)


@dataclass(frozen=True)
class TraceRecord:
    frame: int
    epoch: int | None
    time_s: float
    energy_J: float
    voltage_V: float
    alpha: float
    upsilon_W: float
    tau_frames: int
    h_true: float
    h_est: float
    p_cons_W: float
    p_sensor_W: float
    awake: bool
    brownout: bool
    case: str


TRACE_COLUMNS = ("frame", "epoch", "time_s", "energy_J", "voltage_V", "alpha",
                 "upsilon_W", "tau_frames", "h_true", "h_est", "p_cons_W",
                 "p_sensor_W", "awake", "brownout", "case")


@dataclass(frozen=True)
class SweepRow:
    atten_db: float
    scheme: str
    converged: bool
    alpha: float
    upsilon_W: float
    tau_frames: float
    p_cons_W: float
    case: str


SWEEP_COLUMNS = ("atten_db", "scheme", "converged", "alpha", "upsilon_W",
                 "tau_frames", "p_cons_W", "case")


# ---------------------------------------------------------------------------
# frame loop


def _resolve_h(sc, t):
    return channel_attenuation(sc.device.channel, d=sc.distance, t=t)


def _run(sc, discrete=False, stop_window=None, stop_tol=1e-3):
    sc.validate()
    params = sc.device
    timing = params.timing
    e_min = params.supercap.e_min
    stochastic = sc.noise_std > 0.0 or sc.loss_prob > 0.0
    rng = np.random.default_rng(sc.seed) if stochastic else None

    state = None
    if sc.fixed is not None:
        standing_alpha = sc.fixed.alpha
        standing_upsilon = sc.fixed.upsilon
        standing_tau = int(sc.fixed.tau)
        case = "fixed"
    else:
        state = ControllerState(**sc.controller)
        boot = state.bootstrap_tuple()
        standing_alpha, standing_upsilon = boot.alpha, boot.upsilon
        standing_tau = applied_tau(boot)
        case = state.last_case

    node = NodeState(sigma=0, awake=False, energy=sc.initial_energy,
                     brownout=False, tau=standing_tau)
    records = []
    x_history = []
    converged_at = None
    epoch_idx = 0

    for k in range(sc.frames):
        t = k * timing.frame_len
        h_true = _resolve_h(sc, t)
        e = node.energy
        browned = e < e_min
        epoch_out = None

        if browned:
            node = replace(node, awake=False, brownout=True)
        elif node.sigma > 0:
            node = node_step(node, True, node.tau)
            node = replace(node, brownout=False)
        else:
            # awake frame: report, decide, and apply in the same frame
            if sc.fixed is None:
                e_meas, s_meas = e, h_true * standing_upsilon
                if rng is not None and sc.noise_std > 0.0:
                    e_meas = max(0.0, e_meas * (1.0 + sc.noise_std
                                                * rng.standard_normal()))
                    s_meas = max(0.0, s_meas * (1.0 + sc.noise_std
                                                * rng.standard_normal()))
                ctrl, _ = epoch_decision(
                    state, SensorReport(e_meas, s_meas, epoch_idx))
                received = True
                if rng is not None and sc.loss_prob > 0.0:
                    received = bool(rng.random() >= sc.loss_prob)
                standing_alpha = ctrl.alpha
                standing_upsilon = ctrl.upsilon
                case = state.last_case
                epoch_out = epoch_idx
                epoch_idx += 1
                node = node_step(node, received, applied_tau(ctrl))
                x_history.append(state.x)
                if (stop_window is not None and converged_at is None
                        and len(x_history) > stop_window):
                    moves = np.abs(np.diff(x_history[-(stop_window + 1):]))
                    if float(np.max(moves)) < stop_tol:
                        converged_at = epoch_idx
            else:
                node = node_step(node, True, int(sc.fixed.tau))
            node = replace(node, brownout=False)

        step = discrete_step if discrete else integrate_frame
        st = step(params, e, standing_alpha, standing_upsilon, h_true,
                  node.awake)
        node = replace(node, energy=st.energy)

        records.append(TraceRecord(
            frame=k,
            epoch=epoch_out,
            time_s=t,
            energy_J=e,
            voltage_V=energy_to_voltage(params.supercap, e),
            alpha=standing_alpha,
            upsilon_W=standing_upsilon,
            tau_frames=node.tau,
            h_true=h_true,
            h_est=(state.h_estimate if state is not None
                   and state.h_estimate is not None else math.nan),
            p_cons_W=avg_amplifier_power(params.amplifier, standing_alpha,
                                         standing_upsilon),
            p_sensor_W=st.consumed / timing.frame_len,
            awake=node.awake,
            brownout=browned,
            case=case,
        ))
        if converged_at is not None and stop_window is not None:
            break
    return records, state, converged_at


def run_scenario(sc, discrete=False):
    """Simulate the scenario frame by frame; returns the full trace."""
    records, _, _ = _run(sc, discrete=discrete)
    return records


def sweep_attenuation(sc, attens_db, window=20, tol=1e-3):
    """Converged operating point per attenuation for both controller schemes.

    Each attenuation gets a fresh run per scheme on a fixed channel.
    Convergence means every |x step| over `window` consecutive epochs stays
    below `tol`; rows that never get there are flagged and report the last
    standing tuple.
    """
    rows = []
    for db in attens_db:
        dev = replace(sc.device, channel=FixedAttenuation(db_to_attenuation(db)))
        for scheme in ("proposed", "baseline"):
            cfg = dict(sc.controller)
            cfg["scheme"] = scheme
            sub = replace(sc, device=dev, controller=cfg,
                          name=f"{sc.name}-{db:g}dB-{scheme}")
            _, state, converged_at = _run(sub, stop_window=window,
                                          stop_tol=tol)
            standing = state.last_tuple or state.bootstrap_tuple()
            rows.append(SweepRow(
                atten_db=float(db),
                scheme=scheme,
                converged=converged_at is not None,
                alpha=standing.alpha,
                upsilon_W=standing.upsilon,
                tau_frames=standing.tau,
                p_cons_W=avg_amplifier_power(sc.device.amplifier,
                                             standing.alpha,
                                             standing.upsilon),
                case=state.last_case,
            ))
    return rows


# ---------------------------------------------------------------------------
# trace serialization (plot-ready CSV, 9 significant digits, LF endings)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return "%.9g" % value
    return str(value)


def emit_trace(records, path):
    _emit(TRACE_COLUMNS, records, path)


def emit_sweep(rows, path):
    _emit(SWEEP_COLUMNS, rows, path)


def _emit(columns, rows, path):
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(getattr(row, c)) for c in columns)
                         + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from None


def read_trace(path):
    """Parse a trace CSV back into TraceRecord rows (test oracle)."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or tuple(lines[0].split(",")) != TRACE_COLUMNS:
        raise ScenarioError(f"{path}: not a trace file")
    out = []
    for line in lines[1:]:
        c = line.split(",")
        out.append(TraceRecord(
            frame=int(c[0]),
            epoch=None if c[1] == "" else int(c[1]),
            time_s=float(c[2]), energy_J=float(c[3]), voltage_V=float(c[4]),
            alpha=float(c[5]), upsilon_W=float(c[6]), tau_frames=int(c[7]),
            h_true=float(c[8]), h_est=float(c[9]), p_cons_W=float(c[10]),
            p_sensor_W=float(c[11]), awake=c[12] == "1",
            brownout=c[13] == "1", case=c[14],
        ))
    return out


# ---------------------------------------------------------------------------
# scenario files


_UNIT_SCALE = {
    "": 1.0, "w": 1.0, "mw": 1e-3, "uw": 1e-6, "j": 1.0, "mj": 1e-3,
    "uj": 1e-6, "s": 1.0, "ms": 1e-3, "v": 1.0, "mv": 1e-3, "f": 1.0,
    "mf": 1e-3, "ohm": 1.0, "kohm": 1e3, "mohm": 1e6, "m": 1.0,
}


def _quantity(text, key):
    """Parse '380 mJ' style values; returns (value_SI, was_decibel)."""
    parts = text.split()
    if len(parts) > 2:
        raise ScenarioError(f"{key}: cannot parse value {text!r}")
    try:
        num = float(parts[0])
    except ValueError:
        raise ScenarioError(f"{key}: cannot parse number in {text!r}") from None
    unit = parts[1] if len(parts) == 2 else ""
    if unit.lower() == "db":
        return num, True
    scale = _UNIT_SCALE.get(unit.lower())
    if scale is None:
        raise ScenarioError(f"{key}: unknown unit {unit!r}")
    return num * scale, False


def _read_sections(path):
    sections = {}
    current = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if "=" not in line or current is None:
            raise ScenarioError(f"{path}:{lineno}: expected 'key = value' "
                                f"inside a [section], got {raw!r}")
        key, _, value = line.partition("=")
        sections[current].append((key.strip().lower(), value.strip()))
    return sections


def _as_map(pairs, section, multi=()):
    out = {}
    for key, value in pairs:
        if key in multi:
            out.setdefault(key, []).append(value)
        elif key in out:
            raise ScenarioError(f"duplicate key {key!r} in [{section}]")
        else:
            out[key] = value
    return out


def _si(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise ScenarioError(f"missing required key {key!r}")
        return default
    val, is_db = _quantity(kv.pop(key), key)
    if is_db:
        raise ScenarioError(f"{key}: dB not valid here")
    return val


def _build_channel(kv):
    steps = kv.pop("step", None)
    if steps is not None:
        parsed = []
        for s in steps:
            try:
                t_txt, db_txt = s.split(",")
            except ValueError:
                raise ScenarioError(f"step: expected '<t> s, <atten> dB', "
                                    f"got {s!r}") from None
            t, t_db = _quantity(t_txt.strip(), "step time")
            db, is_db = _quantity(db_txt.strip(), "step attenuation")
            if t_db or not is_db:
                raise ScenarioError(f"step: expected '<t> s, <atten> dB', "
                                    f"got {s!r}")
            parsed.append((t, db_to_attenuation(db)))
        return AttenuationSchedule(steps=tuple(parsed)), None
    if "attenuation" in kv:
        val, is_db = _quantity(kv.pop("attenuation"), "attenuation")
        return FixedAttenuation(db_to_attenuation(val) if is_db else val), None
    if "g_ref" in kv:
        ch = PathLoss(g_ref=_si(kv, "g_ref"), exponent=_si(kv, "exponent"))
        return ch, _si(kv, "distance")
    raise ScenarioError("channel section needs attenuation, step lines, "
                        "or g_ref/exponent/distance")


_CONTROLLER_KEYS = {
    "e_tgt": "si", "s_tgt": "si", "tau_tgt": "num", "c_p": "num",
    "c_i": "num", "beta_upsilon": "si", "beta_tau": "num",
    "alpha_min": "num", "upsilon_max": "si", "tau_max": "num",
    "smoothing": "num", "scheme": "str",
}


def parse_scenario(path):
    """Parse a scenario file into a Scenario (fixtures loaded, units applied)."""
    path = Path(path)
    base = path.parent
    sections = _read_sections(path)
    known = {"device", "timing", "channel", "controller", "run", "fixed"}
    for name in sections:
        if name not in known:
            raise ScenarioError(f"unknown section [{name}]")

    dev = _as_map(sections.get("device", []), "device")

    def fixture(key, loader, builtin_name):
        ref = dev.pop(key, "builtin")
        if ref == "builtin":
            return loader(packaged_fixture(builtin_name))
        target = base / ref
        if not target.exists():
            raise ScenarioError(f"{key}: fixture file {target} not found")
        return loader(target)

    pae = fixture("pae_curve", load_pae_curve, "pae_curve.csv")
    surf = fixture("iv_surface", load_iv_surface, "iv_surface.csv")
    loads_ref = dev.pop("loads", "builtin")
    if loads_ref == "builtin":
        loads = default_loads()
    else:
        target = base / loads_ref
        if not target.exists():
            raise ScenarioError(f"loads: fixture file {target} not found")
        from .calibration import fit_loads
        loads = fit_loads(load_trace(target, "loads"))

    amp = AmplifierModel(pae_curve=pae,
                         src_power=_si(dev, "src_power", 4e-3),
                         max_output=_si(dev, "max_output", 2.3))
    cap = SupercapModel(capacitance=_si(dev, "capacitance", 0.1),
                        leak_resistance=_si(dev, "leak_resistance", 196e3),
                        v_min=_si(dev, "v_min", 1.8),
                        v_max=_si(dev, "v_max", 3.0))
    if dev:
        raise ScenarioError(f"unknown device keys: {sorted(dev)}")

    tim = _as_map(sections.get("timing", []), "timing")
    timing = FrameTiming(frame_len=_si(tim, "frame", 0.100),
                         t_rx=_si(tim, "t_rx", 2.34e-3),
                         t_act=_si(tim, "t_act", 5.01e-3),
                         t_tx=_si(tim, "t_tx", 1.81e-3))
    if tim:
        raise ScenarioError(f"unknown timing keys: {sorted(tim)}")

    chan_kv = _as_map(sections.get("channel", []), "channel", multi=("step",))
    channel, distance = _build_channel(chan_kv)
    if chan_kv:
        raise ScenarioError(f"unknown channel keys: {sorted(chan_kv)}")

    device = DeviceParams(amplifier=amp, channel=channel, harvester=surf,
                          supercap=cap, loads=loads, timing=timing)

    ctl_kv = _as_map(sections.get("controller", []), "controller")
    controller = {}
    for key, kind in _CONTROLLER_KEYS.items():
        if key not in ctl_kv:
            continue
        raw = ctl_kv.pop(key)
        if kind == "str":
            controller[key] = raw
        elif kind == "si":
            controller[key] = _si({key: raw}, key)
        else:
            try:
                controller[key] = float(raw)
            except ValueError:
                raise ScenarioError(f"{key}: expected a number, "
                                    f"got {raw!r}") from None
    if ctl_kv:
        raise ScenarioError(f"unknown controller keys: {sorted(ctl_kv)}")

    run_kv = _as_map(sections.get("run", []), "run")
    frames = int(_si(run_kv, "frames"))
    initial = _si(run_kv, "initial_energy", 0.380)
    noise = _si(run_kv, "noise_std", 0.0)
    loss = _si(run_kv, "loss_prob", 0.0)
    seed = run_kv.pop("seed", None)
    if seed is not None:
        try:
            seed = int(seed)
        except ValueError:
            raise ScenarioError(f"seed: expected an integer, "
                                f"got {seed!r}") from None
    if run_kv:
        raise ScenarioError(f"unknown run keys: {sorted(run_kv)}")

    fixed = None
    if "fixed" in sections:
        fx = _as_map(sections["fixed"], "fixed")
        fixed = FixedControl(alpha=_si(fx, "alpha"),
                             upsilon=_si(fx, "upsilon"),
                             tau=int(_si(fx, "tau", 1.0)))
        if fx:
            raise ScenarioError(f"unknown fixed keys: {sorted(fx)}")

    sc = Scenario(device=device, controller=controller, frames=frames,
                  initial_energy=initial, noise_std=noise, loss_prob=loss,
                  seed=seed, distance=distance, fixed=fixed, name=path.stem)
    sc.validate()
    return sc
