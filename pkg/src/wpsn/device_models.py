"""Physical component models for an RF power beacon and the sensor node it feeds.

Immutable parameter containers plus pure functions for the transmit
amplifier, the over-the-air channel, the RF harvester front end, the
supercapacitor buffer and the per-mode sensor loads.  All quantities are SI
(watts, joules, volts, amperes, seconds, ohms); decibel helpers are provided
for channel attenuation only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _kernels_py as _ref


class SensorMode(IntEnum):
    IDLE = 0
    ACTIVE = 1
    RECEIVE = 2
    TRANSMIT = 3


_AWAKE_SEQUENCE = (SensorMode.RECEIVE, SensorMode.ACTIVE, SensorMode.TRANSMIT)


def db_to_attenuation(db):
    """Convert a path attenuation in dB to the linear power gain h <= 1."""
    return 10.0 ** (-db / 10.0)


def attenuation_to_db(h):
    if h <= 0.0:
        raise ValueError("attenuation must be positive")
    return -10.0 * math.log10(h)


# ---------------------------------------------------------------------------
# amplifier


@dataclass(frozen=True)
class PaeCurve:
    """Measured power-added efficiency versus output power, piecewise linear.

    Lookups clamp at both table ends.
    """
    power: np.ndarray   # W, strictly increasing
    pae: np.ndarray     # fractions in (0, 1]

    def __post_init__(self):
        p = np.asarray(self.power, dtype=np.float64)
        y = np.asarray(self.pae, dtype=np.float64)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("PAE curve needs at least two points")
        if y.shape != p.shape:
            raise ValueError("PAE curve arrays must have matching length")
        if not np.all(np.diff(p) > 0):
            raise ValueError("PAE curve powers must be strictly increasing")
        if np.any(y <= 0.0) or np.any(y > 1.0):
            raise ValueError("PAE values must lie in (0, 1]")
        object.__setattr__(self, "power", p)
        object.__setattr__(self, "pae", y)

    def theta(self, p_tx):
        return float(np.interp(p_tx, self.power, self.pae))


@dataclass(frozen=True)
class AmplifierModel:
    pae_curve: PaeCurve
    src_power: float     # W drive level at the amplifier input
    max_output: float    # W

    def __post_init__(self):
        if not 0.0 < self.src_power < self.max_output:
            raise ValueError("need 0 < src_power < max_output")


def amp_consumption(amp, p_tx, on=True):
    """DC power drawn by the amplifier when emitting p_tx watts.

    Consumption is p_tx / theta(p_tx) while on and exactly zero while off.
    """
    if not on:
        return 0.0
    if p_tx <= 0.0:
        raise ValueError("transmit power must be positive while on")
    if p_tx > amp.max_output:
        raise ValueError(
            f"transmit power {p_tx:g} W exceeds maximum output {amp.max_output:g} W")
    return p_tx / amp.pae_curve.theta(p_tx)


# ---------------------------------------------------------------------------
# channel


@dataclass(frozen=True)
class PathLoss:
    """h = g_ref / d**exponent for transmit-receive separation d in metres."""
    g_ref: float
    exponent: float

    def __post_init__(self):
        if self.g_ref <= 0.0 or self.exponent <= 0.0:
            raise ValueError("path-loss parameters must be positive")


@dataclass(frozen=True)
class FixedAttenuation:
    h: float

    def __post_init__(self):
        if not 0.0 < self.h <= 1.0:
            raise ValueError("attenuation must lie in (0, 1]")


@dataclass(frozen=True)
class AttenuationSchedule:
    """Stepwise attenuation: (start_time_s, h) pairs, times strictly increasing."""
    steps: tuple

    def __post_init__(self):
        if not self.steps:
            raise ValueError("schedule needs at least one step")
        times = [t for t, _ in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("schedule times must be strictly increasing")
        for _, h in self.steps:
            if not 0.0 < h <= 1.0:
                raise ValueError("attenuation must lie in (0, 1]")


def channel_attenuation(ch, d=None, t=0.0):
    """Resolve the linear power attenuation h for a channel model."""
    if isinstance(ch, FixedAttenuation):
        return ch.h
    if isinstance(ch, PathLoss):
        if d is None or d <= 0.0:
            raise ValueError("path-loss channel needs a positive distance")
        return ch.g_ref / d ** ch.exponent
    if isinstance(ch, AttenuationSchedule):
        if t < ch.steps[0][0]:
            raise ValueError(f"time {t:g} s precedes first schedule step")
        h = ch.steps[0][1]
        for t0, hv in ch.steps:
            if t0 <= t:
                h = hv
            else:
                break
        return h
    raise TypeError(f"unknown channel model {type(ch).__name__}")


def receive_power(p_tx, h):
    if p_tx < 0.0 or not 0.0 < h <= 1.0:
        raise ValueError("need p_tx >= 0 and 0 < h <= 1")
    return h * p_tx


# ---------------------------------------------------------------------------
# harvester


@dataclass(frozen=True)
class HarvesterIvSurface:
    """Measured harvester output current over (terminal voltage, receive power).

    v_axis ascending volts, p_axis ascending watts, current in amperes with
    shape (len(v_axis), len(p_axis)).  Currents must be non-negative,
    non-increasing in v (rectifier behaviour, within rel_tol slack) and
    non-decreasing in p.
    """
    v_axis: np.ndarray
    p_axis: np.ndarray
    current: np.ndarray
    rel_tol: float = 0.02
    logp_axis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.v_axis, dtype=np.float64)
        p = np.ascontiguousarray(self.p_axis, dtype=np.float64)
        g = np.ascontiguousarray(self.current, dtype=np.float64)
        if v.ndim != 1 or p.ndim != 1 or v.size < 2 or p.size < 2:
            raise ValueError("surface needs at least a 2x2 grid")
        if g.shape != (v.size, p.size):
            raise ValueError(
                f"current grid shape {g.shape} does not match axes ({v.size}, {p.size})")
        if not np.all(np.diff(v) > 0):
            raise ValueError("voltage axis must be strictly increasing")
        if not np.all(np.diff(p) > 0):
            raise ValueError("power axis must be strictly increasing")
        if p[0] <= 0.0:
            raise ValueError("receive powers must be positive")
        bad = np.argwhere(g < 0.0)
        if bad.size:
            i, j = bad[0]
            raise ValueError(f"negative current at row {i} col {j}")
        slack = self.rel_tol * np.max(np.abs(g))
        rise = np.diff(g, axis=0)
        bad = np.argwhere(rise > slack)
        if bad.size:
            i, j = bad[0]
            raise ValueError(
                f"current increases with voltage beyond tolerance at row {i + 1} col {j}")
        fall = np.diff(g, axis=1)
        bad = np.argwhere(fall < -slack)
        if bad.size:
            i, j = bad[0]
            raise ValueError(
                f"current decreases with power beyond tolerance at row {i} col {j + 1}")
        object.__setattr__(self, "v_axis", v)
        object.__setattr__(self, "p_axis", p)
        object.__setattr__(self, "current", g)
        object.__setattr__(self, "logp_axis", np.log10(p))


def harvester_current(surf, v, p_rx, v_cutoff=math.inf):
    """Harvester output current (A); zero above the cut-off voltage."""
    if v < 0.0:
        raise ValueError("voltage must be non-negative")
    return _ref.bilinear_iv(surf.v_axis, surf.logp_axis, surf.current,
                            surf.p_axis[0], v_cutoff, v, p_rx)


def harvesting_efficiency(surf, v, p_rx, v_cutoff=math.inf):
    """Fraction of receive power delivered to storage: current*v / p_rx."""
    if p_rx <= 0.0:
        raise ValueError("receive power must be positive")
    return harvester_current(surf, v, p_rx, v_cutoff) * v / p_rx


# ---------------------------------------------------------------------------
# storage


@dataclass(frozen=True)
class SupercapModel:
    capacitance: float       # F
    leak_resistance: float   # ohm, may be inf
    v_min: float             # V, below this the node browns out
    v_max: float             # V, harvester cut-off / full charge

    def __post_init__(self):
        if self.capacitance <= 0.0 or self.leak_resistance <= 0.0:
            raise ValueError("capacitance and leak resistance must be positive")
        if not 0.0 <= self.v_min < self.v_max:
            raise ValueError("need 0 <= v_min < v_max")

    @property
    def e_min(self):
        return 0.5 * self.capacitance * self.v_min ** 2

    @property
    def e_max(self):
        return 0.5 * self.capacitance * self.v_max ** 2


def energy_to_voltage(cap, e):
    """v = sqrt(2 E / C) for stored energy E = C v^2 / 2."""
    if e < 0.0:
        raise ValueError("energy must be non-negative")
    return math.sqrt(2.0 * e / cap.capacitance)


def voltage_to_energy(cap, v):
    if v < 0.0:
        raise ValueError("voltage must be non-negative")
    return 0.5 * cap.capacitance * v * v


# ---------------------------------------------------------------------------
# sensor loads and frame timing


@dataclass(frozen=True)
class LoadTable:
    """Per-mode constant-resistance (gamma, ohm) and constant-current (zeta, A) loads."""
    gamma: dict
    zeta: dict

    def __post_init__(self):
        for m in SensorMode:
            if m not in self.gamma or m not in self.zeta:
                raise ValueError(f"load table missing mode {m.name}")
            if self.gamma[m] <= 0.0:
                raise ValueError("resistances must be positive (inf allowed)")
            if self.zeta[m] < 0.0:
                raise ValueError("constant currents must be non-negative")

    def gamma_inv_array(self):
        return np.array([1.0 / self.gamma[m] for m in SensorMode], dtype=np.float64)

    def zeta_array(self):
        return np.array([self.zeta[m] for m in SensorMode], dtype=np.float64)


def sensor_current(loads, v, mode):
    """Load current draw i = v / gamma(mode) + zeta(mode)."""
    if v < 0.0:
        raise ValueError("voltage must be non-negative")
    return v / loads.gamma[mode] + loads.zeta[mode]


@dataclass(frozen=True)
class FrameTiming:
    """Frame length and the awake-burst segment durations (seconds)."""
    frame_len: float = 0.100
    t_rx: float = 2.34e-3
    t_act: float = 5.01e-3
    t_tx: float = 1.81e-3

    def __post_init__(self):
        if min(self.frame_len, self.t_rx, self.t_act, self.t_tx) <= 0.0:
            raise ValueError("durations must be positive")
        if self.t_rx + self.t_act + self.t_tx >= self.frame_len:
            raise ValueError("awake burst must fit inside the frame")

    @property
    def t_idle(self):
        return self.frame_len - self.t_rx - self.t_act - self.t_tx

    def mode_durations(self):
        """Durations of the awake-frame segments, keyed by mode."""
        return {
            SensorMode.RECEIVE: self.t_rx,
            SensorMode.ACTIVE: self.t_act,
            SensorMode.TRANSMIT: self.t_tx,
            SensorMode.IDLE: self.t_idle,
        }


# ---------------------------------------------------------------------------
# aggregate


@dataclass(frozen=True)
class DeviceParams:
    """Complete physical model of one beacon-node pair."""
    amplifier: AmplifierModel
    channel: object
    harvester: HarvesterIvSurface
    supercap: SupercapModel
    loads: LoadTable
    timing: FrameTiming

    def __post_init__(self):
        # fresh per-instance cache for packed kernel parameters
        object.__setattr__(self, "_pack_cache", {})

    def harvest_current(self, v, p_rx):
        return harvester_current(self.harvester, v, p_rx, self.supercap.v_max)

    def harvest_efficiency(self, e, p_rx):
        """Efficiency at stored energy e (cut-off applied above v_max)."""
        v = energy_to_voltage(self.supercap, e)
        return harvesting_efficiency(self.harvester, v, p_rx, self.supercap.v_max)


def default_loads():
    """Measured load table for an MSP430+CC2420 class mote at 626 ohm MCU load."""
    r = 626.0
    return LoadTable(
        gamma={SensorMode.IDLE: math.inf, SensorMode.ACTIVE: r,
               SensorMode.RECEIVE: r, SensorMode.TRANSMIT: r},
        zeta={SensorMode.IDLE: 0.035e-3, SensorMode.ACTIVE: 0.035e-3,
              SensorMode.RECEIVE: 15.87e-3, SensorMode.TRANSMIT: 14.55e-3},
    )


def default_supercap():
    return SupercapModel(capacitance=0.1, leak_resistance=196e3, v_min=1.8, v_max=3.0)


def default_device_params(channel=None):
    """Device built from the packaged fixture curves and the default constants."""
    from .calibration import load_iv_surface, load_pae_curve, packaged_fixture

    pae = load_pae_curve(packaged_fixture("pae_curve.csv"))
    surf = load_iv_surface(packaged_fixture("iv_surface.csv"))
    amp = AmplifierModel(pae_curve=pae, src_power=4e-3, max_output=2.3)
    if channel is None:
        channel = FixedAttenuation(db_to_attenuation(16.69))
    return DeviceParams(
        amplifier=amp,
        channel=channel,
        harvester=surf,
        supercap=default_supercap(),
        loads=default_loads(),
        timing=FrameTiming(),
    )
