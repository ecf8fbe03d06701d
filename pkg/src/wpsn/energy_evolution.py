"""Stored-energy dynamics of the sensor node.

Two views of the same physics:

* a continuous one, integrating the storage ODE
  dE/dt = i_h(v, p_rx) v - v^2/gamma - zeta v - v^2/R_leak
  across one frame with its mode segments, and
* a discrete frame-level one that pins the terminal voltage for the frame
  and updates E once per frame (the form the controller reasons about).

The continuous integrator delegates to the selected kernel backend so the
compiled and pure paths produce bit-identical trajectories.
"""
from __future__ import annotations

from dataclasses import dataclass

from ._backend import kernels, pack_params
from .device_models import SensorMode, amp_consumption, energy_to_voltage

_AWAKE_MODES = (SensorMode.RECEIVE, SensorMode.ACTIVE, SensorMode.TRANSMIT)


@dataclass(frozen=True)
class EnergyState:
    """Stored energy after a step plus that step's energy accounting (all J)."""
    energy: float
    harvested: float = 0.0
    consumed: float = 0.0
    leaked: float = 0.0


def _check_link(upsilon, h):
    if upsilon < 0.0:
        raise ValueError("transfer power must be non-negative")
    if not 0.0 < h <= 1.0:
        raise ValueError("attenuation must lie in (0, 1]")


# ---------------------------------------------------------------------------
# continuous view


def energy_derivative(params, e, p_rx, mode):
    """dE/dt in watts at stored energy e with receive power p_rx in `mode`."""
    kp = pack_params(params)
    return kernels.energy_rhs(kp, e, p_rx, int(mode))


def integrate_frame(params, e0, alpha, upsilon, h, awake, dt=1e-3):
    """Integrate one frame of the storage ODE.

    The beacon emits `upsilon` watts through attenuation h for the first
    alpha fraction of the frame.  An awake frame runs the
    receive/active/transmit burst at the frame start; an asleep frame idles
    throughout.  `dt` caps the RK4 substep; substeps are aligned to the mode
    and amplifier-off boundaries.  Returns the frame-end EnergyState carrying
    harvested, consumed and leaked energy for the frame.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("duty fraction must lie in [0, 1]")
    _check_link(upsilon, h)
    kp = pack_params(params, dt)
    e, acc_h, acc_s, acc_l = kernels.integrate_frame(
        kp, float(e0), float(alpha), float(h * upsilon), bool(awake))
    return EnergyState(energy=e, harvested=acc_h, consumed=acc_s, leaked=acc_l)


# ---------------------------------------------------------------------------
# discrete frame-level view (terminal voltage pinned per frame)


def harvest_rate(params, e, p_rx):
    """Power into storage (W) at pinned energy e, zero above the cut-off voltage."""
    if p_rx <= 0.0:
        return 0.0
    v = energy_to_voltage(params.supercap, e)
    return params.harvest_current(v, p_rx) * v


def harvested_energy(params, e, alpha, upsilon, h):
    """Energy gained per frame (J): beacon on for alpha of the frame."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("duty fraction must lie in [0, 1]")
    _check_link(upsilon, h)
    return harvest_rate(params, e, h * upsilon) * alpha * params.timing.frame_len


def _mode_draw(params, v):
    g_inv = params.loads.gamma_inv_array()
    zeta = params.loads.zeta_array()
    return v * v * g_inv + zeta * v


def idle_frame_cost(params, e):
    """Cost (J/frame) of an asleep frame: idle load plus self-discharge."""
    v = energy_to_voltage(params.supercap, e)
    xi = _mode_draw(params, v)
    r = params.supercap.leak_resistance
    leak = 0.0 if r == float("inf") else v * v / r
    return (xi[SensorMode.IDLE] + leak) * params.timing.frame_len


def awake_extra_cost(params, e):
    """Additional cost (J) an awake frame adds on top of an asleep one."""
    v = energy_to_voltage(params.supercap, e)
    xi = _mode_draw(params, v)
    dur = params.timing.mode_durations()
    return sum((xi[m] - xi[SensorMode.IDLE]) * dur[m] for m in _AWAKE_MODES)


def avg_consumed_energy(params, e, r):
    """Average node cost (J/frame) when waking in a fraction r of frames."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("wake fraction must lie in [0, 1]")
    return idle_frame_cost(params, e) + awake_extra_cost(params, e) * r


def consumed_energy(params, e, awake):
    """Node cost (J) of a single frame at pinned energy e."""
    return avg_consumed_energy(params, e, 1.0 if awake else 0.0)


def _clamped(params, e_next):
    e_max = params.supercap.e_max
    if e_next > e_max:
        return e_max
    if e_next < 0.0:
        return 0.0
    return e_next


def discrete_step(params, e, alpha, upsilon, h, awake):
    """One frame of the discrete model: E+ = clamp(E + gain - cost, 0, E_max)."""
    gain = harvested_energy(params, e, alpha, upsilon, h)
    cost = consumed_energy(params, e, awake)
    v = energy_to_voltage(params.supercap, e)
    r = params.supercap.leak_resistance
    leak = 0.0 if r == float("inf") else v * v / r * params.timing.frame_len
    return EnergyState(energy=_clamped(params, e + gain - cost),
                       harvested=gain, consumed=cost - leak, leaked=leak)


def epoch_step(params, e, ctrl, h):
    """Discrete step across one epoch of ctrl.tau frames, energy pinned at e.

    The epoch holds one awake frame and tau - 1 asleep frames; per-frame gain
    and cost are both evaluated at the epoch-start energy (the capacitor is
    large, so within-epoch drift is second order).  tau may be real-valued.
    """
    tau = ctrl.tau
    if tau < 1.0:
        raise ValueError("epoch length must be at least one frame")
    gain = harvested_energy(params, e, ctrl.alpha, ctrl.upsilon, h) * tau
    cost = avg_consumed_energy(params, e, 1.0 / tau) * tau
    v = energy_to_voltage(params.supercap, e)
    r = params.supercap.leak_resistance
    leak = (0.0 if r == float("inf")
            else v * v / r * params.timing.frame_len * tau)
    return EnergyState(energy=_clamped(params, e + gain - cost),
                       harvested=gain, consumed=cost - leak, leaked=leak)


# ---------------------------------------------------------------------------
# beacon-side accounting


def avg_amplifier_power(amp, alpha, upsilon):
    """Beacon DC draw (W) averaged over a frame: duty times on-state draw."""
    if alpha == 0.0:
        return 0.0
    if not 0.0 < alpha <= 1.0:
        raise ValueError("duty fraction must lie in [0, 1]")
    return alpha * amp_consumption(amp, upsilon)
