"""Beacon-side energy management: optimal transfer strategy and live controller.

Two layers:

* Planning: given a target stored energy, a wake-up fraction and a known
  channel, find the (duty cycle, transfer power, wake-up interval) tuple that
  minimizes average amplifier draw subject to energy neutrality.  Includes
  the brute-force and Lagrangian-bound machinery used to verify it.
* Live control: a PI loop on the stored-energy error drives a scalar x that
  a continuous piecewise map turns into the control tuple, adjusting the
  duty cycle first, then the transfer power, then the wake-up interval.

Planning functions evaluate harvest on the raw I-V surface without the
storage cut-off: they predict gains for operation below the cap, and the
cut-off would wrongly zero the top grid row of the monotonicity tests.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .device_models import energy_to_voltage, harvesting_efficiency
from .energy_evolution import (avg_consumed_energy, awake_extra_cost,
                               idle_frame_cost)

_UPSILON_FLOOR = 1e-9  # W, keeps baseline-map output a valid positive power
_GRID_SPAN = 1e-4      # lowest grid point as a fraction of max output


@dataclass(frozen=True)
class ControlTuple:
    """(duty cycle, transfer power W, wake-up interval frames) for one epoch.

    tau is real-valued here; round with applied_tau() when commanding the node.
    """
    alpha: float
    upsilon: float
    tau: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("duty cycle must lie in (0, 1]")
        if self.upsilon <= 0.0:
            raise ValueError("transfer power must be positive")
        if self.tau < 1.0:
            raise ValueError("wake-up interval must be at least one frame")


def applied_tau(ctrl):
    """Integer wake-up interval actually commanded: nearest integer, min 1."""
    if math.isinf(ctrl.tau):
        raise ValueError("cannot apply an infeasible wake-up interval")
    return max(1, int(math.floor(ctrl.tau + 0.5)))


@dataclass(frozen=True)
class MaxEfficiencyPoint:
    """Transfer power maximizing PAE times harvesting efficiency end to end."""
    upsilon_hat: float   # W
    mu_hat: float        # reciprocal of the peak efficiency product times h
    s_hat: float         # W arriving at the node, h * upsilon_hat
    h_hat: float         # W into storage at s_hat


@dataclass(frozen=True)
class SensorReport:
    """Measurements the node radios back on an awake frame."""
    energy_meas: float    # J
    rx_power_meas: float  # W seen while the amplifier was on
    epoch_index: int = 0

    def __post_init__(self):
        if self.energy_meas < 0.0 or self.rx_power_meas < 0.0:
            raise ValueError("measurements must be non-negative")


@dataclass
class ControllerState:
    """Configuration plus mutable loop state of one beacon controller.

    Gains act on the stored-energy error expressed in millijoules; the
    published gain values only produce usable x magnitudes at that scale.
    """
    e_tgt: float = 0.380          # J
    tau_tgt: float = 1.0          # frames
    s_tgt: float = 0.020          # W target receive power at the node
    c_p: float = 0.0              # per mJ
    c_i: float = 0.01             # per mJ per epoch
    beta_upsilon: float = 0.1     # W of transfer power per unit x
    beta_tau: float = 1.0         # frames per unit x
    alpha_min: float = 0.1
    upsilon_max: float = 2.3      # W
    tau_max: float = 100.0        # frames, report-starvation guard
    smoothing: float = 1.0        # 1 = use each channel estimate as-is
    scheme: str = "proposed"      # or "baseline" (duty cycle pinned to 1)
    # loop state
    x: float = 0.0
    integral_error: float = 0.0   # mJ accumulated
    h_estimate: float | None = None
    upsilon_hat: float | None = None
    last_tuple: ControlTuple | None = None
    last_case: str = "I"
    starved: bool = False
    stale_epochs: int = 0
    epoch: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha_min < 1.0:
            raise ValueError("alpha_min must lie in (0, 1)")
        if self.c_i < 0.0 or self.c_p < 0.0:
            raise ValueError("gains must be non-negative")
        if self.beta_upsilon <= 0.0 or self.beta_tau <= 0.0:
            raise ValueError("map slopes must be positive")
        if self.tau_max < self.tau_tgt or self.tau_tgt < 1.0:
            raise ValueError("need 1 <= tau_tgt <= tau_max")
        if not 0.0 < self.smoothing <= 1.0:
            raise ValueError("smoothing factor must lie in (0, 1]")
        if self.scheme not in ("proposed", "baseline"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def bootstrap_tuple(self):
        """Safe standing tuple for frames before the first report."""
        alpha = 1.0 if self.scheme == "baseline" else self.alpha_min
        return ControlTuple(alpha, self.upsilon_max, self.tau_tgt)


# ---------------------------------------------------------------------------
# harvest helpers (raw surface, no storage cut-off)


def _eta(params, e, p_rx):
    if p_rx <= 0.0:
        return 0.0
    v = energy_to_voltage(params.supercap, e)
    return harvesting_efficiency(params.harvester, v, p_rx)


def _current_row(surf, v):
    """Surface currents at voltage v, one value per power knot."""
    va = surf.v_axis
    if v <= va[0]:
        i, w = 0, 0.0
    elif v >= va[-1]:
        i, w = va.size - 2, 1.0
    else:
        i = int(np.searchsorted(va, v, side="right")) - 1
        w = (v - va[i]) / (va[i + 1] - va[i])
    return (1.0 - w) * surf.current[i] + w * surf.current[i + 1]


def _eta_vec(params, e, p_rx):
    """Vectorized harvesting efficiency, same edge rules as the scalar path."""
    v = energy_to_voltage(params.supercap, e)
    row = _current_row(params.harvester, v)
    p = np.asarray(p_rx, dtype=np.float64)
    p_min = params.harvester.p_axis[0]
    cur = np.empty_like(p)
    lo = p < p_min
    cur[lo] = row[0] * (p[lo] / p_min)
    cur[~lo] = np.interp(np.log10(p[~lo]), params.harvester.logp_axis, row)
    cur[p <= 0.0] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(p > 0.0, cur * v / p, 0.0)
    return eta


def _upsilon_grid(params, n):
    top = params.amplifier.max_output
    return np.geomspace(top * _GRID_SPAN, top, n)


# ---------------------------------------------------------------------------
# planning layer


def max_efficiency_point(params, e_tgt, h, n_grid=512):
    """Transfer power maximizing theta(u) * eta(e_tgt, h u) over (0, max].

    Dense log-spaced scan followed by ternary refinement of the winning
    bracket; the scan endpoints stay in the candidate set so a boundary
    maximum is returned exactly.
    """
    if not 0.0 < h <= 1.0:
        raise ValueError("attenuation must lie in (0, 1]")
    sc = params.supercap
    if not sc.e_min <= e_tgt <= sc.e_max:
        raise ValueError("target energy outside the operating band")
    pae = params.amplifier.pae_curve
    grid = _upsilon_grid(params, n_grid)
    obj = np.interp(grid, pae.power, pae.pae) * _eta_vec(params, e_tgt, h * grid)
    k = int(np.argmax(obj))
    if obj[k] <= 0.0:
        raise ValueError("harvester dead at this attenuation")

    def f(u):
        return pae.theta(u) * _eta(params, e_tgt, h * u)

    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, n_grid - 1)]
    a, b = math.log(lo), math.log(hi)
    for _ in range(70):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if f(math.exp(m1)) < f(math.exp(m2)):
            a = m1
        else:
            b = m2
    candidates = [grid[k], lo, hi, math.exp(0.5 * (a + b))]
    ups_hat = max(candidates, key=f)
    theta_hat = pae.theta(ups_hat)
    eta_hat = _eta(params, e_tgt, h * ups_hat)
    return MaxEfficiencyPoint(
        upsilon_hat=float(ups_hat),
        mu_hat=1.0 / (theta_hat * eta_hat * h),
        s_hat=h * ups_hat,
        h_hat=eta_hat * h * ups_hat,
    )


def _smallest_harvest_root(params, e_tgt, h, target_w, lo, hi, rel_tol):
    """Smallest u in [lo, hi] with eta(e, h u) * h u = target_w (watts)."""
    def f(u):
        return _eta(params, e_tgt, h * u) * h * u - target_w

    scan = np.geomspace(lo, hi, 64)
    vals = np.array([f(u) for u in scan])
    if np.any(np.diff(vals) < -1e-15):
        warnings.warn("harvested power not monotone in transfer power; "
                      "taking the first crossing", stacklevel=2)
    cross = np.nonzero(vals >= 0.0)[0]
    if cross.size == 0:
        raise ValueError("no feasible transfer power in bracket")
    i = int(cross[0])
    if i == 0:
        return float(scan[0])
    a, b = float(scan[i - 1]), float(scan[i])
    while (b - a) / b > rel_tol:
        m = 0.5 * (a + b)
        if f(m) >= 0.0:
            b = m
        else:
            a = m
    return b


def optimal_strategy(params, e_tgt, r_tgt, h, alpha_min=0.1, rel_tol=1e-4):
    """Minimum-amplifier-draw tuple sustaining energy neutrality at e_tgt.

    Returns (ControlTuple, case_label).  Case I trims the duty cycle at the
    peak-efficiency power; Case II runs full duty and raises the power to the
    smallest value balancing the budget; Case III runs flat out and stretches
    the wake-up interval; "infeasible" means even that cannot cover the idle
    draw (tau is inf in the returned tuple).
    """
    if not 0.0 < r_tgt <= 1.0:
        raise ValueError("wake fraction must lie in (0, 1]")
    t_frame = params.timing.frame_len
    q = avg_consumed_energy(params, e_tgt, r_tgt)  # J/frame
    mep = max_efficiency_point(params, e_tgt, h)
    cap_hat = mep.h_hat * t_frame                  # J/frame at full duty
    if q <= cap_hat:
        alpha = max(q / cap_hat, alpha_min)
        return ControlTuple(alpha, mep.upsilon_hat, 1.0 / r_tgt), "I"
    ups_max = params.amplifier.max_output
    cap_max = _eta(params, e_tgt, h * ups_max) * h * ups_max * t_frame
    if q <= cap_max:
        ups = _smallest_harvest_root(params, e_tgt, h, q / t_frame,
                                     mep.upsilon_hat, ups_max, rel_tol)
        return ControlTuple(1.0, ups, 1.0 / r_tgt), "II"
    surplus = cap_max - idle_frame_cost(params, e_tgt)
    if surplus <= 0.0:
        return ControlTuple(1.0, ups_max, math.inf), "infeasible"
    tau = awake_extra_cost(params, e_tgt) / surplus
    return ControlTuple(1.0, ups_max, tau), "III"


def brute_force_strategy(params, e_tgt, r_tgt, h,
                         n_alpha=512, n_upsilon=512, alpha_min=0.1):
    """Exact minimum of average amplifier draw over the alpha x upsilon grid.

    The objective is increasing in alpha, so the grid minimum is attained at
    the smallest feasible grid alpha of each power column; reducing
    columnwise evaluates the full product grid exactly.  Returns
    (alpha, upsilon, omega) or None when no grid point is feasible.
    """
    if not 0.0 < r_tgt <= 1.0:
        raise ValueError("wake fraction must lie in (0, 1]")
    t_frame = params.timing.frame_len
    q = avg_consumed_energy(params, e_tgt, r_tgt)
    ups = _upsilon_grid(params, n_upsilon)
    pae = params.amplifier.pae_curve
    theta = np.interp(ups, pae.power, pae.pae)
    harvest = _eta_vec(params, e_tgt, h * ups) * h * ups * t_frame
    alphas = np.linspace(alpha_min, 1.0, n_alpha)
    with np.errstate(divide="ignore"):
        need = np.where(harvest > 0.0, q / harvest, np.inf)
    idx = np.searchsorted(alphas, need, side="left")
    ok = idx < n_alpha
    if not np.any(ok):
        return None
    omega = np.full(n_upsilon, np.inf)
    omega[ok] = alphas[idx[ok]] * ups[ok] / theta[ok]
    j = int(np.argmin(omega))
    return float(alphas[idx[j]]), float(ups[j]), float(omega[j])


def dual_bound_check(params, e_tgt, r_tgt, h, mu,
                     alpha_min=0.1, n_grid=512):
    """Lagrangian lower bound g(mu) next to the brute-force primal optimum.

    The dual is evaluated over the power grid plus two closure candidates:
    the vanishing-power limit (penalty term only) and the peak-efficiency
    power, so g(mu_hat) reproduces the Case I optimum instead of being lost
    between grid points.  Returns (g_mu, omega_star).
    """
    if mu < 0.0:
        raise ValueError("multiplier must be non-negative")
    t_frame = params.timing.frame_len
    q_w = avg_consumed_energy(params, e_tgt, r_tgt) / t_frame
    mep = max_efficiency_point(params, e_tgt, h)
    ups = np.append(_upsilon_grid(params, n_grid), mep.upsilon_hat)
    pae = params.amplifier.pae_curve
    theta = np.interp(ups, pae.power, pae.pae)
    eta = _eta_vec(params, e_tgt, h * ups)
    g = mu * q_w  # vanishing-power closure candidate
    for alpha in (alpha_min, 1.0):
        lagr = alpha * ups / theta + mu * (q_w - alpha * eta * h * ups)
        g = min(g, float(np.min(lagr)))
    primal = brute_force_strategy(params, e_tgt, r_tgt, h,
                                  n_alpha=n_grid, n_upsilon=n_grid,
                                  alpha_min=alpha_min)
    omega_star = math.inf if primal is None else primal[2]
    return g, omega_star


# ---------------------------------------------------------------------------
# live controller


def _kappas(state, upsilon_hat):
    if state.scheme == "baseline":
        return 0.0, state.upsilon_max / state.beta_upsilon
    k1 = 1.0 - state.alpha_min
    return k1, (state.upsilon_max - upsilon_hat) / state.beta_upsilon + k1


def x_upper_limit(state, upsilon_hat=None):
    """Clamp bound on x: the point where tau would exceed tau_max."""
    if upsilon_hat is None:
        upsilon_hat = state.upsilon_max
    _, k2 = _kappas(state, upsilon_hat)
    return k2 + (state.tau_max - state.tau_tgt) / state.beta_tau


def _map_with_case(state, x, upsilon_hat):
    if x < 0.0:
        raise ValueError("control variable must be non-negative")
    k1, k2 = _kappas(state, upsilon_hat)
    tau_cap = state.tau_max
    if state.scheme == "baseline":
        if x < k2:
            ups = max(state.beta_upsilon * x, _UPSILON_FLOOR)
            return ControlTuple(1.0, ups, state.tau_tgt), "II"
        tau = min(state.tau_tgt + state.beta_tau * (x - k2), tau_cap)
        return ControlTuple(1.0, state.upsilon_max, tau), "III"
    if x < k1:
        return ControlTuple(state.alpha_min + x, upsilon_hat, state.tau_tgt), "I"
    if x < k2:
        ups = upsilon_hat + state.beta_upsilon * (x - k1)
        return ControlTuple(1.0, ups, state.tau_tgt), "II"
    tau = min(state.tau_tgt + state.beta_tau * (x - k2), tau_cap)
    return ControlTuple(1.0, state.upsilon_max, tau), "III"


def control_map(state, x, upsilon_hat):
    """Piecewise-continuous map from the scalar control variable to a tuple."""
    return _map_with_case(state, x, upsilon_hat)[0]


def pi_update(state, report):
    """Advance the PI loop one epoch and return the clamped control variable.

    The error is taken in millijoules.  The integral term only commits when
    x lands inside [0, x_max] or the error points back into the interval
    (anti-windup); the starved flag reports saturation at the top clamp.
    """
    err_mj = (state.e_tgt - report.energy_meas) * 1e3
    integ_new = state.integral_error + err_mj
    x_raw = state.c_p * err_mj + state.c_i * integ_new
    x_max = x_upper_limit(state, state.upsilon_hat)
    if x_raw < 0.0:
        x, commit = 0.0, err_mj > 0.0
        state.starved = False
    elif x_raw > x_max:
        x, commit = x_max, err_mj < 0.0
        state.starved = True
    else:
        x, commit = x_raw, True
        state.starved = False
    if commit:
        state.integral_error = integ_new
    state.x = x
    return x


def estimate_channel(report, last_upsilon):
    """Attenuation estimate from a report, or None when the node saw no power."""
    if last_upsilon <= 0.0:
        raise ValueError("standing transfer power must be positive")
    if report.rx_power_meas <= 0.0:
        return None
    return report.rx_power_meas / last_upsilon


def epoch_decision(state, report):
    """One controller epoch: estimate channel, update PI, map to a tuple.

    Mutates state and returns (ControlTuple, state).  Falls back to the
    bootstrap tuple while no usable channel estimate exists.
    """
    standing = state.last_tuple or state.bootstrap_tuple()
    est = estimate_channel(report, standing.upsilon)
    if est is None:
        state.stale_epochs += 1
    elif state.h_estimate is None or state.smoothing >= 1.0:
        state.h_estimate = est
    else:
        state.h_estimate += state.smoothing * (est - state.h_estimate)
    if state.h_estimate is None:
        ctrl, case = state.bootstrap_tuple(), state.last_case
    else:
        ups_hat = min(state.s_tgt / state.h_estimate, state.upsilon_max)
        state.upsilon_hat = ups_hat
        x = pi_update(state, report)
        ctrl, case = _map_with_case(state, x, ups_hat)
    state.last_tuple = ctrl
    state.last_case = case
    state.epoch += 1
    return ctrl, state


def epoch_energy_gain(params, e, x, h, state=None):
    """Predicted stored-energy gain (J) over one epoch at control variable x.

    Evaluates the frozen-energy epoch balance tau * (gain - idle cost) minus
    the wake surcharge under the tuple the control map emits for x.
    """
    if state is None:
        state = ControllerState()
    ups_hat = min(state.s_tgt / h, state.upsilon_max)
    ctrl, _ = _map_with_case(state, x, ups_hat)
    per_frame = (_eta(params, e, h * ctrl.upsilon) * h * ctrl.upsilon
                 * ctrl.alpha * params.timing.frame_len)
    return (ctrl.tau * (per_frame - idle_frame_cost(params, e))
            - awake_extra_cost(params, e))
