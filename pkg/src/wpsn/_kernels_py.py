"""Pure-Python twin of the compiled frame kernels.

This module is the reference implementation of the hot numerical path:
bilinear harvester lookup, the stored-energy derivative and the classic
fixed-step RK4 sweep across one frame.  ``wpsn._kernels`` (Cython) mirrors
it expression for expression so both backends produce bit-identical
trajectories; keep any edit here in lockstep with the .pyx file.
"""
import math

IDLE, ACTIVE, RECEIVE, TRANSMIT = 0, 1, 2, 3

BACKEND = "pure-python"


class KernelParams:
    """Flattened device constants consumed by the frame kernels."""

    __slots__ = (
        "v_axis", "logp_axis", "grid", "gamma_inv", "zeta",
        "p_min", "cap", "r_leak_inv", "v_cutoff", "e_max",
        "t_frame", "t_rx", "t_act", "t_tx", "dt_max",
    )

    def __init__(self, v_axis, logp_axis, grid, gamma_inv, zeta, p_min, cap,
                 r_leak_inv, v_cutoff, e_max, t_frame, t_rx, t_act, t_tx, dt_max):
        self.v_axis = v_axis
        self.logp_axis = logp_axis
        self.grid = grid
        self.gamma_inv = gamma_inv
        self.zeta = zeta
        self.p_min = p_min
        self.cap = cap
        self.r_leak_inv = r_leak_inv
        self.v_cutoff = v_cutoff
        self.e_max = e_max
        self.t_frame = t_frame
        self.t_rx = t_rx
        self.t_act = t_act
        self.t_tx = t_tx
        self.dt_max = dt_max


def make_params(v_axis, logp_axis, grid, gamma_inv, zeta, p_min, cap,
                r_leak_inv, v_cutoff, e_max, t_frame, t_rx, t_act, t_tx, dt_max):
    return KernelParams(v_axis, logp_axis, grid, gamma_inv, zeta, p_min, cap,
                        r_leak_inv, v_cutoff, e_max, t_frame, t_rx, t_act, t_tx, dt_max)


def bilinear_iv(v_axis, logp_axis, grid, p_min, v_cutoff, v, p):
    """Harvester current (A) at terminal voltage v and receive power p.

    Interpolation is bilinear with the power coordinate taken in the log
    domain.  Edge rules: zero at p <= 0, zero above the cut-off voltage,
    linear scaling of the lowest-power column toward zero below the grid,
    clamping at every other edge.
    """
    if p <= 0.0:
        return 0.0
    if v > v_cutoff:
        return 0.0
    ni = len(v_axis)

    # voltage bracket, clamped at both ends
    if v <= v_axis[0]:
        i = 0
        a = 0.0
    elif v >= v_axis[ni - 1]:
        i = ni - 2
        a = 1.0
    else:
        i = 0
        while i + 1 < ni - 1 and v_axis[i + 1] <= v:
            i += 1
        a = (v - v_axis[i]) / (v_axis[i + 1] - v_axis[i])

    if p < p_min:
        col = (1.0 - a) * grid[i, 0] + a * grid[i + 1, 0]
        return col * (p / p_min)

    nj = len(logp_axis)
    lp = math.log10(p)
    if lp >= logp_axis[nj - 1]:
        j = nj - 2
        b = 1.0
    else:
        j = 0
        while j + 1 < nj - 1 and logp_axis[j + 1] <= lp:
            j += 1
        b = (lp - logp_axis[j]) / (logp_axis[j + 1] - logp_axis[j])

    return ((1.0 - a) * ((1.0 - b) * grid[i, j] + b * grid[i, j + 1])
            + a * ((1.0 - b) * grid[i + 1, j] + b * grid[i + 1, j + 1]))


def iv_current(kp, v, p):
    return bilinear_iv(kp.v_axis, kp.logp_axis, kp.grid, kp.p_min, kp.v_cutoff, v, p)


def _rhs(kp, e, p, mode):
    # returns (dE/dt, harvest W, sensor W, leak W)
    if e < 0.0:
        e = 0.0
    v = math.sqrt(2.0 * e / kp.cap)
    if p > 0.0:
        ph = bilinear_iv(kp.v_axis, kp.logp_axis, kp.grid, kp.p_min, kp.v_cutoff, v, p) * v
    else:
        ph = 0.0
    ps = v * v * kp.gamma_inv[mode] + kp.zeta[mode] * v
    pl = v * v * kp.r_leak_inv
    return ph - ps - pl, ph, ps, pl


def energy_rhs(kp, e, p, mode):
    return _rhs(kp, e, p, mode)[0]


def integrate_frame(kp, e0, alpha, p_on, awake):
    """Advance stored energy across one frame with segment-aligned RK4.

    The frame is split at the mode boundaries (receive/active/transmit when
    awake) and at the amplifier switch-off instant alpha*t_frame; each
    segment is integrated with equal RK4 substeps no longer than dt_max.
    Returns (e_end, harvested_J, sensor_J, leak_J).
    """
    b1 = kp.t_rx
    b2 = b1 + kp.t_act
    b3 = b2 + kp.t_tx
    if awake:
        bounds = [0.0, b1, b2, b3, kp.t_frame]
    else:
        bounds = [0.0, kp.t_frame]
    t_et = alpha * kp.t_frame
    if 0.0 < t_et < kp.t_frame and t_et not in bounds:
        k = 0
        while bounds[k] < t_et:
            k += 1
        bounds.insert(k, t_et)

    e = e0
    acc_h = 0.0
    acc_s = 0.0
    acc_l = 0.0
    for idx in range(len(bounds) - 1):
        t0 = bounds[idx]
        seg = bounds[idx + 1] - t0
        if seg <= 0.0:
            continue
        if awake:
            if t0 < b1:
                mode = RECEIVE
            elif t0 < b2:
                mode = ACTIVE
            elif t0 < b3:
                mode = TRANSMIT
            else:
                mode = IDLE
        else:
            mode = IDLE
        p = p_on if t0 < t_et else 0.0

        n = int(seg / kp.dt_max)
        if seg - n * kp.dt_max > 1e-12:
            n += 1
        if n < 1:
            n = 1
        dt = seg / n
        for _ in range(n):
            k1, h1, s1, l1 = _rhs(kp, e, p, mode)
            k2, h2, s2, l2 = _rhs(kp, e + 0.5 * dt * k1, p, mode)
            k3, h3, s3, l3 = _rhs(kp, e + 0.5 * dt * k2, p, mode)
            k4, h4, s4, l4 = _rhs(kp, e + dt * k3, p, mode)
            e += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if e < 0.0:
                e = 0.0
            elif e > kp.e_max:
                e = kp.e_max
            acc_h += dt / 6.0 * (h1 + 2.0 * h2 + 2.0 * h3 + h4)
            acc_s += dt / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
            acc_l += dt / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
    return e, acc_h, acc_s, acc_l
