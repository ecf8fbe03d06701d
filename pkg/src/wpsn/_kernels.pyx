# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of wpsn._kernels_py.

Transliterated expression for expression from the pure-Python module so the
two backends produce bit-identical trajectories.  Edit both files together.
"""
from libc.math cimport sqrt, log10

IDLE, ACTIVE, RECEIVE, TRANSMIT = 0, 1, 2, 3

BACKEND = "compiled"


cdef class KernelParams:
    cdef public double[::1] v_axis
    cdef public double[::1] logp_axis
    cdef public double[:, ::1] grid
    cdef public double[::1] gamma_inv
    cdef public double[::1] zeta
    cdef public double p_min, cap, r_leak_inv, v_cutoff, e_max
    cdef public double t_frame, t_rx, t_act, t_tx, dt_max

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


cdef double _bilin(KernelParams kp, double v, double p) noexcept:
    cdef double[::1] v_axis = kp.v_axis
    cdef double[::1] logp_axis = kp.logp_axis
    cdef double[:, ::1] grid = kp.grid
    cdef Py_ssize_t ni, nj, i, j
    cdef double a, b, lp, col

    if p <= 0.0:
        return 0.0
    if v > kp.v_cutoff:
        return 0.0
    ni = v_axis.shape[0]

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

    if p < kp.p_min:
        col = (1.0 - a) * grid[i, 0] + a * grid[i + 1, 0]
        return col * (p / kp.p_min)

    nj = logp_axis.shape[0]
    lp = log10(p)
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


def iv_current(KernelParams kp, double v, double p):
    return _bilin(kp, v, p)


cdef void _rhs(KernelParams kp, double e, double p, int mode, double* out) noexcept:
    cdef double v, ph, ps, pl
    if e < 0.0:
        e = 0.0
    v = sqrt(2.0 * e / kp.cap)
    if p > 0.0:
        ph = _bilin(kp, v, p) * v
    else:
        ph = 0.0
    ps = v * v * kp.gamma_inv[mode] + kp.zeta[mode] * v
    pl = v * v * kp.r_leak_inv
    out[0] = ph - ps - pl
    out[1] = ph
    out[2] = ps
    out[3] = pl


def energy_rhs(KernelParams kp, double e, double p, int mode):
    cdef double out[4]
    _rhs(kp, e, p, mode, out)
    return out[0]


def integrate_frame(KernelParams kp, double e0, double alpha, double p_on, bint awake):
    cdef double b1 = kp.t_rx
    cdef double b2 = b1 + kp.t_act
    cdef double b3 = b2 + kp.t_tx
    cdef double bounds[8]
    cdef int nb, k, idx, n, step, mode
    cdef bint dup
    cdef double t_et, e, acc_h, acc_s, acc_l, t0, seg, p, dt
    cdef double r1[4]
    cdef double r2[4]
    cdef double r3[4]
    cdef double r4[4]

    if awake:
        bounds[0] = 0.0
        bounds[1] = b1
        bounds[2] = b2
        bounds[3] = b3
        bounds[4] = kp.t_frame
        nb = 5
    else:
        bounds[0] = 0.0
        bounds[1] = kp.t_frame
        nb = 2
    t_et = alpha * kp.t_frame
    if 0.0 < t_et < kp.t_frame:
        dup = False
        for k in range(nb):
            if bounds[k] == t_et:
                dup = True
                break
        if not dup:
            k = 0
            while bounds[k] < t_et:
                k += 1
            for idx in range(nb, k, -1):
                bounds[idx] = bounds[idx - 1]
            bounds[k] = t_et
            nb += 1

    e = e0
    acc_h = 0.0
    acc_s = 0.0
    acc_l = 0.0
    for idx in range(nb - 1):
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

        n = <int>(seg / kp.dt_max)
        if seg - n * kp.dt_max > 1e-12:
            n += 1
        if n < 1:
            n = 1
        dt = seg / n
        for step in range(n):
            _rhs(kp, e, p, mode, r1)
            _rhs(kp, e + 0.5 * dt * r1[0], p, mode, r2)
            _rhs(kp, e + 0.5 * dt * r2[0], p, mode, r3)
            _rhs(kp, e + dt * r3[0], p, mode, r4)
            e += dt / 6.0 * (r1[0] + 2.0 * r2[0] + 2.0 * r3[0] + r4[0])
            if e < 0.0:
                e = 0.0
            elif e > kp.e_max:
                e = kp.e_max
            acc_h += dt / 6.0 * (r1[1] + 2.0 * r2[1] + 2.0 * r3[1] + r4[1])
            acc_s += dt / 6.0 * (r1[2] + 2.0 * r2[2] + 2.0 * r3[2] + r4[2])
            acc_l += dt / 6.0 * (r1[3] + 2.0 * r2[3] + 2.0 * r3[3] + r4[3])
    return e, acc_h, acc_s, acc_l
