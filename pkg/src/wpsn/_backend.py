"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the
pure-Python twin takes over.  Set WPSN_BACKEND=pure (or =compiled) to force
a choice, e.g. for the benchmark or when debugging the kernels.
"""
import os

import numpy as np

from . import _kernels_py

_choice = os.environ.get("WPSN_BACKEND", "").strip().lower()

if _choice == "pure":
    kernels = _kernels_py
elif _choice == "compiled":
    from . import _kernels as kernels   # ImportError here is intentional: the user asked for it
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND


def backend_name():
    return BACKEND


def pack_params(params, dt_max=1e-3):
    """Flatten a DeviceParams into the backend's kernel-parameter object.

    Results are cached per (backend, dt) on the params instance; DeviceParams
    is immutable so the cache never goes stale.
    """
    key = (kernels.BACKEND, float(dt_max))
    cache = params._pack_cache
    kp = cache.get(key)
    if kp is not None:
        return kp
    surf = params.harvester
    loads = params.loads
    timing = params.timing
    kp = kernels.make_params(
        np.ascontiguousarray(surf.v_axis, dtype=np.float64),
        np.ascontiguousarray(surf.logp_axis, dtype=np.float64),
        np.ascontiguousarray(surf.current, dtype=np.float64),
        np.ascontiguousarray(loads.gamma_inv_array(), dtype=np.float64),
        np.ascontiguousarray(loads.zeta_array(), dtype=np.float64),
        float(surf.p_axis[0]),
        float(params.supercap.capacitance),
        0.0 if params.supercap.leak_resistance == float("inf")
        else 1.0 / params.supercap.leak_resistance,
        float(params.supercap.v_max),
        float(params.supercap.e_max),
        float(timing.frame_len),
        float(timing.t_rx),
        float(timing.t_act),
        float(timing.t_tx),
        float(dt_max),
    )
    cache[key] = kp
    return kp
