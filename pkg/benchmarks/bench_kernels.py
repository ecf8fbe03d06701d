#!/usr/bin/env python3
"""Frame-kernel benchmark: compiled extension vs pure-Python twin.

Times integrate_frame over a mixed batch of operating points and prints
per-frame cost for each backend plus the speedup.  Run from the repo root:

    python3 benchmarks/bench_kernels.py [n_frames]
"""
import sys
import time

import numpy as np

import wpsn
from wpsn import _kernels_py
from wpsn._backend import pack_params


def _kp_for(mod, params, dt=1e-3):
    surf, loads, timing, cap = (params.harvester, params.loads,
                                params.timing, params.supercap)
    return mod.make_params(
        np.ascontiguousarray(surf.v_axis),
        np.ascontiguousarray(surf.logp_axis),
        np.ascontiguousarray(surf.current),
        np.ascontiguousarray(loads.gamma_inv_array()),
        np.ascontiguousarray(loads.zeta_array()),
        float(surf.p_axis[0]), float(cap.capacitance),
        0.0 if cap.leak_resistance == float("inf")
        else 1.0 / cap.leak_resistance,
        float(cap.v_max), float(cap.e_max),
        float(timing.frame_len), float(timing.t_rx), float(timing.t_act),
        float(timing.t_tx), float(dt),
    )


def _batch(params, n, seed=11):
    rng = np.random.default_rng(seed)
    e_max = params.supercap.e_max
    return [(float(rng.uniform(0.0, e_max)),
             float(rng.uniform(0.0, 1.0)),
             float(10.0 ** rng.uniform(-4.0, -0.9)),
             bool(rng.random() < 0.5)) for _ in range(n)]


def _time(mod, kp, batch, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for e0, alpha, p_on, awake in batch:
            mod.integrate_frame(kp, e0, alpha, p_on, awake)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    params = wpsn.default_device_params()
    batch = _batch(params, n)

    backends = [("pure-python", _kernels_py)]
    try:
        from wpsn import _kernels
        backends.append(("compiled", _kernels))
    except ImportError:
        print("compiled backend not built; timing the pure twin only")

    results = {}
    for name, mod in backends:
        kp = _kp_for(mod, params)
        # warmup covers lazy caches and the first-call overhead
        _time(mod, kp, batch[:50], repeats=1)
        wall = _time(mod, kp, batch)
        results[name] = wall
        print(f"{name:>12s}: {wall * 1e6 / n:9.2f} us/frame "
              f"({n} frames in {wall * 1e3:.1f} ms)")

    if len(results) == 2:
        print(f"{'speedup':>12s}: {results['pure-python'] / results['compiled']:.1f}x")
    print(f"{'active':>12s}: {wpsn.BACKEND} "
          f"(pack_params cache: {type(pack_params(params)).__module__})")


if __name__ == "__main__":
    main()
