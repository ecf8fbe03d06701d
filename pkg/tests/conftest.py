"""Shared fixtures: the packaged device plus synthetic variants."""
import math
from dataclasses import replace

import numpy as np
import pytest

import wpsn

P_DBM_GRID = np.array([-0.3, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 15.7])
V_GRID = np.arange(14) * 0.25


@pytest.fixture(scope="session")
def params():
    return wpsn.default_device_params()


def make_pae_curve(theta_max=0.52, beta=0.6, n=10):
    """Monotone power-law PAE curve over the amplifier's output range."""
    powers = np.geomspace(0.05, 2.3, n)
    return wpsn.PaeCurve(power=powers,
                         pae=theta_max * (powers / powers[-1]) ** beta)


def make_iv_surface(eta_peak=0.52, p_peak=0.010, width=3.64, v_oc=4.85):
    """Rectifier-style current surface: log-Gaussian envelope in power,
    quadratic roll-off toward the open-circuit voltage."""
    p_axis = 10.0 ** ((P_DBM_GRID - 30.0) / 10.0)
    v_star = v_oc / math.sqrt(3.0)
    norm = v_star * (1.0 - (v_star / v_oc) ** 2)
    env = eta_peak * np.exp(-(np.log10(p_axis / p_peak) / width) ** 2)
    grid = (env[None, :] * p_axis[None, :]
            * (1.0 - (V_GRID[:, None] / v_oc) ** 2) / norm)
    return wpsn.HarvesterIvSurface(v_axis=V_GRID.copy(), p_axis=p_axis,
                                   current=grid)


def random_device(base, rng):
    """Random fixture instance: fresh PAE curve and harvester surface."""
    amp = wpsn.AmplifierModel(
        pae_curve=make_pae_curve(theta_max=rng.uniform(0.30, 0.60),
                                 beta=rng.uniform(0.35, 0.85)),
        src_power=4e-3, max_output=2.3)
    surf = make_iv_surface(eta_peak=rng.uniform(0.30, 0.60),
                           p_peak=rng.uniform(0.005, 0.020),
                           width=rng.uniform(2.5, 5.0),
                           v_oc=rng.uniform(4.0, 6.0))
    return replace(base, amplifier=amp, harvester=surf)


def silent_loads():
    # no sensor draw in any mode
    return wpsn.LoadTable(
        gamma={m: math.inf for m in wpsn.SensorMode},
        zeta={m: 0.0 for m in wpsn.SensorMode})


def lossless_params(base):
    """No loads, no leakage: stored energy can only move via harvesting."""
    cap = replace(base.supercap, leak_resistance=math.inf)
    return replace(base, supercap=cap, loads=silent_loads())
