#!/usr/bin/env python3
"""Regenerate the packaged device fixture tables.

Writes src/wpsn/data/pae_curve.csv and src/wpsn/data/iv_surface.csv.
The I-V surface is a rectifier-style model: current falls quadratically
with output voltage toward an open-circuit point above the usable range,
and the conversion efficiency is unimodal in receive power with its peak
at 10 mW.  Values are representative of a 915 MHz harvester front end
feeding a supercapacitor, on the power grid -0.3 .. 15.7 dBm where such
parts are usually characterised.
"""
import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, os.pardir, "src", "wpsn", "data")

# Class-AB power amplifier: PAE rises monotonically with output power.
PAE_POINTS = [
    (50, 0.030),
    (100, 0.060),
    (200, 0.115),
    (400, 0.210),
    (700, 0.300),
    (1000, 0.360),
    (1400, 0.425),
    (1800, 0.475),
    (2100, 0.505),
    (2300, 0.520),
]

# Harvester surface shape parameters.
ETA_PEAK = 0.52          # peak conversion efficiency
P_PEAK_W = 0.010         # efficiency peak sits at 10 mW
LOG_WIDTH = 3.64         # Gaussian width in decades
V_OC = 4.85              # open-circuit voltage of the rectifier model, V
P_DBM = [-0.3, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 15.7]
V_ROWS = [0.25 * i for i in range(14)]   # 0.00 .. 3.25 V


def efficiency_envelope(p_w):
    u = math.log10(p_w / P_PEAK_W)
    return ETA_PEAK * math.exp(-((u / LOG_WIDTH) ** 2))


def harvester_current_a(v, p_w):
    # eta(v, p) = envelope(p) * v * (1 - (v/V_OC)^2) / norm, so the current
    # is finite at v = 0 and strictly decreasing in v.
    v_star = V_OC / math.sqrt(3.0)
    norm = v_star * (1.0 - (v_star / V_OC) ** 2)
    return efficiency_envelope(p_w) * p_w * (1.0 - (v / V_OC) ** 2) / norm


def write_pae(path):
    with open(path, "w", newline="") as f:
        f.write("p_tx_mW,pae\n")
        for p_mw, pae in PAE_POINTS:
            f.write(f"{p_mw:g},{pae:g}\n")


def write_iv(path):
    with open(path, "w", newline="") as f:
        f.write("," + ",".join(f"{d:g}" for d in P_DBM) + "\n")
        for v in V_ROWS:
            cells = []
            for dbm in P_DBM:
                p_w = 10.0 ** ((dbm - 30.0) / 10.0)
                cells.append(f"{harvester_current_a(v, p_w) * 1e3:.6g}")
            f.write(f"{v:g}," + ",".join(cells) + "\n")


if __name__ == "__main__":
    os.makedirs(DATA, exist_ok=True)
    write_pae(os.path.join(DATA, "pae_curve.csv"))
    write_iv(os.path.join(DATA, "iv_surface.csv"))
    print("wrote", os.path.abspath(DATA))
