"""Acceptance gate: the eight shipping criteria, one pass/fail line each.

Every criterion prints exactly one [PASS]/[FAIL] line (visible under
pytest -s) and then asserts, so the suite goes red on any regression.
Random draws are seeded; tolerances and runtime budgets are the shipping
numbers, not aspirations.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

import wpsn
from wpsn.calibration import (fit_leakage, fit_loads, fit_path_loss,
                              synth_leakage, synth_loads, synth_path_loss)
from wpsn.device_models import FixedAttenuation, SensorMode, SupercapModel
from wpsn.energy_evolution import discrete_step, integrate_frame
from wpsn.energy_management import (ControllerState, brute_force_strategy,
                                    control_map, dual_bound_check,
                                    epoch_energy_gain, max_efficiency_point,
                                    optimal_strategy, x_upper_limit)
from wpsn.sim_harness import (FixedControl, Scenario, emit_trace,
                              parse_scenario, run_scenario, sweep_attenuation)

from conftest import random_device

passed = 0
failed = 0

# runtime budgets are shipping numbers for the default compiled build; the
# pure-python fallback trades speed for portability, so only the numeric
# half of each criterion binds there
TIMED = wpsn.BACKEND == "compiled"


def check(name, condition, detail=""):
    global passed, failed
    if condition:
        print(f"[PASS] {name}" + (f": {detail}" if detail else ""))
        passed += 1
    else:
        print(f"[FAIL] {name}" + (f": {detail}" if detail else ""))
        failed += 1
    return condition


def test_criterion_1_calibration_round_trips(params, scenario_dir=None):
    t0 = time.perf_counter()
    d = np.geomspace(1.0, 30.0, 40)
    g, nu, _ = fit_path_loss(synth_path_loss(0.01, 3.31, d))
    errs = [abs(g - 0.01) / 0.01, abs(nu - 3.31) / 3.31]

    t_ax = np.linspace(0.0, 20000.0, 60)
    r, _ = fit_leakage(synth_leakage(196e3, 0.1, 2.757, t_ax), 0.1)
    errs.append(abs(r - 196e3) / 196e3)
    ok_tenth = max(errs) < 1e-3

    table = fit_loads(synth_loads(params.loads, np.linspace(1.8, 3.0, 25)))
    want = [(table.gamma[SensorMode.ACTIVE], 626.0),
            (table.zeta[SensorMode.IDLE], 35e-6),
            (table.zeta[SensorMode.RECEIVE], 15.87e-3),
            (table.zeta[SensorMode.TRANSMIT], 14.55e-3)]
    load_err = max(abs(gotten - truth) / truth for gotten, truth in want)
    wall = time.perf_counter() - t0
    ok = ok_tenth and load_err < 5e-3 and (wall < 1.0 or not TIMED)
    assert check("criterion 1: calibration round-trips", ok,
                 f"max fit err {max(errs + [load_err]):.2e}, "
                 f"wall {wall:.3f} s")


def test_criterion_2_discrete_matches_integrator(params):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260817)
    e_max = params.supercap.e_max
    e_min = params.supercap.e_min
    worst = 0.0
    for _ in range(1000):
        e0 = float(rng.uniform(0.5 * e_min, e_max))
        alpha = float(rng.uniform(0.0, 1.0))
        ups = float(rng.uniform(1e-3, 2.3))
        h = float(10.0 ** rng.uniform(-4.0, math.log10(0.05)))
        awake = bool(rng.random() < 0.5)
        a = discrete_step(params, e0, alpha, ups, h, awake).energy
        b = integrate_frame(params, e0, alpha, ups, h, awake).energy
        worst = max(worst, abs(a - b))
    wall = time.perf_counter() - t0
    ok = worst <= 0.005 * e_max and (wall < 10.0 or not TIMED)
    assert check("criterion 2: discrete step tracks the integrator", ok,
                 f"worst |diff| {worst / e_max * 100:.4f}% of E_max, "
                 f"wall {wall:.2f} s")


def test_criterion_3_planner_matches_brute_force(params):
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    alphas = np.linspace(0.1, 1.0, 512)
    ups_grid = np.geomspace(2.3e-4, 2.3, 512)
    log_ups = np.log(ups_grid)
    kept = tried = 0
    worst_cell = 0
    worst_gap = 0.0
    while kept < 50 and tried < 2000:
        tried += 1
        dev = random_device(params, rng)
        h = float(10.0 ** rng.uniform(-2.2, -1.0))
        e_tgt = float(rng.uniform(0.20, 0.44))
        try:
            ctrl, case = optimal_strategy(dev, e_tgt, 1.0, h)
        except ValueError:
            continue
        if case != "I" or not 0.3 <= ctrl.alpha <= 0.95:
            continue
        kept += 1
        got = brute_force_strategy(dev, e_tgt, 1.0, h,
                                   n_alpha=512, n_upsilon=512)
        assert got is not None
        a_b, u_b, om_b = got
        om = (ctrl.alpha * ctrl.upsilon
              / dev.amplifier.pae_curve.theta(ctrl.upsilon))
        da = abs(int(np.argmin(np.abs(alphas - ctrl.alpha)))
                 - int(np.argmin(np.abs(alphas - a_b))))
        du = abs(int(np.argmin(np.abs(log_ups - math.log(ctrl.upsilon))))
                 - int(np.argmin(np.abs(log_ups - math.log(u_b)))))
        worst_cell = max(worst_cell, da, du)
        worst_gap = max(worst_gap, abs(om_b - om) / om)

    mep = max_efficiency_point(params, 0.380, wpsn.db_to_attenuation(16.69))
    mu_rng = np.random.default_rng(7)
    violations = 0
    for mu in mu_rng.uniform(0.0, 10.0 * mep.mu_hat, 100):
        g, om_star = dual_bound_check(params, 0.380, 1.0,
                                      wpsn.db_to_attenuation(16.69),
                                      float(mu))
        if g > om_star + 1e-9:
            violations += 1
    wall = time.perf_counter() - t0
    ok = (kept == 50 and worst_cell <= 1 and worst_gap <= 0.01
          and violations == 0 and (wall < 30.0 or not TIMED))
    assert check("criterion 3: planner equals the brute-force oracle", ok,
                 f"{kept}/{tried} instances, worst cell dist {worst_cell}, "
                 f"worst objective gap {worst_gap * 100:.3f}%, "
                 f"{violations} duality violations, wall {wall:.2f} s")


def test_criterion_4_step_sequence_regulation(scenarios):
    t0 = time.perf_counter()
    sc = parse_scenario(scenarios / "step_sequence.scn")
    records = run_scenario(sc)
    dwell = 1000  # frames per attenuation step (100 s at 100 ms)
    worst = 0.0
    for d in range(10):
        tail = records[d * dwell + 800:(d + 1) * dwell]
        worst = max(worst, max(abs(r.energy_J - 0.380) for r in tail))
    brownouts = sum(r.brownout for r in records)
    wall = time.perf_counter() - t0
    ok = worst <= 0.05 * 0.380 and brownouts == 0 and (wall < 20.0
                                                      or not TIMED)
    assert check("criterion 4: closed-loop regulation on the step sequence",
                 ok,
                 f"worst settled |E-380 mJ| {worst * 1e3:.2f} mJ, "
                 f"{brownouts} brownout frames, wall {wall:.2f} s")


def test_criterion_5_duty_cycling_never_costlier(params):
    t0 = time.perf_counter()
    sc = Scenario(device=params, controller={"c_p": 1.0}, frames=8000)
    rows = sweep_attenuation(sc, [16.69, 20.66, 24.63, 28.62, 32.82])
    by = {(r.atten_db, r.scheme): r for r in rows}
    ok = True
    notes = []
    for db in (16.69, 20.66, 24.63, 28.62, 32.82):
        prop = by[(db, "proposed")]
        base = by[(db, "baseline")]
        if prop.p_cons_W > base.p_cons_W + 1e-12:
            ok = False
        if prop.case == "I" and not prop.p_cons_W < base.p_cons_W:
            ok = False
        notes.append(f"{db:g}dB {prop.p_cons_W * 1e3:.0f}/"
                     f"{base.p_cons_W * 1e3:.0f}mW")
    wall = time.perf_counter() - t0
    ok = ok and (wall < 60.0 or not TIMED)
    assert check("criterion 5: duty cycling never burns more beacon power",
                 ok, f"proposed/baseline {' '.join(notes)}, "
                 f"wall {wall:.2f} s")


def test_criterion_6_control_map_invariants(params):
    state = ControllerState()
    ups_hat = 0.9333
    k1 = 1.0 - state.alpha_min
    k2 = (state.upsilon_max - ups_hat) / state.beta_upsilon + k1
    jump = 0.0
    for kappa in (k1, k2):
        lo = control_map(state, kappa - 1e-12, ups_hat)
        hi = control_map(state, kappa + 1e-12, ups_hat)
        jump = max(jump, abs(hi.alpha - lo.alpha),
                   abs(hi.upsilon - lo.upsilon), abs(hi.tau - lo.tau))

    h = wpsn.db_to_attenuation(16.69)
    e_grid = np.linspace(params.supercap.e_min, params.supercap.e_max, 100)
    x_grid = np.linspace(0.0, x_upper_limit(state, ups_hat), 100)
    min_step = math.inf
    for e in e_grid:
        gains = [epoch_energy_gain(params, float(e), float(x), h, state)
                 for x in x_grid]
        min_step = min(min_step, float(np.min(np.diff(gains))))
    ok = jump <= 1e-9 and min_step >= -1e-12
    assert check("criterion 6: control-map continuity and monotone drive",
                 ok, f"max breakpoint jump {jump:.1e}, "
                 f"min gain step {min_step:.1e} J")


def test_criterion_7_sensor_power_vs_interval(params):
    # pin the terminal voltage by making the store enormous and keeping it
    # clamped at the ceiling, so per-frame consumption is measured at
    # exactly 3.0 V
    big = SupercapModel(capacitance=1e6, leak_resistance=196e3,
                        v_min=1.8, v_max=3.0)
    dev = replace(params, supercap=big, channel=FixedAttenuation(1.0))
    v, t_frame = 3.0, 0.1
    gamma, z_idle, z_rx, z_tx = 626.0, 35e-6, 15.87e-3, 14.55e-3
    t_rx, t_act, t_tx = 2.34e-3, 5.01e-3, 1.81e-3
    delta = (v ** 2 / gamma * (t_rx + t_act + t_tx)
             + v * ((z_rx - z_idle) * t_rx + (z_tx - z_idle) * t_tx))
    worst = 0.0
    for tau in (1, 2, 5, 10):
        sc = Scenario(device=dev,
                      fixed=FixedControl(alpha=1.0, upsilon=2.3, tau=tau),
                      frames=40 * tau + 1, initial_energy=big.e_max)
        records = run_scenario(sc, discrete=True)
        measured = float(np.mean([r.p_sensor_W
                                  for r in records[:40 * tau]]))
        closed = z_idle * v + delta / (tau * t_frame)
        worst = max(worst, abs(measured - closed) / closed)
    ok = worst <= 1e-9
    assert check("criterion 7: sensor power vs wake-up interval", ok,
                 f"worst rel err {worst:.2e} over tau in (1,2,5,10)")


def test_criterion_8_determinism(params, tmp_path):
    sc = Scenario(device=params, controller={"c_p": 1.0}, frames=2000,
                  noise_std=0.01, loss_prob=0.05, seed=123)
    p1, p2 = tmp_path / "run1.csv", tmp_path / "run2.csv"
    emit_trace(run_scenario(sc), p1)
    emit_trace(run_scenario(sc), p2)
    ok = p1.read_bytes() == p2.read_bytes()
    assert check("criterion 8: seeded runs are byte-identical", ok,
                 f"{p1.stat().st_size} bytes each")


@pytest.fixture(scope="module")
def scenarios():
    from pathlib import Path
    return Path(__file__).resolve().parent.parent / "scenarios"
