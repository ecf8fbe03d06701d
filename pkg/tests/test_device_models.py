import math
from dataclasses import replace

import numpy as np
import pytest

import wpsn
from wpsn import SensorMode

from conftest import make_iv_surface


def test_db_round_trip():
    for db in (0.0, 3.0, 16.69, 32.82):
        assert abs(wpsn.attenuation_to_db(wpsn.db_to_attenuation(db)) - db) < 1e-12


def test_attenuation_to_db_rejects_nonpositive():
    with pytest.raises(ValueError):
        wpsn.attenuation_to_db(0.0)


class TestPaeCurve:
    def test_interpolates_between_knots(self, params):
        curve = params.amplifier.pae_curve
        # hand interpolation between the 0.7 W and 1.0 W knots
        expect = 0.300 + (0.933 - 0.700) / 0.300 * 0.060
        assert abs(curve.theta(0.933) - expect) < 1e-12

    def test_clamps_at_table_ends(self, params):
        curve = params.amplifier.pae_curve
        assert curve.theta(2.3) == pytest.approx(0.52)
        assert curve.theta(5.0) == pytest.approx(0.52)
        assert curve.theta(0.01) == pytest.approx(0.030)

    def test_rejects_unsorted_powers(self):
        with pytest.raises(ValueError):
            wpsn.PaeCurve(power=[0.2, 0.1], pae=[0.1, 0.2])

    def test_rejects_pae_outside_unit_interval(self):
        with pytest.raises(ValueError):
            wpsn.PaeCurve(power=[0.1, 0.2], pae=[0.5, 1.5])


class TestAmplifier:
    def test_consumption_is_output_over_pae(self, params):
        amp = params.amplifier
        theta = amp.pae_curve.theta(2.3)
        assert wpsn.amp_consumption(amp, 2.3) == pytest.approx(2.3 / theta)

    def test_switched_off_draws_nothing(self, params):
        assert wpsn.amp_consumption(params.amplifier, 1.0, on=False) == 0.0

    def test_rejects_output_beyond_maximum(self, params):
        with pytest.raises(ValueError, match="exceeds maximum output"):
            wpsn.amp_consumption(params.amplifier, 2.31)

    def test_rejects_nonpositive_output(self, params):
        with pytest.raises(ValueError):
            wpsn.amp_consumption(params.amplifier, 0.0)


class TestChannel:
    def test_path_loss_formula(self):
        ch = wpsn.PathLoss(g_ref=0.01, exponent=3.31)
        assert wpsn.channel_attenuation(ch, d=2.0) == pytest.approx(
            0.01 / 2.0 ** 3.31, rel=1e-12)

    def test_path_loss_needs_distance(self):
        ch = wpsn.PathLoss(g_ref=0.01, exponent=3.31)
        with pytest.raises(ValueError):
            wpsn.channel_attenuation(ch)

    def test_schedule_steps(self):
        sched = wpsn.AttenuationSchedule(steps=((0.0, 0.5), (10.0, 0.25)))
        assert wpsn.channel_attenuation(sched, t=0.0) == 0.5
        assert wpsn.channel_attenuation(sched, t=9.999) == 0.5
        assert wpsn.channel_attenuation(sched, t=10.0) == 0.25
        assert wpsn.channel_attenuation(sched, t=1e9) == 0.25

    def test_schedule_before_first_step(self):
        sched = wpsn.AttenuationSchedule(steps=((5.0, 0.5),))
        with pytest.raises(ValueError):
            wpsn.channel_attenuation(sched, t=0.0)

    def test_schedule_times_strictly_increasing(self):
        with pytest.raises(ValueError):
            wpsn.AttenuationSchedule(steps=((0.0, 0.5), (0.0, 0.25)))

    def test_receive_power(self):
        assert wpsn.receive_power(2.0, 0.01) == pytest.approx(0.02)


class TestHarvesterSurface:
    def test_grid_nodes_are_exact(self, params):
        surf = params.harvester
        for i in (1, 5, 13):
            for j in (0, 4, 8):
                got = wpsn.harvester_current(surf, float(surf.v_axis[i]),
                                             float(surf.p_axis[j]))
                assert got == pytest.approx(float(surf.current[i, j]),
                                            rel=1e-12)

    def test_midpoint_is_bilinear_average(self, params):
        surf = params.harvester
        v = 0.5 * (surf.v_axis[3] + surf.v_axis[4])
        # midpoint in log10(p), matching the interpolation coordinate
        lp = 0.5 * (math.log10(surf.p_axis[2]) + math.log10(surf.p_axis[3]))
        p = 10.0 ** lp
        corners = surf.current[3:5, 2:4]
        assert wpsn.harvester_current(surf, float(v), float(p)) == \
            pytest.approx(float(np.mean(corners)), rel=1e-9)

    def test_cutoff_zeroes_current_above_threshold(self, params):
        # cut-off is exclusive: a full capacitor at exactly v_cutoff still
        # accepts charge, anything above does not
        surf = params.harvester
        assert wpsn.harvester_current(surf, 3.01, 0.01, v_cutoff=3.0) == 0.0
        assert wpsn.harvester_current(surf, 3.0, 0.01, v_cutoff=3.0) > 0.0

    def test_negative_cell_rejected_with_coordinates(self):
        surf = make_iv_surface()
        bad = surf.current.copy()
        bad[2, 3] = -1e-6
        with pytest.raises(ValueError) as err:
            wpsn.HarvesterIvSurface(v_axis=surf.v_axis, p_axis=surf.p_axis,
                                    current=bad)
        assert "2" in str(err.value) and "3" in str(err.value)

    def test_nonmonotone_beyond_tolerance_rejected(self):
        surf = make_iv_surface()
        bad = surf.current.copy()
        bad[5, 4] *= 1.5   # spike breaks the falling-in-v shape by far over 2%
        with pytest.raises(ValueError):
            wpsn.HarvesterIvSurface(v_axis=surf.v_axis, p_axis=surf.p_axis,
                                    current=bad)

    def test_small_wiggle_within_tolerance_accepted(self):
        surf = make_iv_surface()
        ok = surf.current.copy()
        ok[5, 4] *= 1.001  # 0.1% wiggle stays inside the 2% slack
        wpsn.HarvesterIvSurface(v_axis=surf.v_axis, p_axis=surf.p_axis,
                                current=ok)

    def test_axes_must_ascend(self):
        surf = make_iv_surface()
        with pytest.raises(ValueError):
            wpsn.HarvesterIvSurface(v_axis=surf.v_axis[::-1].copy(),
                                    p_axis=surf.p_axis,
                                    current=surf.current[::-1].copy())

    def test_efficiency_definition(self, params):
        surf = params.harvester
        i = wpsn.harvester_current(surf, 2.5, 0.02)
        assert wpsn.harvesting_efficiency(surf, 2.5, 0.02) == \
            pytest.approx(i * 2.5 / 0.02, rel=1e-12)

    def test_efficiency_rejects_nonpositive_power(self, params):
        with pytest.raises(ValueError):
            wpsn.harvesting_efficiency(params.harvester, 2.5, 0.0)


class TestSupercap:
    def test_energy_bounds(self, params):
        cap = params.supercap
        assert cap.e_min == pytest.approx(0.162)
        assert cap.e_max == pytest.approx(0.45)

    def test_voltage_energy_round_trip(self, params):
        cap = params.supercap
        rng = np.random.default_rng(3)
        for v in rng.uniform(0.0, 3.2, 50):
            e = wpsn.voltage_to_energy(cap, float(v))
            assert wpsn.energy_to_voltage(cap, e) == pytest.approx(v, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            wpsn.SupercapModel(capacitance=0.1, leak_resistance=196e3,
                               v_min=3.0, v_max=1.8)


class TestLoads:
    def test_idle_draw_is_constant_current_only(self, params):
        # idle gamma is infinite, so only the 35 uA bias remains
        assert wpsn.sensor_current(params.loads, 3.0, SensorMode.IDLE) == \
            pytest.approx(0.035e-3)

    def test_active_draw(self, params):
        got = wpsn.sensor_current(params.loads, 3.0, SensorMode.ACTIVE)
        assert got == pytest.approx(3.0 / 626.0 + 0.035e-3, rel=1e-12)

    def test_table_requires_all_modes(self):
        with pytest.raises(ValueError):
            wpsn.LoadTable(gamma={SensorMode.IDLE: math.inf},
                           zeta={SensorMode.IDLE: 0.0})


def test_frame_timing_idle_remainder(params):
    t = params.timing
    assert t.t_idle == pytest.approx(0.100 - (2.34 + 5.01 + 1.81) * 1e-3)
    assert t.frame_len == 0.100


def test_frame_timing_rejects_overlong_bursts():
    with pytest.raises(ValueError):
        wpsn.FrameTiming(frame_len=0.005, t_rx=2.34e-3, t_act=5.01e-3,
                         t_tx=1.81e-3)


def test_default_device_params_wires_fixtures(params):
    assert len(params.amplifier.pae_curve.power) == 10
    assert params.harvester.current.shape == (14, 9)
    assert params.amplifier.max_output == pytest.approx(2.3)
    assert wpsn.channel_attenuation(params.channel) == \
        pytest.approx(wpsn.db_to_attenuation(16.69))


def test_harvest_efficiency_applies_storage_cutoff(params):
    e_max = params.supercap.e_max
    assert params.harvest_efficiency(e_max * 1.001, 0.02) == 0.0
    assert params.harvest_efficiency(0.378, 0.02) > 0.4
