"""Wireless-powered sensor network simulator and control toolkit.

An RF beacon with a duty-cycled amplifier charges a supercapacitor-backed
sensor node over a lossy channel.  This package models the hardware
(device_models), integrates the stored-energy dynamics (energy_evolution,
with a compiled kernel and a pure-Python twin), plans and regulates the
beacon's transfer policy (energy_management), fits model parameters from
measurement traces (calibration), and runs closed-loop scenario simulations
(sim_harness, cli).
"""
from ._backend import BACKEND, kernels
from .calibration import (CalibrationError, FitError, MeasurementTrace,
                          SurfaceInvariantError, TraceParseError,
                          TraceSchemaError, fit_leakage, fit_loads,
                          fit_path_loss, load_iv_surface, load_pae_curve,
                          load_trace, packaged_fixture)
from .device_models import (AmplifierModel, AttenuationSchedule, DeviceParams,
                            FixedAttenuation, FrameTiming, HarvesterIvSurface,
                            LoadTable, PaeCurve, PathLoss, SensorMode,
                            SupercapModel, amp_consumption,
                            attenuation_to_db, channel_attenuation,
                            db_to_attenuation, default_device_params,
                            default_loads, default_supercap,
                            energy_to_voltage, harvester_current,
                            harvesting_efficiency, receive_power,
                            sensor_current, voltage_to_energy)
from .energy_evolution import (EnergyState, avg_amplifier_power,
                               avg_consumed_energy, awake_extra_cost,
                               consumed_energy, discrete_step, energy_derivative,
                               epoch_step, harvest_rate, harvested_energy,
                               idle_frame_cost, integrate_frame)
from .energy_management import (ControllerState, ControlTuple,
                                MaxEfficiencyPoint, SensorReport, applied_tau,
                                brute_force_strategy, control_map,
                                dual_bound_check, epoch_decision,
                                epoch_energy_gain, estimate_channel,
                                max_efficiency_point, optimal_strategy,
                                pi_update)
from .sim_harness import (FixedControl, NodeState, Scenario, ScenarioError,
                          SweepRow, TraceRecord, emit_sweep, emit_trace,
                          node_step, parse_scenario, read_trace, run_scenario,
                          sweep_attenuation)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "kernels", "__version__",
    # device models
    "AmplifierModel", "AttenuationSchedule", "DeviceParams",
    "FixedAttenuation", "FrameTiming", "HarvesterIvSurface", "LoadTable",
    "PaeCurve", "PathLoss", "SensorMode", "SupercapModel", "amp_consumption",
    "attenuation_to_db", "channel_attenuation", "db_to_attenuation",
    "default_device_params", "default_loads", "default_supercap",
    "energy_to_voltage", "harvester_current", "harvesting_efficiency",
    "receive_power", "sensor_current", "voltage_to_energy",
    # energy evolution
    "EnergyState", "avg_amplifier_power", "avg_consumed_energy",
    "awake_extra_cost", "consumed_energy", "discrete_step",
    "energy_derivative", "epoch_step", "harvest_rate", "harvested_energy",
    "idle_frame_cost", "integrate_frame",
    # planning and control
    "ControlTuple", "ControllerState", "MaxEfficiencyPoint", "SensorReport",
    "applied_tau", "brute_force_strategy", "control_map", "dual_bound_check",
    "epoch_decision", "epoch_energy_gain", "estimate_channel",
    "max_efficiency_point", "optimal_strategy", "pi_update",
    # calibration
    "CalibrationError", "FitError", "MeasurementTrace",
    "SurfaceInvariantError", "TraceParseError", "TraceSchemaError",
    "fit_leakage", "fit_loads", "fit_path_loss", "load_iv_surface",
    "load_pae_curve", "load_trace", "packaged_fixture",
    # simulation harness
    "FixedControl", "NodeState", "Scenario", "ScenarioError", "SweepRow",
    "TraceRecord", "emit_sweep", "emit_trace", "node_step", "parse_scenario",
    "read_trace", "run_scenario", "sweep_attenuation",
]
