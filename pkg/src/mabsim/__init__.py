"""Steady-state modeling, full-ZVS optimization, and closed-loop simulation
of N-port multi-active-bridge DC-DC converters."""

from .core import (ConfigError, ConverterConfig, DerivedParams, LoadModel, PortSpec,
                   conversion_ratios, current_scales, derive_params,
                   inductor_coefficients, validate_config)
from .waveforms import (BOUNDARY, HARD, ZVS, PhaseShiftSet, SteadyStateReport,
                        WaveformSeries, classify_zvs, inductor_current, link_voltage,
                        port_power, port_powers, rms_current, sample_waveforms,
                        steady_state_report, switched_node_voltage,
                        switching_instant_currents)
from .zvs import (ZvsSolution, full_zvs_term, full_zvs_terms, general_solution,
                  online_duty_ratios, sps_duty_ratios, zvs_system_residual)
from .oracle import (EventTimeline, PiecewiseCurrents, build_timeline,
                     compare_closed_form, integrate_currents, steady_state_oracle)
from .control import (MODE_ONLINE_ZVS, MODE_SPS, PiController, ScenarioEvent,
                      ScenarioResult, VoltageCollapseError, find_equilibrium,
                      pi_step, plant_step, run_scenario, settling_time)
from .scenario import AnalysisSettings, Scenario, ScenarioError, SweepSettings, parse_scenario

__version__ = "0.1.0"
