"""PI regulator, bus dynamics, closed-loop runs, and the equilibrium solver."""

import math

import numpy as np
import pytest

from mabsim import (LoadModel, PhaseShiftSet, PiController, ScenarioEvent,
                    VoltageCollapseError, find_equilibrium, pi_step, plant_step,
                    port_powers, run_scenario, settling_time)
from mabsim.control import MODE_ONLINE_ZVS, MODE_SPS, load_power_targets

from conftest import make_config


def loaded_config(r2=500.0, caps=500e-6):
    return make_config(
        [400.0, 500.0], [1.0, 1.0], [15e-6, 20e-6],
        caps=[caps, caps],
        loads=[LoadModel("voltage_source", 400.0), LoadModel("resistor", r2)],
    )


# ------------------------------------------------------------------ pi_step

def test_zero_error_keeps_output():
    ctl = PiController(kp=0.01, ki=5.0, reference=500.0, integrator=0.3)
    assert pi_step(ctl, 500.0, 2e-5) == 0.3
    assert ctl.integrator == 0.3


def test_proportional_only_step():
    ctl = PiController(kp=0.001, ki=0.0, reference=1.0)
    assert pi_step(ctl, 0.0, 2e-5) == pytest.approx(0.001)
    assert pi_step(ctl, 0.0, 2e-5) == pytest.approx(0.001)  # no accumulation without ki


def test_saturation_freezes_integrator():
    ctl = PiController(kp=1.0, ki=100.0, reference=1000.0)
    out = pi_step(ctl, 0.0, 2e-5)
    assert out == 0.5
    frozen = ctl.integrator
    assert pi_step(ctl, 0.0, 2e-5) == 0.5
    assert ctl.integrator == frozen == 0.0


def test_pi_step_rejects_bad_dt():
    with pytest.raises(ValueError, match="dt"):
        pi_step(PiController(kp=1.0, ki=1.0, reference=0.0), 0.0, 0.0)


# --------------------------------------------------------------- plant_step

def test_rc_discharge_matches_analytic_limit():
    cfg = loaded_config(r2=500.0, caps=500e-6)
    dt = 2e-5
    v = plant_step(cfg, [0.0, 0.0], [400.0, 500.0], dt)
    tau = 500.0 * 500e-6
    assert v[0] == 400.0  # source port pinned
    assert v[1] == pytest.approx(500.0 * math.exp(-dt / tau), rel=1e-8)


def test_power_match_keeps_voltage():
    cfg = loaded_config()
    v = plant_step(cfg, [500.0, -500.0], [400.0, 500.0], 2e-5)  # port 2 receives 500 W
    assert v[1] == 500.0


def test_collapse_raises_with_context():
    cfg = loaded_config(r2=0.05, caps=1e-6)  # 5 MW draw on a 1 uF bus
    with pytest.raises(VoltageCollapseError, match="port 2"):
        plant_step(cfg, [0.0, 0.0], [400.0, 500.0], 2e-5, time=1.25e-3)


# ------------------------------------------------------------ settling_time

def test_constant_series_settles_immediately():
    t = np.linspace(0.0, 1.0, 11)
    assert settling_time(t, np.full(11, 3.0)) == 0.0


def test_first_order_settling_close_to_analytic():
    tau = 1e-3
    t = np.linspace(0.0, 10 * tau, 20001)
    series = 1.0 - np.exp(-t / tau)
    s = settling_time(t, series, target=1.0, band=0.02)
    assert s == pytest.approx(-math.log(0.02) * tau, rel=1e-2)  # about 3.9 tau


def test_unsettled_series_reports_none():
    t = np.linspace(0.0, 1.0, 101)
    assert settling_time(t, t) is None  # ramp never stays inside the band


def test_settling_rejects_bad_band():
    with pytest.raises(ValueError, match="band"):
        settling_time([0.0, 1.0], [0.0, 0.0], band=0.0)


# ------------------------------------------------------------- run_scenario

def golden_controllers():
    return {2: PiController(kp=0.04, ki=200.0, reference=500.0),
            3: PiController(kp=0.04, ki=200.0, reference=200.0),
            4: PiController(kp=0.04, ki=200.0, reference=300.0)}


def test_quiet_scenario_converges_to_load_flow(golden_config):
    result = run_scenario(golden_config, golden_controllers(), events=(),
                          mode=MODE_ONLINE_ZVS, duration=0.03, eps_current=1e-6)
    # resistive loads at the regulated setpoints: 500 W and 400 W received
    assert result.voltages[-1] == pytest.approx([400.0, 500.0, 200.0, 300.0], abs=0.05)
    assert -result.powers[-1, 1] == pytest.approx(500.0, abs=1.0)
    assert -result.powers[-1, 2] == pytest.approx(400.0, abs=1.0)
    assert -result.powers[-1, 3] == pytest.approx(400.0, abs=1.0)
    assert result.powers[-1, 0] == pytest.approx(1300.0, abs=2.0)
    assert max(result.steady_state_errors.values()) < 0.05
    # constant after convergence
    tail = result.powers[-200:]
    assert np.max(np.abs(tail - tail[-1])) < 1.0


def test_runs_are_deterministic(golden_config, golden_scenario):
    kw = dict(events=golden_scenario.events, mode=MODE_ONLINE_ZVS, duration=0.03,
              eps_current=1e-6)
    a = run_scenario(golden_config, golden_controllers(), **kw)
    b = run_scenario(golden_config, golden_controllers(), **kw)
    assert np.array_equal(a.voltages, b.voltages)
    assert np.array_equal(a.powers, b.powers)
    assert np.array_equal(a.outer, b.outer)
    assert np.array_equal(a.zvs_status, b.zvs_status)


def test_modes_coincide_when_ratios_are_uniform(dab_config):
    cfg = make_config([400.0, 400.0], [1.0, 1.0], [30e-6, 30e-6],
                      caps=[500e-6, 500e-6],
                      loads=[LoadModel("voltage_source", 400.0),
                             LoadModel("constant_power", 2000.0)])
    ctl = {2: PiController(kp=0.04, ki=200.0, reference=400.0)}
    events = (ScenarioEvent(time=0.01, port=2, set="load", value=4000.0),)
    a = run_scenario(cfg, dict(ctl), events, mode=MODE_ONLINE_ZVS, duration=0.02)
    b = run_scenario(cfg, dict(ctl), events, mode=MODE_SPS, duration=0.02)
    assert np.array_equal(a.inner, np.zeros_like(a.inner))
    assert np.array_equal(a.voltages, b.voltages)
    assert np.array_equal(a.powers, b.powers)
    assert np.array_equal(a.outer, b.outer)


def test_online_mode_keeps_every_port_soft_after_settling(golden_config, golden_scenario):
    result = run_scenario(golden_config, golden_controllers(), golden_scenario.events,
                          mode=MODE_ONLINE_ZVS, duration=0.06, eps_current=1e-6)
    dt = result.control_period
    for start in (0.0, 0.02, 0.04):
        settled = (result.times >= start + 0.01) & (result.times < start + 0.02)
        window = result.zvs_status[settled]
        assert window.size
        assert set(np.unique(window)) <= {"ZVS", "BOUNDARY"}
    assert dt == pytest.approx(2 * golden_config.half_period)


def test_reference_step_event(golden_config):
    events = (ScenarioEvent(time=0.015, port=4, set="reference", value=320.0),)
    result = run_scenario(golden_config, golden_controllers(), events,
                          mode=MODE_ONLINE_ZVS, duration=0.04)
    assert result.voltages[-1, 3] == pytest.approx(320.0, abs=0.1)
    event, settle = result.settling[0]
    assert event.port == 4 and settle is not None and settle < 0.01


def test_collapse_during_run_carries_timestamp(golden_config):
    ctl = golden_controllers()
    events = (ScenarioEvent(time=0.01, port=4, set="load", value=5e6),)
    with pytest.raises(VoltageCollapseError) as err:
        run_scenario(golden_config, ctl, events, mode=MODE_ONLINE_ZVS, duration=0.05)
    assert err.value.time >= 0.01
    assert err.value.port == 4


# --------------------------------------------------------- find_equilibrium

def test_equilibrium_balances_every_load(golden_config):
    for mode in (MODE_SPS, MODE_ONLINE_ZVS):
        shifts = find_equilibrium(golden_config, mode=mode)
        p = port_powers(golden_config, shifts)
        targets = load_power_targets(golden_config)
        assert np.allclose(p[1:], -targets[1:], atol=1e-6)


def test_equilibrium_matches_settled_controller(golden_config):
    shifts = find_equilibrium(golden_config, mode=MODE_ONLINE_ZVS)
    result = run_scenario(golden_config, golden_controllers(), events=(),
                          mode=MODE_ONLINE_ZVS, duration=0.04)
    assert np.allclose(result.outer[-1], shifts.outer, atol=2e-4)
    assert np.allclose(result.inner[-1], shifts.inner, atol=1e-9)


def test_equilibrium_rejects_unreachable_power(golden_config):
    loads = [p.load for p in golden_config.ports]
    loads[3] = LoadModel("constant_power", 5e7)  # far beyond the link capability
    with pytest.raises(RuntimeError, match="converge"):
        find_equilibrium(golden_config, mode=MODE_SPS, loads=loads)
