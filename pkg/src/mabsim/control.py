"""Average-value closed-loop simulation of the regulated converter.

One full model evaluation happens per control period (default: one
switching period 2T).  Each step samples the DC bus voltages, computes the
inner ratios from them (online full-ZVS rule, or all zero under the
single-phase-shift baseline), updates the outer ratios with per-port PI
voltage controllers, evaluates the steady-state port powers from the
closed-form model at the sampled voltages, and advances the bus voltages
with the power balance

    C_i dV_i/dt = (-P_i - P_load,i(V_i)) / V_i

for every non-source port (P_i positive means the port injects into the
link, so -P_i is what arrives at its DC bus).  Intra-period ripple is out
of scope; the simulator tracks per-period averages only, which is adequate
because the optimization acts on per-period phase-shift variables.

Runs are strictly sequential and deterministic; independent scenarios can
run in parallel without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import ConverterConfig, LoadModel, validate_config
from .waveforms import PhaseShiftSet, port_powers, steady_state_report
from .zvs import online_duty_ratios, sps_duty_ratios

MODE_SPS = "sps"
MODE_ONLINE_ZVS = "zvs"


class VoltageCollapseError(RuntimeError):
    """A simulated bus voltage fell to zero; the run cannot continue."""

    def __init__(self, port: int, time: float, voltage: float):
        self.port = port
        self.time = time
        self.voltage = voltage
        super().__init__(
            f"voltage collapse on port {port} at t={time * 1e3:.3f} ms (V={voltage:.3f} V)"
        )


@dataclass
class PiController:
    """Discrete PI regulator for one port's outer phase shift.

    Output and integrator are clamped to [out_min, out_max]; the integrator
    freezes whenever the output is saturated and the error would push it
    further (conditional anti-windup).
    """

    kp: float
    ki: float
    reference: float
    out_min: float = -0.5
    out_max: float = 0.5
    integrator: float = 0.0


def pi_step(state: PiController, measured: float, dt: float) -> float:
    """Advance one control period and return the new outer ratio."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    error = state.reference - measured
    candidate = state.integrator + state.ki * error * dt
    candidate = min(max(candidate, state.out_min), state.out_max)
    out = state.kp * error + candidate
    if out > state.out_max:
        return state.out_max  # integrator frozen while saturated high
    if out < state.out_min:
        return state.out_min
    state.integrator = candidate
    return out


def plant_step(config: ConverterConfig, powers, voltages, dt: float,
               loads=None, time: float = 0.0) -> np.ndarray:
    """Explicit per-period update of the DC bus voltages.

    ``powers`` are the port powers into the link at the current operating
    point.  Ports terminated by a voltage source keep their voltage; every
    other port needs a positive capacitance.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    v = np.array(voltages, dtype=float)
    p = np.asarray(powers, dtype=float)
    caps = config.capacitances
    if loads is None:
        loads = [port.load for port in config.ports]
    for i, load in enumerate(loads):
        if load is None or load.kind == "voltage_source":
            continue
        if not caps[i] > 0.0:
            raise ValueError(f"port {i + 1} needs positive dc capacitance for bus dynamics")
        v[i] += dt * (-p[i] - load.power_drawn(v[i])) / (caps[i] * v[i])
        if not v[i] > 0.0:
            raise VoltageCollapseError(port=i + 1, time=time, voltage=v[i])
    return v


@dataclass(frozen=True)
class ScenarioEvent:
    """A step change applied at ``time``: a new load value or a new reference."""

    time: float
    port: int
    set: str            # "load" or "reference"
    value: float

    def __post_init__(self):
        if self.set not in ("load", "reference"):
            raise ValueError(f"event must set 'load' or 'reference', got {self.set!r}")


@dataclass(frozen=True)
class ScenarioResult:
    """Per-control-period time series plus settling metrics for each event."""

    times: np.ndarray
    voltages: np.ndarray       # (n_steps, N)
    powers: np.ndarray         # (n_steps, N), positive into the link
    outer: np.ndarray          # (n_steps, N)
    inner: np.ndarray          # (n_steps, N)
    zvs_status: np.ndarray     # (n_steps, N) strings
    settling: tuple            # one (event, seconds or None) pair per event
    steady_state_errors: dict  # port -> final |V - reference| in volts
    mode: str
    control_period: float


def settling_time(times, series, target=None, band: float = 0.02):
    """Seconds from the series start until it last leaves the +/-band envelope.

    The envelope is ``band`` (fractional) around ``target``, or around the
    final value when no target is given.  Returns 0.0 for a series that never
    leaves the band and None when the last sample is still outside
    (unsettled).
    """
    if band <= 0.0:
        raise ValueError(f"band must be positive, got {band}")
    t = np.asarray(times, dtype=float)
    x = np.asarray(series, dtype=float)
    ref = float(x[-1]) if target is None else float(target)
    tol = band * abs(ref) if ref != 0.0 else band * float(np.max(np.abs(x), initial=0.0))
    outside = np.abs(x - ref) > tol
    if not outside.any():
        return 0.0
    last = int(np.nonzero(outside)[0][-1])
    if last + 1 >= t.size:
        return None
    return float(t[last + 1] - t[0])


def run_scenario(config: ConverterConfig, controllers: dict, events=(), mode: str = MODE_ONLINE_ZVS,
                 duration: float = 0.05, control_period: float | None = None,
                 eps_current: float = 0.0, settle_band: float = 0.02) -> ScenarioResult:
    """Simulate the closed loop and collect the full time series.

    ``controllers`` maps port index (2..N) to a PiController; controller
    state is copied, so a scenario can be re-run bit-identically.  Events are
    applied at the first control step at or after their timestamps.
    """
    validate_config(config)
    if mode not in (MODE_SPS, MODE_ONLINE_ZVS):
        raise ValueError(f"unknown mode {mode!r}")
    dt = 2.0 * config.half_period if control_period is None else control_period
    n_steps = int(round(duration / dt))
    n = config.n_ports
    ctrl = {port: replace(c) for port, c in controllers.items()}
    loads = [port.load for port in config.ports]
    events = tuple(sorted(events, key=lambda e: e.time))
    next_event = 0

    v = config.voltages.copy()
    d = np.zeros(n)
    times = np.arange(n_steps) * dt
    volts = np.empty((n_steps, n))
    pows = np.empty((n_steps, n))
    outer = np.empty((n_steps, n))
    inner = np.empty((n_steps, n))
    status = np.empty((n_steps, n), dtype="<U8")

    for step in range(n_steps):
        t = times[step]
        while next_event < len(events) and events[next_event].time <= t + dt / 2.0:
            ev = events[next_event]
            if ev.set == "load":
                old = loads[ev.port - 1]
                if old is None:
                    raise ValueError(f"event targets port {ev.port} which has no load")
                loads[ev.port - 1] = LoadModel(kind=old.kind, value=ev.value)
            else:
                ctrl[ev.port].reference = ev.value
            next_event += 1

        if mode == MODE_ONLINE_ZVS:
            dd = online_duty_ratios(v, config.turns).inner_ratios
        else:
            dd = sps_duty_ratios(n)
        for port, c in ctrl.items():
            d[port - 1] = pi_step(c, v[port - 1], dt)
        shifts = PhaseShiftSet(outer=d.copy(), inner=dd)
        report = steady_state_report(config, shifts, voltages=v, eps_current=eps_current)

        volts[step] = v
        pows[step] = report.dc_powers
        outer[step] = d
        inner[step] = dd
        status[step] = report.zvs_status

        v = plant_step(config, report.dc_powers, v, dt, loads=loads, time=t)

    settling = []
    for idx, ev in enumerate(events):
        start = int(np.searchsorted(times, ev.time))
        stop = int(np.searchsorted(times, events[idx + 1].time)) if idx + 1 < len(events) else n_steps
        if start >= stop:
            settling.append((ev, None))
            continue
        window = slice(start, stop)
        if ev.set == "load":
            series = -pows[window, ev.port - 1]  # power received by the stepped port
        else:
            series = volts[window, ev.port - 1]
        settling.append((ev, settling_time(times[window], series, band=settle_band)))

    errors = {port: float(abs(volts[-1, port - 1] - c.reference)) for port, c in ctrl.items()}
    return ScenarioResult(
        times=times, voltages=volts, powers=pows, outer=outer, inner=inner,
        zvs_status=status, settling=tuple(settling), steady_state_errors=errors,
        mode=mode, control_period=dt,
    )


def load_power_targets(config: ConverterConfig, loads=None) -> np.ndarray:
    """Watts each non-source port draws at its setpoint voltage."""
    if loads is None:
        loads = [port.load for port in config.ports]
    v = config.voltages
    return np.array(
        [0.0 if ld is None or ld.kind == "voltage_source" else ld.power_drawn(v[i])
         for i, ld in enumerate(loads)]
    )


def find_equilibrium(config: ConverterConfig, mode: str = MODE_ONLINE_ZVS, loads=None,
                     voltages=None, tol: float = 1e-8, max_iter: int = 60) -> PhaseShiftSet:
    """Outer shifts balancing every non-source port's power draw at setpoints.

    This is the operating point the voltage loops converge to; a damped
    Newton iteration on the closed-form power map finds it directly, which
    keeps steady-state studies (mode comparisons, load sweeps) independent of
    controller tuning.
    """
    validate_config(config)
    v = config.voltages if voltages is None else np.asarray(voltages, dtype=float)
    if mode == MODE_ONLINE_ZVS:
        dd = online_duty_ratios(v, config.turns).inner_ratios
    elif mode == MODE_SPS:
        dd = sps_duty_ratios(config.n_ports)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    targets = -load_power_targets(config, loads)[1:]  # port power into the link is negative when fed
    x = np.zeros(config.n_ports - 1)

    def residual(x):
        shifts = PhaseShiftSet(outer=np.concatenate([[0.0], x]), inner=dd)
        return port_powers(config, shifts, v)[1:] - targets

    r = residual(x)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        h = 1e-7
        jac = np.empty((x.size, x.size))
        for j in range(x.size):
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (residual(xp) - r) / h
        step = np.linalg.solve(jac, r)
        scale = 1.0
        for _ in range(30):  # damp until the residual actually shrinks
            xn = np.clip(x - scale * step, -0.5, 0.5)
            rn = residual(xn)
            if np.max(np.abs(rn)) < np.max(np.abs(r)):
                x, r = xn, rn
                break
            scale *= 0.5
        else:
            break  # no damping factor helped; give the final check the last word
    if np.max(np.abs(r)) > 1e-6:
        raise RuntimeError(f"power-flow iteration did not converge (residual {np.max(np.abs(r)):.3e} W)")
    return PhaseShiftSet(outer=np.concatenate([[0.0], x]), inner=dd)
