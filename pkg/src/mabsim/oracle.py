"""Independent brute-force reference for the closed-form current model.

The link couples pure inductors driven by piecewise-constant bridge
voltages, so between switching edges every inductor current is an exact
straight line:

    L_i * di_Li/dt = v_si(t) - n_i * sum_k (l_k / n_k) * v_sk(t).

This module rebuilds the steady state from nothing but that differential
equation and the switching-edge times: enumerate the edges, integrate the
constant slopes segment by segment (closed form, no step size, no
truncation error), and remove each current's period mean.  Pure inductors
admit a one-parameter family of periodic solutions; the zero-mean member is
the physical steady state (any real winding resistance damps the DC
component away), and it is the one the closed-form model produces.

Deliberately, nothing here evaluates the closed-form current expressions —
the whole point is an independent arbiter, so any disagreement implicates
the closed-form implementation or its validity region, never integration
error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConverterConfig, inductor_coefficients, current_scales


@dataclass(frozen=True)
class EventTimeline:
    """Switching-edge partition of one period [0, 2T).

    ``breakpoints`` are strictly increasing edge times (seconds) starting at
    0; segment ``j`` spans [breakpoints[j], breakpoints[j+1]) with the last
    one ending at 2T.  ``node_voltages[:, j]`` holds the constant bridge
    voltages inside segment j.
    """

    breakpoints: np.ndarray
    node_voltages: np.ndarray
    period: float

    @property
    def durations(self) -> np.ndarray:
        ends = np.concatenate([self.breakpoints[1:], [self.period]])
        return ends - self.breakpoints


@dataclass(frozen=True)
class PiecewiseCurrents:
    """Piecewise-linear currents over a timeline: values at breakpoints plus slopes."""

    timeline: EventTimeline
    at_breakpoints: np.ndarray  # (N, n_segments) current entering each segment
    slopes: np.ndarray          # (N, n_segments) amperes per second

    def evaluate(self, t) -> np.ndarray:
        """Currents at arbitrary times, shape (N, len(t))."""
        tl = self.timeline
        tt = np.mod(np.atleast_1d(np.asarray(t, dtype=float)), tl.period)
        idx = np.searchsorted(tl.breakpoints, tt, side="right") - 1
        return self.at_breakpoints[:, idx] + self.slopes[:, idx] * (tt - tl.breakpoints[idx])


def _segment_node_voltages(config, shifts, mids_u, voltages):
    """Bridge voltages at the segment midpoints, computed from edge geometry only."""
    v = config.voltages if voltages is None else np.asarray(voltages, dtype=float)
    d = shifts.outer[:, None]
    dd = shifts.inner[:, None]
    u = mids_u[None, :]
    # inside the zero window [d, d+D] (mod 2): 0; then +V until d+1; -V after d+1+D
    w = np.mod(u - d, 2.0)
    vs = np.where(w < dd, 0.0, np.where(w < 1.0, 1.0, np.where(w < 1.0 + dd, 0.0, -1.0)))
    return v[:, None] * vs


def build_timeline(config: ConverterConfig, shifts, voltages=None) -> EventTimeline:
    """Enumerate all switching edges of all ports over one period."""
    T = config.half_period
    edges = np.concatenate([shifts.outer, shifts.outer + shifts.inner])
    phases = np.unique(np.concatenate([edges % 2.0, (edges + 1.0) % 2.0, [0.0]]))
    ends = np.concatenate([phases[1:], [2.0]])
    mids = (phases + ends) / 2.0
    vs = _segment_node_voltages(config, shifts, mids, voltages)
    return EventTimeline(breakpoints=phases * T, node_voltages=vs, period=2.0 * T)


def integrate_currents(config, shifts, initial, timeline: EventTimeline) -> PiecewiseCurrents:
    """March the exact per-segment slopes from the given initial currents."""
    l = inductor_coefficients(config)
    n = config.turns
    vh = np.sum((l / n)[:, None] * timeline.node_voltages, axis=0)
    slopes = (timeline.node_voltages - n[:, None] * vh[None, :]) / config.inductances[:, None]
    durations = timeline.durations
    steps = slopes * durations[None, :]
    at_bp = np.asarray(initial, dtype=float)[:, None] + np.concatenate(
        [np.zeros((config.n_ports, 1)), np.cumsum(steps[:, :-1], axis=1)], axis=1
    )
    return PiecewiseCurrents(timeline=timeline, at_breakpoints=at_bp, slopes=slopes)


def steady_state_oracle(config, shifts, voltages=None) -> PiecewiseCurrents:
    """Zero-mean periodic currents: integrate one period from zero, remove means.

    The drive voltages average to zero over a period, so the one-period
    integral is periodic from any starting point; subtracting each current's
    mean selects the physical steady state.
    """
    tl = build_timeline(config, shifts, voltages)
    pw = integrate_currents(config, shifts, np.zeros(config.n_ports), tl)
    a = pw.at_breakpoints
    b = a + pw.slopes * tl.durations[None, :]
    means = np.sum((a + b) / 2.0 * tl.durations[None, :], axis=1) / tl.period
    return PiecewiseCurrents(timeline=tl, at_breakpoints=a - means[:, None], slopes=pw.slopes)


def oracle_port_powers(config, shifts, voltages=None) -> np.ndarray:
    """Per-port average powers from the oracle currents; they sum to ~0 (lossless)."""
    pw = steady_state_oracle(config, shifts, voltages)
    tl = pw.timeline
    a = pw.at_breakpoints
    b = a + pw.slopes * tl.durations[None, :]
    return np.sum(tl.node_voltages * (a + b) / 2.0 * tl.durations[None, :], axis=1) / tl.period


def compare_closed_form(config, shifts, voltages=None, current_fn=None) -> float:
    """Worst |closed form - oracle| / K_i over breakpoints and midpoints.

    ``current_fn(config, shifts, t, voltages)`` defaults to the closed-form
    current matrix; the deferred import keeps the reference computation above
    free of the code path under test.
    """
    if current_fn is None:
        from .waveforms import current_matrix as current_fn
    pw = steady_state_oracle(config, shifts, voltages)
    tl = pw.timeline
    mids = tl.breakpoints + tl.durations / 2.0
    ts = np.concatenate([tl.breakpoints, mids])
    ref = pw.evaluate(ts)
    v1 = None if voltages is None else np.asarray(voltages, dtype=float)[0]
    scale = current_scales(config, v1)
    err = np.abs(current_fn(config, shifts, ts, voltages) - ref) / scale[:, None]
    return float(np.max(err))


def random_operating_point(rng: np.random.Generator, n_min: int = 2, n_max: int = 6):
    """Random valid (config, shifts) draw for equivalence campaigns."""
    from .core import ConverterConfig, PortSpec
    from .waveforms import PhaseShiftSet

    n = int(rng.integers(n_min, n_max + 1))
    ports = tuple(
        PortSpec(
            index=i + 1,
            dc_voltage=float(rng.uniform(40.0, 900.0)),
            turns_ratio=float(rng.uniform(0.2, 3.0)),
            leakage_inductance=float(rng.uniform(2e-6, 80e-6)),
        )
        for i in range(n)
    )
    config = ConverterConfig(ports=ports, switching_frequency=float(rng.uniform(2e4, 2e5)))
    outer = np.concatenate([[0.0], rng.uniform(-0.5, 0.5, n - 1)])
    inner = rng.uniform(0.0, 1.0, n) * (rng.random(n) < 0.8)  # keep some two-level bridges
    return config, PhaseShiftSet(outer=outer, inner=inner)
