"""Closed-form steady-state analysis under multi-phase-shift modulation.

Each bridge keeps 50 % duty on both legs; the leg driving the leading edge
of port ``i`` switches at phase ``d_i`` (in half-period units) and the
diagonal leg at ``d_i + D_i``, so the switched-node voltage is a three-level
quasi-square wave whose zero state occupies the window ``[d_i, d_i + D_i]``
in each half cycle.  With ``D_i = 0`` the window vanishes and the bridge
produces a plain two-level square wave.

Because every quasi-square wave is the sum of two half-magnitude square
waves (phases ``d_i`` and ``d_i + D_i``), each inductor current is a
superposition of triangular waves.  Writing ``tri`` for the period-2
triangular extension of ``|u|`` on [-1, 1] and ``u = t/T``, the steady
zero-mean current of port ``i`` is

    i_Li(u) = K_i * [ A - M_i
                      + M_i * (tri(u - d_i) + tri(u - d_i - D_i))
                      - sum_k l_k M_k * (tri(u - d_k) + tri(u - d_k - D_k)) ]

with ``A = sum_k l_k M_k``.  All currents here are exact piecewise-linear
functions, so RMS values and powers are integrated segment by segment over
the breakpoint partition instead of being sampled.

Sign conventions: positive inductor current follows the port's marked
direction, and positive port power means the port injects power into the
link.  A switch pair achieves ZVS when the port current is negative at its
turn-on instants ``t_i1 = d_i*T`` and ``t_i2 = (d_i + D_i)*T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConverterConfig, derive_params

ZVS = "ZVS"
BOUNDARY = "BOUNDARY"
HARD = "HARD"


def tri_wave(x):
    """Period-2 even triangular wave equal to |x| on [-1, 1]."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - 2.0 * np.round(x / 2.0))


def square_wave(x):
    """Period-2 square wave: +1 on [0, 1), -1 on [1, 2); right-continuous."""
    x = np.asarray(x, dtype=float)
    return np.where(np.mod(x, 2.0) < 1.0, 1.0, -1.0)


@dataclass(frozen=True)
class PhaseShiftSet:
    """Modulation state: outer ratios d_i and inner ratios D_i (half-period units).

    Port 1 is the phase reference, so d_1 must be 0.  Outer ratios live in
    [-0.5, 0.5] and inner ratios in [0, 1).
    """

    outer: np.ndarray
    inner: np.ndarray

    def __post_init__(self):
        d = np.array(self.outer, dtype=float)
        dd = np.array(self.inner, dtype=float)
        object.__setattr__(self, "outer", d)
        object.__setattr__(self, "inner", dd)
        if d.shape != dd.shape or d.ndim != 1:
            raise ValueError(f"outer/inner shapes differ: {d.shape} vs {dd.shape}")
        if d.size and d[0] != 0.0:
            raise ValueError(f"outer ratio of the reference port must be 0, got {d[0]}")
        if np.any(d < -0.5) or np.any(d > 0.5):
            raise ValueError("outer ratios must lie in [-0.5, 0.5]")
        if np.any(dd < 0.0) or np.any(dd >= 1.0):
            raise ValueError("inner ratios must lie in [0, 1)")

    @property
    def n_ports(self) -> int:
        return self.outer.size


def _check_port(config: ConverterConfig, port: int) -> int:
    if not 1 <= port <= config.n_ports:
        raise ValueError(f"port out of range: {port} (converter has {config.n_ports} ports)")
    return port - 1


def node_voltage_matrix(config, shifts, t, voltages=None) -> np.ndarray:
    """All switched-node voltages, shape (N, len(t))."""
    v = config.voltages if voltages is None else np.asarray(voltages, dtype=float)
    u = np.atleast_1d(np.asarray(t, dtype=float)) / config.half_period
    d = shifts.outer[:, None]
    dd = shifts.inner[:, None]
    return 0.5 * v[:, None] * (square_wave(u[None, :] - d) + square_wave(u[None, :] - d - dd))


def switched_node_voltage(config, shifts, port: int, t, voltages=None):
    """Three-level bridge voltage of one port at time(s) t (right-continuous)."""
    i = _check_port(config, port)
    out = node_voltage_matrix(config, shifts, t, voltages)[i]
    return out if np.ndim(t) else float(out[0])


def link_voltage(config, shifts, t, voltages=None):
    """High-frequency link voltage: coefficient-weighted sum of all v_si/n_i."""
    p = derive_params(config, voltages)
    vs = node_voltage_matrix(config, shifts, t, voltages)
    out = np.sum((p.coefficients / config.turns)[:, None] * vs, axis=0)
    return out if np.ndim(t) else float(out[0])


def current_matrix(config, shifts, t, voltages=None) -> np.ndarray:
    """All steady-state inductor currents, shape (N, len(t))."""
    p = derive_params(config, voltages)
    l, M, K = p.coefficients, p.ratios, p.current_scales
    a = float(np.sum(l * M))
    u = np.atleast_1d(np.asarray(t, dtype=float)) / config.half_period
    d = shifts.outer[:, None]
    dd = shifts.inner[:, None]
    pair = tri_wave(u[None, :] - d) + tri_wave(u[None, :] - d - dd)  # (N, nt)
    drive = np.sum((l * M)[:, None] * pair, axis=0)
    return K[:, None] * (a - M[:, None] + M[:, None] * pair - drive[None, :])


def inductor_current(config, shifts, port: int, t, voltages=None):
    """Zero-mean periodic inductor current of one port at time(s) t."""
    i = _check_port(config, port)
    out = current_matrix(config, shifts, t, voltages)[i]
    return out if np.ndim(t) else float(out[0])


def f1(i: int, k: int, shifts) -> float:
    """Published leading-edge gap between ports i and k (non-negative).

    Piecewise: d_i - d_k when d_i >= d_k; d_k - d_i - D_i when
    d_k >= d_i + D_i; otherwise 0.  Geometrically this is the distance from
    port k's outer edge to the zero-state window of port i.
    """
    di, dk = shifts.outer[i - 1], shifts.outer[k - 1]
    Di = shifts.inner[i - 1]
    if di >= dk:
        return di - dk
    if dk >= di + Di:
        return dk - di - Di
    return 0.0


def f2(i: int, k: int, shifts) -> float:
    """Published trailing-edge gap between ports i and k (non-negative).

    Piecewise: d_k - d_i when d_i <= d_k; d_i - D_i - d_k when
    d_i >= d_k + D_i; otherwise 0.
    """
    di, dk = shifts.outer[i - 1], shifts.outer[k - 1]
    Di = shifts.inner[i - 1]
    if di <= dk:
        return dk - di
    if di >= dk + Di:
        return di - Di - dk
    return 0.0


def zero_state_gap(tau, outer_k, inner_k):
    """Periodic distance from phase ``tau`` to the window [d_k, d_k + D_k].

    Zero whenever the phase falls inside the window (mod 2); otherwise the
    circular distance to its nearest edge.  Derived from the triangular-wave
    identity, so it stays valid for wrap-around shift combinations.
    """
    return 0.5 * (tri_wave(tau - outer_k) + tri_wave(tau - outer_k - inner_k) - inner_k)


def switching_instant_currents(config, shifts, live_voltages=None):
    """Inductor currents at each port's turn-on instants t_i1 and t_i2.

    Returns two length-N arrays.  Each value equals the closed-form current
    evaluated at the instant; the arrangement below exposes the
    load-independent term (see :func:`mabsim.zvs.full_zvs_term`) minus the
    always-non-negative alignment penalties.
    """
    p = derive_params(config, live_voltages)
    l, M, K = p.coefficients, p.ratios, p.current_scales
    d, dd = shifts.outer, shifts.inner
    lm = l * M
    base = np.sum(lm * (1.0 - dd)) - M * (1.0 - dd)  # equals the full-ZVS term of each port
    gaps_on = zero_state_gap(d[:, None], d[None, :], dd[None, :])          # (i, k)
    gaps_off = zero_state_gap((d + dd)[:, None], d[None, :], dd[None, :])
    i_on = K * (base - 2.0 * gaps_on @ lm)
    i_off = K * (base - 2.0 * gaps_off @ lm)
    return i_on, i_off


def classify_zvs(i_on, i_off, eps_current: float = 0.0):
    """Per-port switching classification from the two instant currents.

    ZVS when both currents are below -eps, HARD when either exceeds +eps,
    BOUNDARY otherwise.  By half-wave symmetry the result covers all four
    switches of the bridge.
    """
    if eps_current < 0.0:
        raise ValueError(f"negative tolerance: {eps_current}")
    worst = np.maximum(np.asarray(i_on, dtype=float), np.asarray(i_off, dtype=float))
    return tuple(
        ZVS if w < -eps_current else (HARD if w > eps_current else BOUNDARY) for w in worst
    )


def breakpoint_phases(shifts) -> np.ndarray:
    """Sorted kink phases of the current waveforms within [0, 2), 0 included."""
    edges = np.concatenate([shifts.outer, shifts.outer + shifts.inner])
    phases = np.unique(np.concatenate([edges % 2.0, (edges + 1.0) % 2.0, [0.0]]))
    return phases


def _segment_integrals(config, shifts, voltages=None):
    """Exact per-port mean-square currents and powers over one period.

    Currents are piecewise linear between breakpoints, node voltages constant
    inside each segment, so a quadratic/linear closed form per segment is
    exact.  Returns (mean_square[N], power[N], link_rms, link_peak).
    """
    T = config.half_period
    starts = breakpoint_phases(shifts)
    ends = np.concatenate([starts[1:], [2.0]])
    widths = ends - starts
    a = current_matrix(config, shifts, starts * T, voltages)            # segment entry
    b = np.concatenate([a[:, 1:], a[:, :1]], axis=1)                    # segment exit (periodic)
    mids = (starts + ends) / 2.0
    vs = node_voltage_matrix(config, shifts, mids * T, voltages)
    msq = np.sum((a * a + a * b + b * b) / 3.0 * widths[None, :], axis=1) / 2.0
    power = np.sum(vs * (a + b) / 2.0 * widths[None, :], axis=1) / 2.0
    p = derive_params(config, voltages)
    vh = np.sum((p.coefficients / config.turns)[:, None] * vs, axis=0)
    link_rms = float(np.sqrt(np.sum(vh * vh * widths) / 2.0))
    link_peak = float(np.max(np.abs(vh)))
    return msq, power, link_rms, link_peak


def rms_current(config, shifts, port: int, voltages=None) -> float:
    """RMS of one inductor current over a full period (exact integration)."""
    i = _check_port(config, port)
    msq, _, _, _ = _segment_integrals(config, shifts, voltages)
    return float(np.sqrt(msq[i]))


def port_power(config, shifts, port: int, voltages=None) -> float:
    """Period-average AC-side power of one port; positive injects into the link.

    Equal to the DC-side port power for the lossless bridge model.
    """
    i = _check_port(config, port)
    _, power, _, _ = _segment_integrals(config, shifts, voltages)
    return float(power[i])


def port_powers(config, shifts, voltages=None) -> np.ndarray:
    """All port powers at once (positive into the link)."""
    _, power, _, _ = _segment_integrals(config, shifts, voltages)
    return power


@dataclass(frozen=True)
class SteadyStateReport:
    """Per-port steady-state summary for one operating point."""

    currents_at_turn_on: np.ndarray
    currents_at_turn_off: np.ndarray
    zvs_status: tuple
    rms_currents: np.ndarray
    dc_powers: np.ndarray
    total_rms: float            # root of the summed squared port RMS currents
    hard_edge_current: float    # summed positive instant currents (switching-loss proxy)
    link_voltage_rms: float
    link_voltage_peak: float

    @property
    def rms_square_sum(self) -> float:
        """Sum of squared RMS currents, the conduction-loss proxy."""
        return float(np.sum(self.rms_currents**2))


def steady_state_report(config, shifts, voltages=None, eps_current: float = 0.0) -> SteadyStateReport:
    """Assemble instant currents, ZVS classification, RMS, and powers."""
    i_on, i_off = switching_instant_currents(config, shifts, voltages)
    status = classify_zvs(i_on, i_off, eps_current)
    msq, power, link_rms, link_peak = _segment_integrals(config, shifts, voltages)
    both = np.concatenate([i_on, i_off])
    hard = float(np.sum(both[both > eps_current])) if np.any(both > eps_current) else 0.0
    return SteadyStateReport(
        currents_at_turn_on=i_on,
        currents_at_turn_off=i_off,
        zvs_status=status,
        rms_currents=np.sqrt(msq),
        dc_powers=power,
        total_rms=float(np.sqrt(np.sum(msq))),
        hard_edge_current=hard,
        link_voltage_rms=link_rms,
        link_voltage_peak=link_peak,
    )


@dataclass(frozen=True)
class WaveformSeries:
    """Uniformly sampled node voltages, link voltage, and inductor currents."""

    times: np.ndarray
    node_voltages: np.ndarray      # (N, n_samples)
    inductor_currents: np.ndarray  # (N, n_samples)
    link_voltage: np.ndarray


def sample_waveforms(config, shifts, points_per_period: int, periods: int = 1,
                     voltages=None) -> WaveformSeries:
    """Sample all waveforms on a uniform grid spanning whole periods."""
    if points_per_period < 2:
        raise ValueError(f"points_per_period must be >= 2, got {points_per_period}")
    if periods < 1:
        raise ValueError(f"periods must be >= 1, got {periods}")
    period = 2.0 * config.half_period
    n = points_per_period * periods
    t = np.arange(n) * (period / points_per_period)
    vs = node_voltage_matrix(config, shifts, t, voltages)
    il = current_matrix(config, shifts, t, voltages)
    p = derive_params(config, voltages)
    vh = np.sum((p.coefficients / config.turns)[:, None] * vs, axis=0)
    return WaveformSeries(times=t, node_voltages=vs, inductor_currents=il, link_voltage=vh)
