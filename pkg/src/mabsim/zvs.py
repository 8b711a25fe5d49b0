"""Full-ZVS inner-phase-shift design.

The load-independent part of every switching-instant current is the
full-ZVS term

    T_i = sum_{k != i} l_k M_k (1 - D_k) - (1 - l_i) M_i (1 - D_i),

which reduces to ``A - M_i (1 - D_i)`` with ``A = sum_k l_k M_k (1 - D_k)``.
Since the alignment penalties subtracted from it are never negative,
``T_i <= 0`` guarantees non-positive turn-on currents for port i at any
load.  The weighted sum ``sum_i l_i T_i`` vanishes identically, so the only
way to get ``T_i <= 0`` on every port simultaneously is ``T_i = 0`` for all
of them.  That linear system is rank-deficient by the same identity and its
solution family is the one-parameter curve

    D_i = 1 - lambda / M_i,      0 < lambda <= min_i M_i.

Choosing ``lambda = min_i M_i`` minimizes every inner ratio at once (the
bridge of the minimum-ratio port stays two-level), which preserves power
capability; that choice needs nothing but the sampled DC voltages and turns
ratios, so it can run online inside the control loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DerivedParams


@dataclass(frozen=True)
class ZvsSolution:
    """Inner ratios solving the full-ZVS condition.

    ``lam`` is the common level M_i*(1 - D_i) shared by all ports;
    ``residual_norm`` is the worst deviation from that level (zero for an
    exact solution regardless of the inductor coefficients).
    """

    inner_ratios: np.ndarray
    lam: float
    min_ratio_port: int
    residual_norm: float


def full_zvs_term(derived: DerivedParams, inner, port: int) -> float:
    """Load-independent part of port ``port``'s switching-instant currents."""
    terms = full_zvs_terms(derived, inner)
    if not 1 <= port <= terms.size:
        raise ValueError(f"port out of range: {port}")
    return float(terms[port - 1])


def full_zvs_terms(derived: DerivedParams, inner) -> np.ndarray:
    """All full-ZVS terms at once: A - M_i (1 - D_i)."""
    dd = np.asarray(inner, dtype=float)
    l, M = derived.coefficients, derived.ratios
    level = M * (1.0 - dd)
    return np.sum(l * level) - level


def zvs_system_residual(derived: DerivedParams, inner) -> np.ndarray:
    """Row residuals (matrix @ D - rhs) of the full-ZVS linear system.

    Row i reads ``(1 - l_i) M_i D_i - sum_{k != i} l_k M_k D_k = M_i - A0``
    with ``A0 = sum_k l_k M_k``.  A duty vector achieves full ZVS exactly
    when every entry is zero, which is equivalent to every full-ZVS term
    being zero.
    """
    dd = np.asarray(inner, dtype=float)
    l, M = derived.coefficients, derived.ratios
    lmd = l * M * dd
    lhs = M * dd - np.sum(lmd)          # (1 - l_i) M_i D_i - sum_{k != i} l_k M_k D_k
    rhs = M - np.sum(l * M)
    return lhs - rhs


def general_solution(ratios, lam: float) -> ZvsSolution:
    """Inner ratios D_i = 1 - lam/M_i for a feasible level ``lam``.

    Feasible means 0 < lam <= min(M); anything else would push some D_i
    outside [0, 1) and raises ValueError.
    """
    M = np.asarray(ratios, dtype=float)
    m_min = float(np.min(M))
    if not 0.0 < lam <= m_min:
        raise ValueError(f"level {lam} outside the feasible range (0, {m_min}]")
    dd = 1.0 - lam / M
    dd[dd < 0.0] = 0.0  # guard one-ulp negatives when lam == min(M)
    level = M * (1.0 - dd)
    return ZvsSolution(
        inner_ratios=dd,
        lam=lam,
        min_ratio_port=int(np.argmin(M)) + 1,
        residual_norm=float(np.max(np.abs(level - lam))),
    )


def online_duty_ratios(live_voltages, turns_ratios) -> ZvsSolution:
    """Per-control-period rule: lam = min(M) from the sampled DC voltages.

    The minimum-ratio port gets D = 0 (two-level bridge voltage); on ties the
    lowest port index is reported, which does not change the duty vector.
    """
    v = np.asarray(live_voltages, dtype=float)
    n = np.asarray(turns_ratios, dtype=float)
    bad = np.nonzero(~(v > 0.0))[0]
    if bad.size:
        raise ValueError(f"non-positive voltage, port {bad[0] + 1}")
    M = n[0] * v / (n * v[0])
    j = int(np.argmin(M))  # lowest index wins ties
    dd = 1.0 - M[j] / M
    dd[j] = 0.0
    dd[dd < 0.0] = 0.0
    level = M * (1.0 - dd)
    return ZvsSolution(
        inner_ratios=dd,
        lam=float(M[j]),
        min_ratio_port=j + 1,
        residual_norm=float(np.max(np.abs(level - M[j]))),
    )


def sps_duty_ratios(n_ports: int) -> np.ndarray:
    """Single-phase-shift baseline: every inner ratio zero (two-level bridges)."""
    if n_ports < 2:
        raise ValueError(f"converter needs at least 2 ports, got {n_ports}")
    return np.zeros(n_ports)
