"""Converter descriptions and the per-port quantities derived from them.

An N-port active-bridge converter couples full-bridge ports through a
high-frequency link.  Port 1 is the reference port; every other port is
described relative to it.  The derived quantities used throughout the
package are

* the voltage conversion ratios ``M_i = n1*V_i / (n_i*V1)``,
* the inductor coefficients ``l_i = (n_i^2/L_i) / sum_k (n_k^2/L_k)``
  (they always sum to one and weight each bridge's contribution to the
  link voltage), and
* the current scale factors ``K_i = (n_i/n1) * V1*T / (2*L_i)`` that set
  the ampere scale of every steady-state current expression, where
  ``T = 1/(2*f_s)`` is the half period of the modulation.

Everything in this module is a pure function of immutable inputs and is
safe to share across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """A converter description violates one of its invariants."""


LOAD_KINDS = ("voltage_source", "resistor", "constant_power")


@dataclass(frozen=True)
class LoadModel:
    """DC-side termination of a port.

    ``voltage_source`` pins the bus voltage (value in volts), ``resistor``
    draws V^2/R (value in ohms, > 0), ``constant_power`` draws a fixed
    wattage regardless of bus voltage (value in watts, >= 0).
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in LOAD_KINDS:
            raise ConfigError(f"unknown load kind {self.kind!r}; expected one of {LOAD_KINDS}")
        if self.kind == "resistor" and not self.value > 0.0:
            raise ConfigError(f"resistor load must be positive, got {self.value}")
        if self.kind == "constant_power" and self.value < 0.0:
            raise ConfigError(f"constant-power load must be non-negative, got {self.value}")
        if self.kind == "voltage_source" and not self.value > 0.0:
            raise ConfigError(f"voltage source must be positive, got {self.value}")

    def power_drawn(self, voltage: float) -> float:
        """Watts pulled out of the DC bus at the given bus voltage."""
        if self.kind == "resistor":
            return voltage * voltage / self.value
        if self.kind == "constant_power":
            return self.value
        return 0.0  # an ideal source absorbs the balance; bus dynamics do not apply


@dataclass(frozen=True)
class PortSpec:
    """Electrical description of one full-bridge port.

    ``turns_ratio`` is the primary-side value of the ``n_i : 1`` transformer,
    ``leakage_inductance`` the total leakage seen by the port winding, and
    ``dc_capacitance`` the DC bus capacitance (only the closed-loop simulator
    uses it).
    """

    index: int
    dc_voltage: float
    turns_ratio: float
    leakage_inductance: float
    dc_capacitance: float = 0.0
    load: LoadModel | None = None


@dataclass(frozen=True)
class ConverterConfig:
    """Ordered collection of ports plus the switching frequency."""

    ports: tuple[PortSpec, ...]
    switching_frequency: float

    def __post_init__(self):
        object.__setattr__(self, "ports", tuple(self.ports))

    @property
    def n_ports(self) -> int:
        return len(self.ports)

    @property
    def half_period(self) -> float:
        """Half period T; the modulation repeats every 2T."""
        return 0.5 / self.switching_frequency

    @property
    def voltages(self) -> np.ndarray:
        return np.array([p.dc_voltage for p in self.ports], dtype=float)

    @property
    def turns(self) -> np.ndarray:
        return np.array([p.turns_ratio for p in self.ports], dtype=float)

    @property
    def inductances(self) -> np.ndarray:
        return np.array([p.leakage_inductance for p in self.ports], dtype=float)

    @property
    def capacitances(self) -> np.ndarray:
        return np.array([p.dc_capacitance for p in self.ports], dtype=float)


@dataclass(frozen=True)
class DerivedParams:
    """Bundle of conversion ratios, inductor coefficients, and current scales."""

    ratios: np.ndarray
    coefficients: np.ndarray
    current_scales: np.ndarray


def validate_config(config: ConverterConfig) -> ConverterConfig:
    """Return ``config`` unchanged if every invariant holds, else raise ConfigError.

    The first violated invariant is reported with the offending port index.
    """
    if config.n_ports < 2:
        raise ConfigError("converter needs at least 2 ports")
    if not config.switching_frequency > 0.0:
        raise ConfigError(f"switching frequency must be positive, got {config.switching_frequency}")
    for pos, port in enumerate(config.ports):
        if port.index != pos + 1:
            raise ConfigError(
                f"port indices must be contiguous from 1; position {pos} holds index {port.index}"
            )
        if not port.dc_voltage > 0.0:
            raise ConfigError(f"non-positive dc voltage, port {port.index}")
        if not port.turns_ratio > 0.0:
            raise ConfigError(f"non-positive turns ratio, port {port.index}")
        if not port.leakage_inductance > 0.0:
            raise ConfigError(f"non-positive inductance, port {port.index}")
        if port.dc_capacitance < 0.0:
            raise ConfigError(f"negative capacitance, port {port.index}")
    return config


def _check_voltages(config: ConverterConfig, live_voltages) -> np.ndarray:
    if live_voltages is None:
        return config.voltages
    v = np.asarray(live_voltages, dtype=float)
    if v.shape != (config.n_ports,):
        raise ConfigError(f"expected {config.n_ports} live voltages, got shape {v.shape}")
    bad = np.nonzero(~(v > 0.0))[0]
    if bad.size:
        raise ConfigError(f"non-positive live voltage, port {bad[0] + 1}")
    return v


def conversion_ratios(config: ConverterConfig, live_voltages=None) -> np.ndarray:
    """Voltage conversion ratios M_i = n1*V_i/(n_i*V1); M_1 is 1 by construction.

    ``live_voltages`` defaults to the configured setpoints; closed-loop code
    passes the sampled bus voltages instead.
    """
    v = _check_voltages(config, live_voltages)
    n = config.turns
    return n[0] * v / (n * v[0])


def inductor_coefficients(config: ConverterConfig) -> np.ndarray:
    """Normalized admittance weights l_i; they sum to exactly one."""
    n = config.turns
    w = n * n / config.inductances
    return w / w.sum()


def current_scales(config: ConverterConfig, v1: float | None = None) -> np.ndarray:
    """Ampere scale K_i = (n_i/n1) * V1*T/(2*L_i) of the steady-state currents."""
    n = config.turns
    if v1 is None:
        v1 = config.ports[0].dc_voltage
    return (n / n[0]) * v1 * config.half_period / (2.0 * config.inductances)


def derive_params(config: ConverterConfig, live_voltages=None) -> DerivedParams:
    """Bundle ratios, coefficients, and current scales for one operating point."""
    v = _check_voltages(config, live_voltages)
    return DerivedParams(
        ratios=conversion_ratios(config, v),
        coefficients=inductor_coefficients(config),
        current_scales=current_scales(config, v[0]),
    )
