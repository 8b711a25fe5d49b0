from pathlib import Path

import numpy as np
import pytest

from mabsim import ConverterConfig, LoadModel, PhaseShiftSet, PortSpec, parse_scenario

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def make_config(voltages, turns, inductances, fs=50e3, caps=None, loads=None):
    caps = caps if caps is not None else [0.0] * len(voltages)
    loads = loads if loads is not None else [None] * len(voltages)
    ports = tuple(
        PortSpec(index=i + 1, dc_voltage=v, turns_ratio=n, leakage_inductance=l,
                 dc_capacitance=c, load=ld)
        for i, (v, n, l, c, ld) in enumerate(zip(voltages, turns, inductances, caps, loads))
    )
    return ConverterConfig(ports=ports, switching_frequency=fs)


@pytest.fixture(scope="session")
def golden_scenario():
    return parse_scenario(SCENARIO_DIR / "golden.json")


@pytest.fixture(scope="session")
def golden_config(golden_scenario):
    return golden_scenario.config


@pytest.fixture(scope="session")
def golden_15u_config():
    return parse_scenario(SCENARIO_DIR / "golden_l4_15uh.json").config


@pytest.fixture(scope="session")
def dab_config():
    """Classic two-port benchmark: 400 V / 400 V, 30 uH per side, 50 kHz."""
    return make_config([400.0, 400.0], [1.0, 1.0], [30e-6, 30e-6])


@pytest.fixture
def dab_quarter_shift():
    """Plain square waves with the second bridge lagging by a quarter half-period."""
    return PhaseShiftSet(outer=np.array([0.0, 0.25]), inner=np.zeros(2))


def random_shift_set(rng, n):
    outer = np.concatenate([[0.0], rng.uniform(-0.5, 0.5, n - 1)])
    inner = rng.uniform(0.0, 1.0, n) * (rng.random(n) < 0.8)
    return PhaseShiftSet(outer=outer, inner=inner)
