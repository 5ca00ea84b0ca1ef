"""Pytest configuration and fixtures for flatsonium tests."""

import pytest

from flatsonium.circuit import CircuitParams
from flatsonium.config import RunConfig


@pytest.fixture
def fig2_params():
    """Engineered circuit: E_C=6, E_L=0.5, E_JSigma=20 GHz, r=2, b=r+1."""
    return CircuitParams(ec_ghz=6.0, el_ghz=0.5, ej_sum_ghz=20.0, b=3.0, r=2.0)


@pytest.fixture
def r3_params():
    """r=3, b=4 circuit with the same energies."""
    return CircuitParams(ec_ghz=6.0, el_ghz=0.5, ej_sum_ghz=20.0, b=4.0, r=3.0)


@pytest.fixture
def fluxonium_params():
    """Single-junction limit b=0, r=0."""
    return CircuitParams.fluxonium(ec_ghz=6.0, el_ghz=0.5, ej_ghz=20.0)


@pytest.fixture
def harmonic_params():
    """No Josephson energy: a bare LC oscillator."""
    return CircuitParams(ec_ghz=6.0, el_ghz=0.5, ej_sum_ghz=0.0, b=3.0, r=2.0)


@pytest.fixture
def default_config(tmp_path):
    """Default RunConfig writing into a temporary directory."""
    return RunConfig(output_path=tmp_path / "out.csv")
