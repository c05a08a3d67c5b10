"""Shared fixtures: a small simulated dataset and tiny model specs."""

from __future__ import annotations

import pytest

from cqdd.dynamics.actuator import ActuatorConfig, PDGains
from cqdd.models.spec import ModelKind, ModelSpec
from cqdd.pendulum.dataset import Dataset, build_dataset
from cqdd.pendulum.scenario import (
    RigConfig,
    run_ripple_probe,
    sample_scenarios,
    simulate_scenarios,
)


@pytest.fixture(scope="session")
def actuator() -> ActuatorConfig:
    """Default actuator."""
    return ActuatorConfig()


@pytest.fixture(scope="session")
def gains() -> PDGains:
    return PDGains()


@pytest.fixture(scope="session")
def short_rig() -> RigConfig:
    """Rig with 2 s runs to keep simulation cheap."""
    return RigConfig(duration=2.0)


@pytest.fixture(scope="session")
def small_dataset(actuator: ActuatorConfig, gains: PDGains, short_rig: RigConfig) -> Dataset:
    """Six short scenarios plus one 4 s ripple probe."""
    scenarios = sample_scenarios(6, seed=3, rig=short_rig)
    trajectories = simulate_scenarios(scenarios, actuator, gains, short_rig)
    probe = run_ripple_probe(actuator, gains, duration=4.0, seed=5, name="probe-00")
    return build_dataset(trajectories, seed=3, probes=[probe])


@pytest.fixture
def tiny_gru() -> ModelSpec:
    return ModelSpec(
        name="tiny-gru", kind=ModelKind.GRU, input_channels=3, history=5, layers=2, hidden_size=4
    )


@pytest.fixture
def tiny_mlp() -> ModelSpec:
    return ModelSpec(
        name="tiny-mlp", kind=ModelKind.MLP, input_channels=2, history=4, layers=3, hidden_size=6
    )
