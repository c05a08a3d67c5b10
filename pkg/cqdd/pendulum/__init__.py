"""Pendulum rig simulation and trajectory datasets."""

from cqdd.pendulum.dataset import (
    Dataset,
    InputMode,
    Normalization,
    build_dataset,
    load_dataset,
    save_dataset,
    window,
)
from cqdd.pendulum.scenario import (
    DEFAULT_RANGES,
    PendulumScenario,
    RigConfig,
    SamplingRanges,
    Trajectory,
    describe_ranges,
    run_ripple_probe,
    run_scenario,
    sample_scenarios,
    simulate_scenarios,
)

__all__ = [
    "DEFAULT_RANGES",
    "Dataset",
    "InputMode",
    "Normalization",
    "PendulumScenario",
    "RigConfig",
    "SamplingRanges",
    "Trajectory",
    "build_dataset",
    "describe_ranges",
    "load_dataset",
    "run_ripple_probe",
    "run_scenario",
    "sample_scenarios",
    "save_dataset",
    "simulate_scenarios",
    "window",
]
