"""Lumped actuator dynamics and virtual bench experiments."""

from cqdd.dynamics.actuator import (
    ActuatorConfig,
    ActuatorState,
    PDGains,
    backlash_update,
    friction_torque,
    reflected_inertia,
    ripple_torque,
    step,
)
from cqdd.dynamics.estimator import AccelerationEstimator
from cqdd.dynamics.experiments import (
    BackdriveResult,
    BacklashResult,
    ripple_peak_to_peak,
    virtual_backdrive_experiment,
    virtual_backlash_experiment,
)

__all__ = [
    "ActuatorConfig",
    "ActuatorState",
    "PDGains",
    "AccelerationEstimator",
    "BackdriveResult",
    "BacklashResult",
    "backlash_update",
    "friction_torque",
    "reflected_inertia",
    "ripple_peak_to_peak",
    "ripple_torque",
    "step",
    "virtual_backdrive_experiment",
    "virtual_backlash_experiment",
]
