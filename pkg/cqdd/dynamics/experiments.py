"""
Virtual bench experiments on the lumped actuator model.

Backdrive: the motor is unpowered and the output is driven by an external
torque, first on a slow ramp (breakaway) and then by a PI speed loop (sustaining
torque). Backlash: the motor is preloaded, reversed by a fixed travel larger than
the dead band, and the lost motion is read off the output travel. Ripple: the
actuator drives a dynamometer at constant speed against a given load and the
peak-to-peak of the recorded output torque is taken.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from cqdd.dynamics.actuator import (
    ActuatorConfig,
    ActuatorState,
    PDGains,
    advance,
    backlash_update,
    rad_to_arcmin,
)

logger = logging.getLogger(__name__)

RAMP_RATE_NM_S = 1.0
RAMP_MAX_S = 60.0
# Output speed for the sustaining-torque measurement; the published figure gives none.
DYNAMIC_SPEED_RAD_S = 0.5
SPEED_LOOP_KP = 0.5
SPEED_LOOP_KI = 20.0
SPEED_HOLD_S = 3.0
SPEED_AVERAGE_S = 1.0
REVERSAL_MARGIN = 4.0
RIPPLE_RUN_HZ = 17.2
RIPPLE_RUN_S = 2.0


@dataclass(frozen=True)
class BackdriveResult:
    static_nm: float
    dynamic_nm: float
    speed_rad_s: float


@dataclass(frozen=True)
class BacklashResult:
    mean_arcmin: float
    half_range_arcmin: float
    samples_arcmin: tuple[float, ...]


def _preloaded_for_backdrive(config: ActuatorConfig) -> ActuatorState:
    # Output pushes in +q, so the rotor trails it by half the band.
    return ActuatorState.at_rest(config, q=0.0, offset=-config.backlash_half_rad)


def measure_static_backdrive(config: ActuatorConfig) -> float:
    """Largest ramped output torque the unpowered actuator holds without moving."""
    h = config.internal_dt
    state = _preloaded_for_backdrive(config)
    held = 0.0
    steps = int(RAMP_MAX_S / h)
    for k in range(steps + 1):
        external = RAMP_RATE_NM_S * k * h
        state = advance(state, config, 0.0, external, h)
        if state.output_velocity != 0.0:
            return held
        held = external
    logger.warning("No breakaway within %.0f Nm ramp", RAMP_RATE_NM_S * RAMP_MAX_S)
    return held


def measure_dynamic_backdrive(config: ActuatorConfig, speed: float = DYNAMIC_SPEED_RAD_S) -> float:
    """Mean external torque a PI speed loop needs to hold the output at `speed`."""
    h = config.internal_dt
    state = _preloaded_for_backdrive(config)
    integral = 0.0
    total = int(round(SPEED_HOLD_S / h))
    window = int(round(SPEED_AVERAGE_S / h))
    applied = np.empty(total)
    for k in range(total):
        error = speed - state.output_velocity
        integral += error * h
        external = SPEED_LOOP_KP * error + SPEED_LOOP_KI * integral
        applied[k] = external
        state = advance(state, config, 0.0, external, h)
    return float(np.mean(applied[-window:]))


def virtual_backdrive_experiment(config: ActuatorConfig) -> BackdriveResult:
    """Static (breakaway) and dynamic (sustaining) backdrive torque [Nm]."""
    static = measure_static_backdrive(config)
    dynamic = measure_dynamic_backdrive(config)
    logger.info("Backdrive: static=%.4f Nm dynamic=%.4f Nm", static, dynamic)
    return BackdriveResult(static_nm=static, dynamic_nm=dynamic, speed_rad_s=DYNAMIC_SPEED_RAD_S)


def _lost_motion(config: ActuatorConfig, location: float, direction: float) -> float:
    """Dead band [rad] seen when reversing after a preload in `direction`."""
    n = config.gear_ratio
    half = config.backlash_half_rad
    travel = REVERSAL_MARGIN * max(2.0 * half, 1e-6)
    state = ActuatorState.at_rest(config, q=location, offset=0.0)
    # Preload: drive the rotor well past the band in `direction`.
    state = backlash_update(state, config, state.motor_angle + direction * travel * n)
    start = state.output_angle
    # Reverse by a fixed travel and see how far the output followed.
    state = backlash_update(state, config, state.motor_angle - direction * travel * n)
    return travel - abs(state.output_angle - start)


def virtual_backlash_experiment(config: ActuatorConfig, n_locations: int = 6) -> BacklashResult:
    """Preload-and-reverse at n_locations output angles, both directions [arcmin]."""
    if n_locations < 1:
        raise ValueError(f"n_locations must be >= 1, got {n_locations}")
    locations = 2.0 * np.pi * np.arange(n_locations) / n_locations
    samples = [
        rad_to_arcmin(_lost_motion(config, float(loc), direction))
        for loc in locations
        for direction in (1.0, -1.0)
    ]
    values = np.asarray(samples)
    mean = float(np.mean(values))
    half_range = float((np.max(values) - np.min(values)) / 2.0)
    logger.info("Backlash: mean=%.4f arcmin half-range=%.4f arcmin", mean, half_range)
    return BacklashResult(
        mean_arcmin=mean, half_range_arcmin=half_range, samples_arcmin=tuple(samples)
    )


def ripple_peak_to_peak(
    config: ActuatorConfig,
    load_torque: float | None = None,
    gains: PDGains | None = None,
    ripple_hz: float = RIPPLE_RUN_HZ,
    duration: float = RIPPLE_RUN_S,
) -> float:
    """Peak-to-peak output torque on a constant-speed run [Nm]; rated load by default."""
    from cqdd.pendulum.scenario import run_ripple_probe

    load = config.rated_torque if load_torque is None else load_torque
    run = run_ripple_probe(
        config, gains or PDGains(), load_torque=load, ripple_hz=ripple_hz, duration=duration
    )
    p2p = float(np.ptp(run.tau))
    logger.info("Ripple: %.4f Nm peak-to-peak at %.2f Nm load", p2p, load)
    return p2p
