"""
Lumped-parameter C-QDD actuator model.

Two bodies share the output axis: the rotor (reflected to the output through the
gear ratio) and the output flange with whatever load is attached. Inside the
backlash dead band the gear transmits nothing and both bodies move on their own;
at either end of the band they move together and the gear carries the command,
the ripple and the friction. Closing the band is a perfectly inelastic impact.

Angles of the rotor are kept output-equivalent (motor angle / gear ratio) in all
internal arithmetic; ActuatorState.motor_angle stores the true motor angle.

Friction is signed and opposes motion. While engaged the reported output torque
is the geared command plus ripple plus friction; the rotor inertia term only
decides whether the teeth stay in contact. Separated, it is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from cqdd.errors import StepError

ARCMIN_PER_RAD = 180.0 * 60.0 / math.pi
MAX_STEP_S = 0.01


def arcmin_to_rad(value: float) -> float:
    return value / ARCMIN_PER_RAD


def rad_to_arcmin(value: float) -> float:
    return value * ARCMIN_PER_RAD


def reflected_inertia(rotor_inertia: float, gear_ratio: float) -> float:
    """Rotor inertia seen at the output [kg m^2]."""
    return rotor_inertia * gear_ratio**2


class ActuatorConfig(BaseModel):
    """Lumped C-QDD parameters. Torques are output-side [Nm]."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gear_ratio: float = Field(default=10.0, gt=0, allow_inf_nan=False)
    rotor_inertia_reflected: float = Field(default=5.01e-4, gt=0, allow_inf_nan=False)
    output_inertia: float = Field(default=2e-3, gt=0, allow_inf_nan=False)
    ripple_amplitude: float = Field(default=1.5, ge=0, allow_inf_nan=False)
    ripple_harmonic: int = Field(default=100, ge=1)
    ripple_phase: float = Field(default=0.0, allow_inf_nan=False)
    rated_torque: float = Field(default=37.5, gt=0, allow_inf_nan=False)
    backlash_width: float = Field(default=7.0, ge=0, allow_inf_nan=False, description="arcmin")
    static_friction_out: float = Field(default=1.99, ge=0, allow_inf_nan=False)
    kinetic_friction_out: float = Field(default=1.36, ge=0, allow_inf_nan=False)
    viscous_coeff: float = Field(default=0.01, ge=0, allow_inf_nan=False)
    stiction_velocity: float = Field(default=1e-3, gt=0, allow_inf_nan=False)
    torque_limit: float = Field(default=89.9, gt=0, allow_inf_nan=False)
    accel_noise_std: float = Field(default=0.5, ge=0, allow_inf_nan=False)
    accel_filter_hz: float = Field(default=50.0, gt=0, allow_inf_nan=False)
    internal_rate_hz: float = Field(default=2000.0, gt=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_friction(self) -> ActuatorConfig:
        if self.kinetic_friction_out > self.static_friction_out:
            raise ValueError(
                f"kinetic_friction_out ({self.kinetic_friction_out}) must not exceed "
                f"static_friction_out ({self.static_friction_out})"
            )
        return self

    @property
    def backlash_half_rad(self) -> float:
        return arcmin_to_rad(self.backlash_width) / 2.0

    @property
    def internal_dt(self) -> float:
        return 1.0 / self.internal_rate_hz

    @classmethod
    def from_gear(cls, gear: Any, **overrides: Any) -> ActuatorConfig:
        """Derive gear_ratio and ripple_harmonic from cycloid GearParams."""
        from cqdd.geometry.cycloid import transmission_ratio

        ratio = abs(transmission_ratio(gear))
        values: dict[str, Any] = {
            "gear_ratio": float(ratio),
            "ripple_harmonic": int(gear.num_teeth * ratio),
        }
        values.update(overrides)
        return cls(**values)


@dataclass(frozen=True, slots=True)
class PDGains:
    """Output-side PD gains of the position loop."""

    kp: float = 150.0
    kd: float = 3.0

    def __post_init__(self) -> None:
        if not self.kp > 0:
            raise ValueError(f"kp must be positive, got {self.kp}")
        if not self.kd >= 0:
            raise ValueError(f"kd must be non-negative, got {self.kd}")


@dataclass(frozen=True, slots=True)
class ActuatorState:
    """Instantaneous joint state. motor_velocity is output-equivalent."""

    motor_angle: float = 0.0
    output_angle: float = 0.0
    output_velocity: float = 0.0
    output_accel: float = 0.0
    transmitted_torque: float = 0.0
    backlash_offset: float = 0.0
    motor_velocity: float = 0.0

    @classmethod
    def at_rest(cls, config: ActuatorConfig, q: float = 0.0, offset: float = 0.0) -> ActuatorState:
        """Resting state at output angle q with the given dead-band offset."""
        half = config.backlash_half_rad
        offset = max(-half, min(half, offset))
        return cls(
            motor_angle=(q + offset) * config.gear_ratio,
            output_angle=q,
            backlash_offset=offset,
        )

    def is_finite(self) -> bool:
        return all(
            math.isfinite(v)
            for v in (
                self.motor_angle,
                self.output_angle,
                self.output_velocity,
                self.output_accel,
                self.transmitted_torque,
                self.backlash_offset,
                self.motor_velocity,
            )
        )


def ripple_torque(config: ActuatorConfig, motor_angle: float, load_torque: float) -> float:
    """Load-scaled single-harmonic ripple [Nm]."""
    scale = min(1.0, abs(load_torque) / config.rated_torque)
    phase = config.ripple_harmonic * (motor_angle / config.gear_ratio) + config.ripple_phase
    return config.ripple_amplitude * scale * math.sin(phase)


def friction_torque(config: ActuatorConfig, velocity: float, applied_torque: float) -> float:
    """Karnopp friction at the output [Nm], signed against motion or applied torque."""
    if abs(velocity) < config.stiction_velocity:
        limit = config.static_friction_out
        if abs(applied_torque) <= limit:
            return -applied_torque
        return -math.copysign(limit, applied_torque)
    return -(
        math.copysign(config.kinetic_friction_out, velocity) + config.viscous_coeff * velocity
    )


def backlash_update(
    state: ActuatorState, config: ActuatorConfig, motor_angle_new: float
) -> ActuatorState:
    """Kinematic dead-band map: the output moves only once the band is traversed."""
    half = config.backlash_half_rad
    phi = motor_angle_new / config.gear_ratio
    q = state.output_angle
    gap = phi - q
    if gap > half:
        q = phi - half
    elif gap < -half:
        q = phi + half
    offset = max(-half, min(half, phi - q))
    return ActuatorState(
        motor_angle=motor_angle_new,
        output_angle=q,
        output_velocity=state.output_velocity,
        output_accel=state.output_accel,
        transmitted_torque=state.transmitted_torque,
        backlash_offset=offset,
        motor_velocity=state.motor_velocity,
    )


def pd_command(config: ActuatorConfig, gains: PDGains, q_ref: float, state: ActuatorState) -> float:
    """Output-side torque command clamped to the torque limit."""
    tau = gains.kp * (q_ref - state.output_angle) - gains.kd * state.output_velocity
    return max(-config.torque_limit, min(config.torque_limit, tau))


def _engaged(offset: float, relative_velocity: float, half: float) -> bool:
    if half == 0.0:
        return True
    if abs(offset) < half:
        return False
    return math.copysign(1.0, offset) * relative_velocity >= 0.0


def advance(
    state: ActuatorState,
    config: ActuatorConfig,
    command: float,
    external_torque: float,
    h: float,
) -> ActuatorState:
    """One semi-implicit Euler substep under a given output-side command."""
    half = config.backlash_half_rad
    j_m = config.rotor_inertia_reflected
    j_o = config.output_inertia
    n = config.gear_ratio
    v_stop = config.stiction_velocity
    offset = state.backlash_offset
    v0 = state.output_velocity

    if _engaged(offset, state.motor_velocity - v0, half):
        drive = command + ripple_torque(config, state.motor_angle, command)
        applied = drive + external_torque
        friction = friction_torque(config, v0, applied)
        if abs(v0) < v_stop and abs(applied) <= config.static_friction_out:
            accel = 0.0
            v = 0.0
        else:
            accel = (applied + friction) / (j_m + j_o)
            v = v0 + accel * h
        contact = drive + friction - j_m * accel
        if half == 0.0 or math.copysign(1.0, offset) * contact >= 0.0:
            q = state.output_angle + v * h
            return ActuatorState(
                motor_angle=state.motor_angle + v * h * n,
                output_angle=q,
                output_velocity=v,
                output_accel=(v - v0) / h,
                transmitted_torque=drive + friction,
                backlash_offset=offset,
                motor_velocity=v,
            )

    # Separated: rotor under command and friction, output under the load alone.
    wm0 = state.motor_velocity
    friction = friction_torque(config, wm0, command)
    if abs(wm0) < v_stop and abs(command) <= config.static_friction_out:
        wm = 0.0
    else:
        wm = wm0 + (command + friction) / j_m * h
    v = v0 + external_torque / j_o * h
    motor_angle = state.motor_angle + wm * h * n
    q = state.output_angle + v * h
    offset = offset + (wm - v) * h
    if abs(offset) > half:
        # Inelastic impact at the end of the band.
        offset = math.copysign(half, offset)
        v = (j_m * wm + j_o * v) / (j_m + j_o)
        wm = v
        motor_angle = (q + offset) * n
    return ActuatorState(
        motor_angle=motor_angle,
        output_angle=q,
        output_velocity=v,
        output_accel=(v - v0) / h,
        transmitted_torque=0.0,
        backlash_offset=offset,
        motor_velocity=wm,
    )


def step(
    state: ActuatorState,
    config: ActuatorConfig,
    gains: PDGains,
    q_ref: float,
    external_torque: float,
    dt: float,
) -> ActuatorState:
    """
    Advance the actuator by dt under PD position control.

    dt is split into substeps no longer than the internal period; the command is
    recomputed every substep. Raises StepError on a non-finite state.
    """
    if not 0.0 < dt <= MAX_STEP_S:
        raise ValueError(f"dt must lie in (0, {MAX_STEP_S}], got {dt}")
    substeps = max(1, math.ceil(dt * config.internal_rate_hz - 1e-9))
    h = dt / substeps
    for _ in range(substeps):
        command = pd_command(config, gains, q_ref, state)
        state = advance(state, config, command, external_torque, h)
        if not state.is_finite():
            raise StepError(
                f"non-finite actuator state at q_ref={q_ref}, external={external_torque}: {state}"
            )
    return state
