"""
Pendulum rig driven by the simulated actuator.

A single bar with a point mass is mounted on the actuator output and measured
from upright, so gravity acts as -m g r sin(q). A compliant wall at wall_angle
pushes back once the bar passes it:

    I_p q'' = tau_q - m g r sin(q) + tau_wall
    tau_wall = min(0, -K_w (q - wall_angle) - D_w q')   for q > wall_angle

The reference follows q_ref(t) = q0 + A sin(2 pi f t) under the actuator's PD
loop. Records are taken at 200 Hz, the actuator integrates at its internal rate.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cqdd.dynamics.actuator import ActuatorConfig, ActuatorState, PDGains, ripple_torque, step
from cqdd.dynamics.estimator import AccelerationEstimator
from cqdd.errors import ScenarioError
from cqdd.services.seeding import make_rng

logger = logging.getLogger(__name__)

SAMPLE_RATE_HZ = 200
TIME_TOLERANCE_S = 1e-9
RECORD_FIELDS = ("t", "q_ref", "q", "qd", "qdd", "tau")
# Dynamometer coupled to the output during ripple runs [kg m^2], [Nm s/rad].
DYNO_INERTIA = 5.0
DYNO_DAMPING = 50.0


class SamplingRanges(BaseModel):
    """Ranges the scenario sampler draws from."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ref_frequency: tuple[float, float] = (0.3, 1.5)
    ref_amplitude: tuple[float, float] = (0.5, 1.5)
    initial_position: tuple[float, float] = (0.0, 1.0)
    pendulum_mass: tuple[float, ...] = (1.14, 2.28)
    mass_location: tuple[float, float] = (0.25, 0.6)


DEFAULT_RANGES = SamplingRanges()


class RigConfig(BaseModel):
    """Rig constants that are not part of a scenario."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    wall_stiffness: float = Field(default=500.0, ge=0, allow_inf_nan=False)
    wall_damping: float = Field(default=5.0, ge=0, allow_inf_nan=False)
    wall_angle: float = Field(default=1.4, allow_inf_nan=False)
    bar_inertia: float = Field(default=0.02, ge=0, allow_inf_nan=False)
    gravity: float = Field(default=9.81, ge=0, allow_inf_nan=False)
    duration: float = Field(default=10.0, gt=0, allow_inf_nan=False)


class PendulumScenario(BaseModel):
    """One sinusoidal reference run of the pendulum rig."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ref_frequency: float = Field(ge=0, allow_inf_nan=False, description="f_q [Hz]")
    ref_amplitude: float = Field(ge=0, allow_inf_nan=False, description="A_q [rad]")
    initial_position: float = Field(allow_inf_nan=False, description="q0 [rad]")
    pendulum_mass: float = Field(gt=0, allow_inf_nan=False, description="m_p [kg]")
    mass_location: float = Field(gt=0, allow_inf_nan=False, description="r_p [m]")
    duration: float = Field(default=10.0, gt=0, allow_inf_nan=False, description="[s]")
    wall_angle: float = Field(default=1.4, allow_inf_nan=False, description="[rad]")
    seed: int = Field(default=0, ge=0)

    def reference(self, t: float) -> float:
        return self.initial_position + self.ref_amplitude * math.sin(
            2.0 * math.pi * self.ref_frequency * t
        )

    def out_of_range(self, ranges: SamplingRanges = DEFAULT_RANGES) -> list[str]:
        """Names of fields outside the sampler's ranges."""
        outside = []
        for name in ("ref_frequency", "ref_amplitude", "initial_position", "mass_location"):
            lo, hi = getattr(ranges, name)
            if not lo <= getattr(self, name) <= hi:
                outside.append(name)
        if self.pendulum_mass not in ranges.pendulum_mass:
            outside.append("pendulum_mass")
        return outside


@dataclass
class Trajectory:
    """Fixed-rate joint-state and torque record of one run."""

    name: str
    t: np.ndarray
    q_ref: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    tau: np.ndarray
    sample_rate: int = SAMPLE_RATE_HZ
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        columns = [np.asarray(getattr(self, f), dtype=np.float64) for f in RECORD_FIELDS]
        n = len(columns[0])
        for name, col in zip(RECORD_FIELDS, columns):
            if col.ndim != 1 or len(col) != n:
                raise ScenarioError(f"{self.name}: column '{name}' has shape {col.shape}")
            if not np.all(np.isfinite(col)):
                raise ScenarioError(f"{self.name}: column '{name}' holds non-finite values")
            setattr(self, name, col)
        if n > 1:
            spacing = np.diff(self.t)
            if np.max(np.abs(spacing - 1.0 / self.sample_rate)) > TIME_TOLERANCE_S:
                raise ScenarioError(
                    f"{self.name}: timestamps are not spaced 1/{self.sample_rate} s"
                )

    def __len__(self) -> int:
        return len(self.t)

    @property
    def position_error(self) -> np.ndarray:
        return self.q_ref - self.q

    def channels(self) -> np.ndarray:
        """(N, 4) array of q_e, qd, qdd, tau."""
        return np.column_stack([self.position_error, self.qd, self.qdd, self.tau])

    def records(self) -> np.ndarray:
        """(N, 6) array in RECORD_FIELDS order."""
        return np.column_stack([getattr(self, f) for f in RECORD_FIELDS])


def pendulum_inertia(scenario: PendulumScenario, rig: RigConfig) -> float:
    return scenario.pendulum_mass * scenario.mass_location**2 + rig.bar_inertia


def wall_torque(q: float, qd: float, wall_angle: float, rig: RigConfig) -> float:
    """Unilateral spring-damper wall; never pulls the bar."""
    if q <= wall_angle:
        return 0.0
    return min(0.0, -rig.wall_stiffness * (q - wall_angle) - rig.wall_damping * qd)


def gravity_torque(q: float, scenario: PendulumScenario, rig: RigConfig) -> float:
    return -scenario.pendulum_mass * rig.gravity * scenario.mass_location * math.sin(q)


def contact_mask(trajectory: Trajectory, wall_angle: float) -> np.ndarray:
    """Samples where the bar is past the wall."""
    return trajectory.q > wall_angle


def sample_scenarios(
    n: int,
    seed: int,
    ranges: SamplingRanges = DEFAULT_RANGES,
    rig: RigConfig | None = None,
) -> list[PendulumScenario]:
    """n scenarios drawn uniformly from `ranges`; each gets its own simulation seed."""
    if n < 1:
        raise ScenarioError(f"n must be >= 1, got {n}")
    rig = rig or RigConfig()
    rng = make_rng(seed, "scenarios")
    freq = rng.uniform(*ranges.ref_frequency, size=n)
    amp = rng.uniform(*ranges.ref_amplitude, size=n)
    q0 = rng.uniform(*ranges.initial_position, size=n)
    mass = rng.choice(np.asarray(ranges.pendulum_mass), size=n)
    r = rng.uniform(*ranges.mass_location, size=n)
    sim_seeds = rng.integers(0, 2**31 - 1, size=n)
    return [
        PendulumScenario(
            ref_frequency=float(freq[i]),
            ref_amplitude=float(amp[i]),
            initial_position=float(q0[i]),
            pendulum_mass=float(mass[i]),
            mass_location=float(r[i]),
            duration=rig.duration,
            wall_angle=rig.wall_angle,
            seed=int(sim_seeds[i]),
        )
        for i in range(n)
    ]


def describe_ranges(
    scenarios: Sequence[PendulumScenario], ranges: SamplingRanges = DEFAULT_RANGES
) -> dict[str, str]:
    """Configured and realised sampling ranges as flat manifest entries."""
    info: dict[str, str] = {}
    for name in SamplingRanges.model_fields:
        configured = getattr(ranges, name)
        values = [getattr(s, name) for s in scenarios]
        info[f"range.{name}.configured"] = ",".join(f"{v:.17g}" for v in configured)
        if name == "pendulum_mass":
            realised = sorted(set(values))
        else:
            realised = [min(values), max(values)]
        info[f"range.{name}.realised"] = ",".join(f"{v:.17g}" for v in realised)
    return info


def _plant_config(actuator: ActuatorConfig, extra_inertia: float) -> ActuatorConfig:
    return actuator.model_copy(update={"output_inertia": actuator.output_inertia + extra_inertia})


def _record_count(duration: float) -> int:
    count = int(round(duration * SAMPLE_RATE_HZ))
    if count < 1:
        raise ScenarioError(f"duration {duration} s gives no samples at {SAMPLE_RATE_HZ} Hz")
    return count


def _simulate(
    name: str,
    config: ActuatorConfig,
    gains: PDGains,
    state: ActuatorState,
    reference: Callable[[float], float],
    external: Callable[[ActuatorState], float],
    count: int,
    seed: int,
    params: dict[str, Any],
) -> Trajectory:
    substeps = max(1, int(round(config.internal_rate_hz / SAMPLE_RATE_HZ)))
    h = 1.0 / (SAMPLE_RATE_HZ * substeps)
    estimator = AccelerationEstimator(config, make_rng(seed, "accel-noise"))
    out = np.empty((count, len(RECORD_FIELDS)))
    k = 0
    for i in range(count):
        t = i / SAMPLE_RATE_HZ
        out[i] = (
            t,
            reference(t),
            state.output_angle,
            state.output_velocity,
            estimator.value,
            state.transmitted_torque,
        )
        if i == count - 1:
            break
        for _ in range(substeps):
            time_now = k * h
            ext = external(state)
            state = step(state, config, gains, reference(time_now), ext, h)
            estimator.update(state.output_accel)
            k += 1
    return Trajectory(
        name=name,
        t=out[:, 0],
        q_ref=out[:, 1],
        q=out[:, 2],
        qd=out[:, 3],
        qdd=out[:, 4],
        tau=out[:, 5],
        params=params,
    )


def run_scenario(
    scenario: PendulumScenario,
    actuator: ActuatorConfig,
    gains: PDGains,
    rig: RigConfig | None = None,
    name: str = "scenario",
) -> Trajectory:
    """Simulate one scenario and record duration x 200 samples."""
    rig = rig or RigConfig()
    outside = scenario.out_of_range()
    if outside:
        logger.warning("%s: outside the sampled ranges: %s", name, ", ".join(outside))

    config = _plant_config(actuator, pendulum_inertia(scenario, rig))
    start = ActuatorState.at_rest(config, q=scenario.initial_position)

    def external(state: ActuatorState) -> float:
        q, qd = state.output_angle, state.output_velocity
        return gravity_torque(q, scenario, rig) + wall_torque(q, qd, scenario.wall_angle, rig)

    logger.debug("Simulating %s: %s", name, scenario)
    return _simulate(
        name,
        config,
        gains,
        start,
        scenario.reference,
        external,
        _record_count(scenario.duration),
        scenario.seed,
        {"kind": "scenario", **scenario.model_dump()},
    )


def run_ripple_probe(
    actuator: ActuatorConfig,
    gains: PDGains,
    load_torque: float = 13.6,
    ripple_hz: float = 17.2,
    duration: float = 20.0,
    seed: int = 0,
    name: str = "probe",
) -> Trajectory:
    """
    Constant-speed run on a dynamometer, free of gravity and wall.

    The output is coupled to a large inertia and a damper holding it at the
    speed that passes the ripple harmonic at `ripple_hz`, against a constant
    resisting load. The run starts in steady state, so the recorded torque is
    the load plus the load-scaled ripple.
    """
    if ripple_hz <= 0:
        raise ScenarioError(f"ripple_hz must be positive, got {ripple_hz}")
    speed = 2.0 * math.pi * ripple_hz / actuator.ripple_harmonic
    direction = math.copysign(1.0, speed)
    config = _plant_config(actuator, DYNO_INERTIA)
    holding = (
        direction * (load_torque + actuator.kinetic_friction_out)
        + actuator.viscous_coeff * speed
    )
    lead = (holding + gains.kd * speed) / gains.kp
    rest = ActuatorState.at_rest(config, offset=direction * config.backlash_half_rad)
    start = replace(
        rest,
        output_velocity=speed,
        motor_velocity=speed,
        transmitted_torque=direction * load_torque
        + ripple_torque(config, rest.motor_angle, holding),
    )

    def reference(t: float) -> float:
        return lead + speed * t

    def external(state: ActuatorState) -> float:
        return -direction * load_torque - DYNO_DAMPING * (state.output_velocity - speed)

    params = {
        "kind": "probe",
        "load_torque": load_torque,
        "ripple_hz": ripple_hz,
        "speed": speed,
        "duration": duration,
        "seed": seed,
    }
    return _simulate(
        name, config, gains, start, reference, external, _record_count(duration), seed, params
    )


_Job = tuple[int, PendulumScenario, ActuatorConfig, PDGains, RigConfig]


def _run_indexed(args: _Job) -> Trajectory:
    index, scenario, actuator, gains, rig = args
    return run_scenario(scenario, actuator, gains, rig, name=trajectory_name(index))


def trajectory_name(index: int) -> str:
    return f"traj-{index:04d}"


def simulate_scenarios(
    scenarios: Sequence[PendulumScenario],
    actuator: ActuatorConfig,
    gains: PDGains,
    rig: RigConfig | None = None,
    workers: int = 1,
) -> list[Trajectory]:
    """Run every scenario, optionally in a process pool; results keep scenario order."""
    rig = rig or RigConfig()
    jobs = [(i, s, actuator, gains, rig) for i, s in enumerate(scenarios)]
    if workers <= 1:
        return [_run_indexed(job) for job in jobs]
    logger.info("Simulating %d scenarios on %d workers", len(jobs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_indexed, jobs))
