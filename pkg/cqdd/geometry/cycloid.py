"""
Cycloidal gear geometry.

Transmission ratio and counterbalance rules, pin-capacity sizing and the disk
profile. The disk profile is the pin-offset epitrochoid:

    x(t) =  Z_r cos t - Z_e cos(Z_np t)
    y(t) = -Z_r sin t + Z_e sin(Z_np t)

offset inward along the curve normal by half the outer pin diameter.

The published ratio formula prints the numerator as -Z_np while its final
equality reads -Z_nt. Only -Z_nt / (Z_np - Z_nt) reproduces the 10:1 ratio of
the Z_nt = 10 actuator, so that form is implemented.

Lengths are millimeters and torques newton-meters throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from cqdd.errors import GeometryError

logger = logging.getLogger(__name__)

# Inferred from 295.65 Nm total / 59.13 Nm per pin; not stated directly.
DEFAULT_OUTPUT_PINS = 5
MIN_PROFILE_SAMPLES = 64
CLOSURE_TOLERANCE_MM = 1e-9


class GearParams(BaseModel):
    """
    Single-stage, one-lobe-difference cycloid geometry.

    Direct construction reports every problem as a pydantic ValidationError.
    `create` raises GeometryError instead when a cycloid rule is broken.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    pitch_radius: float = Field(default=30.0, gt=0, allow_inf_nan=False, description="Z_r [mm]")
    eccentricity: float = Field(default=1.2, ge=0, allow_inf_nan=False, description="Z_e [mm]")
    outer_pin_diameter: float = Field(
        default=5.0, gt=0, allow_inf_nan=False, description="Z_p [mm]"
    )
    output_pin_diameter: float = Field(
        default=6.0, gt=0, allow_inf_nan=False, description="Z_o [mm]"
    )
    num_teeth: int = Field(default=10, ge=1, description="Z_nt")
    num_outer_pins: int = Field(default=11, ge=1, description="Z_np")
    output_pin_circle_radius: float = Field(default=19.5, gt=0, allow_inf_nan=False)
    num_output_pins: int = Field(default=DEFAULT_OUTPUT_PINS, ge=1)

    @model_validator(mode="after")
    def _check_cycloid(self) -> GearParams:
        if self.num_outer_pins != self.num_teeth + 1:
            raise GeometryError(
                f"num_outer_pins must equal num_teeth + 1 "
                f"(got Z_np={self.num_outer_pins}, Z_nt={self.num_teeth})"
            )
        cusp_limit = self.pitch_radius / self.num_outer_pins
        if self.eccentricity >= cusp_limit:
            raise GeometryError(
                f"eccentricity {self.eccentricity} mm must be below Z_r / Z_np = "
                f"{cusp_limit:.6g} mm to keep the profile free of cusps"
            )
        return self

    @classmethod
    def create(cls, **values: Any) -> GearParams:
        """Validated gear; a wrong pin count or a cusped profile raises GeometryError."""
        try:
            return cls(**values)
        except ValidationError as exc:
            for error in exc.errors():
                cause = error.get("ctx", {}).get("error")
                if isinstance(cause, GeometryError):
                    raise cause from exc
            raise


@dataclass(frozen=True)
class ProfilePolyline:
    """Ordered profile points in millimeters."""

    points: np.ndarray  # shape (n, 2)
    closed: bool = True

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise GeometryError("profile points must be an (n >= 2, 2) array")
        if self.closed and np.max(np.abs(pts[0] - pts[-1])) > CLOSURE_TOLERANCE_MM:
            raise GeometryError("closed profile must end on its first point")
        steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(steps == 0.0):
            raise GeometryError("profile contains consecutive duplicate points")
        object.__setattr__(self, "points", pts)

    @property
    def radii(self) -> np.ndarray:
        return np.hypot(self.points[:, 0], self.points[:, 1])

    def lobe_count(self) -> int:
        """Number of local maxima of the radius around the closed loop."""
        r = self.radii[:-1] if self.closed else self.radii
        prev = np.roll(r, 1)
        nxt = np.roll(r, -1)
        return int(np.count_nonzero((r > prev) & (r >= nxt)))

    def area(self) -> float:
        """Enclosed area by the shoelace formula (absolute value)."""
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * abs(float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1])))


def transmission_ratio_from_counts(num_teeth: int, num_outer_pins: int) -> Fraction:
    """Signed ratio -Z_nt / (Z_np - Z_nt); negative means the output counter-rotates."""
    if num_outer_pins == num_teeth:
        raise GeometryError("Z_np == Z_nt gives a degenerate gear (division by zero)")
    return Fraction(-num_teeth, num_outer_pins - num_teeth)


def transmission_ratio(g: GearParams) -> Fraction:
    """Signed transmission ratio Z_R of a valid gear; equals -Z_nt."""
    return transmission_ratio_from_counts(g.num_teeth, g.num_outer_pins)


def counter_disk_count(ratio_magnitude: int) -> int:
    """Counterbalance disks: 2 for an even ratio, 3 for an odd one (ratio >= 4)."""
    if ratio_magnitude < 4:
        raise GeometryError(f"ratio magnitude must be >= 4, got {ratio_magnitude}")
    return 2 if ratio_magnitude % 2 == 0 else 3


def output_pin_capacity(per_pin_torque: float, num_output_pins: int) -> float:
    """Total output torque carried by num_output_pins pins [Nm]."""
    if not per_pin_torque > 0 or not math.isfinite(per_pin_torque):
        raise GeometryError(f"per-pin torque must be positive, got {per_pin_torque}")
    if num_output_pins < 1:
        raise GeometryError(f"need at least one output pin, got {num_output_pins}")
    return per_pin_torque * num_output_pins


def per_pin_force(per_pin_torque: float, output_pin_circle_radius: float) -> float:
    """Tangential pin load [N] for a torque [Nm] carried at a radius [mm]."""
    if output_pin_circle_radius <= 0:
        raise GeometryError("output pin circle radius must be positive")
    return per_pin_torque / (output_pin_circle_radius * 1e-3)


def _parameter(samples: int) -> np.ndarray:
    # Doubling samples reproduces these values bit-for-bit on even indices.
    return 2.0 * np.pi * np.arange(samples, dtype=np.float64) / samples


def generate_profile(g: GearParams, samples: int = 720) -> ProfilePolyline:
    """Closed cycloid disk profile with Z_nt lobes."""
    if samples < MIN_PROFILE_SAMPLES:
        raise GeometryError(f"samples must be >= {MIN_PROFILE_SAMPLES}, got {samples}")
    if g.eccentricity == 0.0:
        logger.warning("Zero eccentricity: profile degenerates to a circle")

    rr, e, n = g.pitch_radius, g.eccentricity, g.num_outer_pins
    t = _parameter(samples)

    x = rr * np.cos(t) - e * np.cos(n * t)
    y = -rr * np.sin(t) + e * np.sin(n * t)
    dx = -rr * np.sin(t) + e * n * np.sin(n * t)
    dy = -rr * np.cos(t) + e * n * np.cos(n * t)

    speed = np.hypot(dx, dy)
    if np.any(speed == 0.0):
        raise GeometryError("profile tangent vanishes; parameters produce a cusp")

    # Curve runs clockwise, so (-dy, dx) points outward.
    offset = g.outer_pin_diameter / 2.0
    px = x - offset * (-dy / speed)
    py = y - offset * (dx / speed)

    points = np.column_stack([px, py])
    points = np.vstack([points, points[:1]])
    return ProfilePolyline(points=points, closed=True)


def ring_pin_centers(g: GearParams) -> np.ndarray:
    """Outer pin centers on the pitch circle, shape (Z_np, 2)."""
    angles = _parameter(g.num_outer_pins)
    return np.column_stack([g.pitch_radius * np.cos(angles), g.pitch_radius * np.sin(angles)])


def profile_to_csv(profile: ProfilePolyline) -> str:
    """CSV text with an x_mm,y_mm header."""
    lines = ["x_mm,y_mm"]
    lines.extend(f"{x:.17g},{y:.17g}" for x, y in profile.points)
    return "\n".join(lines) + "\n"


def profile_to_svg(
    profile: ProfilePolyline,
    pins: np.ndarray | None = None,
    pin_diameter: float | None = None,
) -> str:
    """Minimal SVG: the profile as one path, optionally the ring pins as circles."""
    pts = profile.points
    extent = float(np.max(np.abs(pts)))
    if pins is not None and pin_diameter is not None:
        extent = max(extent, float(np.max(np.abs(pins))) + pin_diameter / 2.0)
    extent *= 1.05

    # SVG y grows downward.
    moves = [f"M {pts[0, 0]:.6f} {-pts[0, 1]:.6f}"]
    moves.extend(f"L {x:.6f} {-y:.6f}" for x, y in pts[1:])
    if profile.closed:
        moves.append("Z")

    body = [f'  <path d="{" ".join(moves)}" fill="none" stroke="black" stroke-width="0.1"/>']
    if pins is not None and pin_diameter is not None:
        for cx, cy in pins:
            body.append(
                f'  <circle cx="{cx:.6f}" cy="{-cy:.6f}" r="{pin_diameter / 2.0:.6f}" '
                f'fill="none" stroke="gray" stroke-width="0.1"/>'
            )

    size = 2.0 * extent
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{-extent:.6f} {-extent:.6f} {size:.6f} {size:.6f}" '
        f'width="{size:.3f}mm" height="{size:.3f}mm">\n' + "\n".join(body) + "\n</svg>\n"
    )
