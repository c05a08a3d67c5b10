"""Cycloidal gear geometry."""

from cqdd.geometry.cycloid import (
    GearParams,
    ProfilePolyline,
    counter_disk_count,
    generate_profile,
    output_pin_capacity,
    transmission_ratio,
)

__all__ = [
    "GearParams",
    "ProfilePolyline",
    "counter_disk_count",
    "generate_profile",
    "output_pin_capacity",
    "transmission_ratio",
]
