"""Noisy, filtered joint-acceleration signal as a real encoder pipeline would log it."""

from __future__ import annotations

import math

import numpy as np

from cqdd.dynamics.actuator import ActuatorConfig


class AccelerationEstimator:
    """
    Differentiated velocity plus Gaussian noise through a first-order low-pass.

    Runs at the actuator's internal rate; the caller samples `value` at the
    logging rate.
    """

    def __init__(self, config: ActuatorConfig, rng: np.random.Generator) -> None:
        dt = config.internal_dt
        tau = 1.0 / (2.0 * math.pi * config.accel_filter_hz)
        self._alpha = dt / (dt + tau)
        self._noise_std = config.accel_noise_std
        self._rng = rng
        self.value = 0.0

    def update(self, raw_accel: float) -> float:
        noisy = raw_accel
        if self._noise_std > 0.0:
            noisy += float(self._rng.normal(0.0, self._noise_std))
        self.value += self._alpha * (noisy - self.value)
        return self.value
