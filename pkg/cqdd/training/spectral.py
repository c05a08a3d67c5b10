"""
Ripple spectral analysis.

Welch power spectra (Hann window, 50% overlap, "spectrum" scaling) of a
predicted and a true torque series, searched for their dominant peak in the
ripple band. Amplitudes come from the power summed over each peak's lobe divided
by the window's equivalent noise bandwidth, so they do not depend on where the
tone falls between bins. Peak frequencies are refined by a parabola through the
log power of the three bins around the maximum. The phase shift is read from
the cross spectrum at the true peak.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from cqdd.errors import SeriesTooShortError

logger = logging.getLogger(__name__)

MIN_SERIES_LENGTH = 512
SEGMENT_LENGTH = 1024
RIPPLE_BAND_HZ = (10.0, 40.0)
LOBE_HALF_WIDTH = 3
DETECTION_RATIO = 10.0


@dataclass(frozen=True)
class SpectralPeak:
    index: int
    frequency: float
    amplitude: float
    power: float
    floor: float

    @property
    def detected(self) -> bool:
        return self.power > DETECTION_RATIO * self.floor


@dataclass(frozen=True)
class RippleResult:
    """Comparison of the dominant ripple of a prediction against the truth."""

    detected: bool
    truth_frequency: float
    truth_amplitude: float
    freq_est: float
    pred_amplitude: float
    amp_error: float
    phase_shift: float

    def as_dict(self) -> dict[str, float | bool]:
        return {
            "detected": self.detected,
            "truth_frequency_hz": self.truth_frequency,
            "truth_amplitude_nm": self.truth_amplitude,
            "freq_est_hz": self.freq_est,
            "pred_amplitude_nm": self.pred_amplitude,
            "amp_error_nm": self.amp_error,
            "phase_shift_deg": self.phase_shift,
        }


def _window(nperseg: int) -> np.ndarray:
    return np.asarray(signal.get_window("hann", nperseg))


def equivalent_noise_bandwidth(window: np.ndarray) -> float:
    """ENBW in bins."""
    return float(len(window) * np.sum(window**2) / np.sum(window) ** 2)


def _refine(freqs: np.ndarray, power: np.ndarray, k: int) -> float:
    if k == 0 or k == len(power) - 1:
        return float(freqs[k])
    tiny = np.finfo(np.float64).tiny
    a, b, c = np.log(np.maximum(power[k - 1 : k + 2], tiny))
    denom = a - 2.0 * b + c
    if denom >= 0.0:
        return float(freqs[k])
    delta = 0.5 * (a - c) / denom
    return float(freqs[k] + delta * (freqs[1] - freqs[0]))


def find_peak(
    freqs: np.ndarray,
    power: np.ndarray,
    enbw: float,
    band: tuple[float, float] = RIPPLE_BAND_HZ,
) -> SpectralPeak:
    """Dominant peak of a one-sided power spectrum inside `band`."""
    in_band = np.flatnonzero((freqs >= band[0]) & (freqs <= band[1]))
    if len(in_band) == 0:
        raise ValueError(f"no frequency bins inside {band} Hz")
    k = int(in_band[np.argmax(power[in_band])])
    lo, hi = max(0, k - LOBE_HALF_WIDTH), min(len(power), k + LOBE_HALF_WIDTH + 1)
    amplitude = math.sqrt(2.0 * float(np.sum(power[lo:hi])) / enbw)
    return SpectralPeak(
        index=k,
        frequency=_refine(freqs, power, k),
        amplitude=amplitude,
        power=float(power[k]),
        floor=float(np.median(power[in_band])),
    )


def ripple_analysis(
    pred: np.ndarray,
    truth: np.ndarray,
    sample_rate: float = 200.0,
    band: tuple[float, float] = RIPPLE_BAND_HZ,
) -> RippleResult:
    """Amplitude error, predicted frequency and phase shift of the dominant ripple."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"series must be aligned 1-D arrays, got {pred.shape} and {truth.shape}")
    if len(truth) < MIN_SERIES_LENGTH:
        raise SeriesTooShortError(
            f"ripple analysis needs at least {MIN_SERIES_LENGTH} samples, got {len(truth)}"
        )

    nperseg = min(SEGMENT_LENGTH, len(truth))
    window = _window(nperseg)
    options = {
        "fs": sample_rate,
        "window": window,
        "nperseg": nperseg,
        "noverlap": nperseg // 2,
        "scaling": "spectrum",
    }
    freqs, p_truth = signal.welch(truth, **options)
    _, p_pred = signal.welch(pred, **options)
    _, p_cross = signal.csd(truth, pred, **options)

    enbw = equivalent_noise_bandwidth(window)
    truth_peak = find_peak(freqs, p_truth, enbw, band)
    pred_peak = find_peak(freqs, p_pred, enbw, band)
    detected = truth_peak.detected and pred_peak.detected
    if not detected:
        logger.warning(
            "No ripple detected (truth peak/floor %.3g, prediction peak/floor %.3g)",
            truth_peak.power / max(truth_peak.floor, np.finfo(float).tiny),
            pred_peak.power / max(pred_peak.floor, np.finfo(float).tiny),
        )

    phase = abs(math.degrees(float(np.angle(p_cross[truth_peak.index]))))
    return RippleResult(
        detected=detected,
        truth_frequency=truth_peak.frequency,
        truth_amplitude=truth_peak.amplitude,
        freq_est=pred_peak.frequency,
        pred_amplitude=pred_peak.amplitude,
        amp_error=abs(pred_peak.amplitude - truth_peak.amplitude),
        phase_shift=phase,
    )
