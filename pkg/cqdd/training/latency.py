"""Single-window inference latency."""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass

import numpy as np

from cqdd.models.checkpoint import Checkpoint
from cqdd.services.seeding import make_rng

logger = logging.getLogger(__name__)

MIN_SAMPLES = 1000
DEFAULT_SAMPLES = 16000
DEFAULT_WARMUP = 200


@dataclass(frozen=True)
class LatencyResult:
    """Per-call wall-clock statistics in microseconds."""

    model: str
    n_samples: int
    mean_us: float
    median_us: float
    p99_us: float
    min_us: float

    def as_dict(self) -> dict[str, float | int | str]:
        return {
            "model": self.model,
            "nSamples": self.n_samples,
            "meanUs": self.mean_us,
            "medianUs": self.median_us,
            "p99Us": self.p99_us,
            "minUs": self.min_us,
        }


def bench_windows(checkpoint: Checkpoint, n_samples: int, seed: int = 0) -> np.ndarray:
    """Deterministic standard-normal input windows, already in normalized units."""
    rng = make_rng(seed, "bench")
    return rng.standard_normal((n_samples, *checkpoint.spec.window_shape))


def latency_bench(
    checkpoint: Checkpoint,
    n_samples: int = DEFAULT_SAMPLES,
    windows: np.ndarray | None = None,
    warmup: int = DEFAULT_WARMUP,
    seed: int = 0,
) -> LatencyResult:
    """Time `n_samples` sequential single-window forward passes on this thread.

    When `windows` is given its first `n_samples` rows are used; otherwise a
    seeded random input set is generated.
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"latency bench needs at least {MIN_SAMPLES} samples, got {n_samples}")
    if windows is None:
        windows = bench_windows(checkpoint, n_samples, seed)
    elif len(windows) < n_samples:
        raise ValueError(f"only {len(windows)} windows supplied for {n_samples} samples")
    windows = np.ascontiguousarray(windows[:n_samples], dtype=np.float64)

    model = checkpoint.model
    for i in range(min(warmup, n_samples)):
        model.predict(windows[i])

    latencies = []
    for w in windows:
        start = time.perf_counter_ns()
        model.predict(w)
        latencies.append((time.perf_counter_ns() - start) / 1000.0)

    ordered = sorted(latencies)
    result = LatencyResult(
        model=checkpoint.spec.name,
        n_samples=n_samples,
        mean_us=statistics.mean(latencies),
        median_us=statistics.median(latencies),
        p99_us=ordered[int(len(ordered) * 0.99)],
        min_us=ordered[0],
    )
    logger.info(
        "%s latency over %d calls: mean %.2f us, p99 %.2f us",
        result.model,
        n_samples,
        result.mean_us,
        result.p99_us,
    )
    return result
