"""
Evaluation of trained torque estimators.

Errors are reported in physical units: predictions are denormalized with the
statistics stored in the checkpoint before they are compared with the recorded
torque. Published variance figures carry no unit; here the error variance is
reported in Nm^2 with its square root alongside.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from cqdd.errors import DatasetError, SeriesTooShortError, SpecMismatchError
from cqdd.models.checkpoint import Checkpoint
from cqdd.pendulum.dataset import PROBE_SPLIT, Dataset, InputMode, window_trajectory
from cqdd.pendulum.scenario import Trajectory
from cqdd.training.latency import MIN_SAMPLES, LatencyResult, latency_bench
from cqdd.training.spectral import RippleResult, ripple_analysis
from cqdd.training.trainer import predict_in_chunks

logger = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "model",
    "rmse_nm",
    "variance_nm2",
    "cycle_us_mean",
    "cycle_us_p99",
    "layers",
    "history",
)


@dataclass(frozen=True)
class ErrorMetrics:
    rmse: float
    variance: float
    n_samples: int

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def error_metrics(pred: np.ndarray, truth: np.ndarray) -> ErrorMetrics:
    """RMSE and variance of pred - truth."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction has {pred.size} samples, truth has {truth.size}")
    if pred.size == 0:
        raise DatasetError("cannot evaluate an empty split")
    error = pred - truth
    return ErrorMetrics(
        rmse=float(np.sqrt(np.mean(error * error))),
        variance=float(np.var(error)),
        n_samples=int(error.size),
    )


@dataclass
class EvalReport:
    """Accuracy, ripple tracking and latency of one model on one split."""

    model: str
    split: str
    n_samples: int
    rmse: float
    rmse_normalized: float
    error_variance: float
    layers: int
    history: int
    ripple: RippleResult | None = None
    latency: LatencyResult | None = None
    reference: dict[str, Any] = field(default_factory=dict)

    @property
    def error_std(self) -> float:
        return math.sqrt(self.error_variance)

    @property
    def ripple_amp_error(self) -> float | None:
        return self.ripple.amp_error if self.ripple else None

    @property
    def ripple_freq_est(self) -> float | None:
        return self.ripple.freq_est if self.ripple else None

    @property
    def ripple_phase_shift(self) -> float | None:
        return self.ripple.phase_shift if self.ripple else None

    @property
    def latency_mean(self) -> float | None:
        return self.latency.mean_us if self.latency else None

    @property
    def latency_p99(self) -> float | None:
        return self.latency.p99_us if self.latency else None

    def row(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "rmse_nm": self.rmse,
            "variance_nm2": self.error_variance,
            "cycle_us_mean": self.latency_mean,
            "cycle_us_p99": self.latency_p99,
            "layers": self.layers,
            "history": self.history,
        }

    def as_dict(self) -> dict[str, Any]:
        return {
            **self.row(),
            "split": self.split,
            "n_samples": self.n_samples,
            "rmse_normalized": self.rmse_normalized,
            "std_nm": self.error_std,
            "ripple": self.ripple.as_dict() if self.ripple else None,
            "latency": self.latency.as_dict() if self.latency else None,
            "reference": self.reference,
        }


def _check_mode(checkpoint: Checkpoint, mode: InputMode | str | None) -> InputMode:
    spec = checkpoint.spec
    if mode is None:
        return spec.mode
    mode = InputMode(mode)
    if mode.channels != spec.input_channels:
        raise SpecMismatchError(
            f"checkpoint {spec.name} takes {spec.input_channels} input channels "
            f"({spec.mode.value}), windows were requested as {mode.value}"
        )
    return mode


def predict_trajectory(
    checkpoint: Checkpoint, trajectory: Trajectory, mode: InputMode | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Denormalized predictions and recorded torque, aligned from sample L-1 on."""
    spec = checkpoint.spec
    windows, _ = window_trajectory(
        trajectory, checkpoint.normalization, spec.history, mode or spec.mode
    )
    pred = predict_in_chunks(checkpoint.model, windows)
    norm = checkpoint.normalization
    return pred * norm.tau_std + norm.tau_mean, trajectory.tau[spec.history - 1 :]


def ripple_on_probe(checkpoint: Checkpoint, probe: Trajectory) -> RippleResult | None:
    pred, truth = predict_trajectory(checkpoint, probe)
    try:
        return ripple_analysis(pred, truth, sample_rate=probe.sample_rate)
    except SeriesTooShortError as e:
        logger.warning("Skipping ripple analysis on %s: %s", probe.name, e)
        return None


def evaluate(
    checkpoint: Checkpoint,
    dataset: Dataset,
    split: str = "test",
    mode: InputMode | str | None = None,
    latency_samples: int | None = None,
    reference: dict[str, Any] | None = None,
) -> EvalReport:
    """
    Score a checkpoint on a dataset split.

    Ripple tracking is measured on the first trajectory of the `probe` split when
    the dataset has one. Latency is benchmarked over `latency_samples` windows
    of the split when requested.
    """
    mode = _check_mode(checkpoint, mode)
    spec = checkpoint.spec
    trajectories = dataset.split(split)
    if not trajectories:
        raise DatasetError(f"split '{split}' is empty")

    preds, truths = zip(*(predict_trajectory(checkpoint, t, mode) for t in trajectories))
    metrics = error_metrics(np.concatenate(preds), np.concatenate(truths))
    tau_std = checkpoint.normalization.tau_std

    ripple = None
    if dataset.splits.get(PROBE_SPLIT):
        ripple = ripple_on_probe(checkpoint, dataset.split(PROBE_SPLIT)[0])

    latency = None
    if latency_samples is not None:
        windows = np.concatenate(
            [
                window_trajectory(t, checkpoint.normalization, spec.history, mode)[0]
                for t in trajectories
            ]
        )
        bench_input = windows if len(windows) >= max(latency_samples, MIN_SAMPLES) else None
        latency = latency_bench(checkpoint, latency_samples, windows=bench_input)

    report = EvalReport(
        model=spec.name,
        split=split,
        n_samples=metrics.n_samples,
        rmse=metrics.rmse,
        rmse_normalized=metrics.rmse / tau_std,
        error_variance=metrics.variance,
        layers=spec.layers,
        history=spec.history,
        ripple=ripple,
        latency=latency,
        reference=dict((reference or {}).get("models", {}).get(spec.name, {})),
    )
    logger.info(
        "%s on %s: RMSE %.4f Nm, variance %.4f Nm^2 over %d samples",
        report.model,
        split,
        report.rmse,
        report.error_variance,
        report.n_samples,
    )
    return report


def _fmt(value: float | None, digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def format_table(reports: list[EvalReport]) -> str:
    """Plain-text table of measured values with published ones in brackets."""
    header = (
        f"{'model':<14}{'RMSE Nm':>18}{'var Nm^2':>18}{'std Nm':>9}"
        f"{'cycle us':>18}{'p99 us':>10}{'layers':>8}{'hist':>6}"
    )
    lines = [header, "-" * len(header)]
    for r in reports:
        ref = r.reference
        lines.append(
            f"{r.model:<14}"
            f"{_fmt(r.rmse):>9} [{_fmt(ref.get('rmse_nm'), 2):>5}]"
            f"{_fmt(r.error_variance):>9} [{_fmt(ref.get('variance'), 2):>5}]"
            f"{_fmt(r.error_std):>9}"
            f"{_fmt(r.latency_mean, 2):>9} [{_fmt(ref.get('cycle_us'), 2):>5}]"
            f"{_fmt(r.latency_p99, 2):>10}"
            f"{r.layers:>8}{r.history:>6}"
        )
        if r.ripple is not None:
            state = "" if r.ripple.detected else "  (no ripple detected)"
            lines.append(
                f"{'':<14}ripple: amp error {r.ripple.amp_error:.3f} Nm, "
                f"freq {r.ripple.freq_est:.2f} Hz (truth {r.ripple.truth_frequency:.2f} Hz), "
                f"phase shift {r.ripple.phase_shift:.1f} deg{state}"
            )
    return "\n".join(lines)


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else value


def write_report_csv(reports: list[EvalReport], path: str | Path) -> Path:
    """One row per report; latency columns stay empty when latency was not measured."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for report in reports:
            writer.writerow({k: _cell(v) for k, v in report.row().items()})
    return path
