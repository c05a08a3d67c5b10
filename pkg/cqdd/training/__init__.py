"""Training loop and evaluation harness for torque estimators."""

from cqdd.training.evaluation import (
    EvalReport,
    error_metrics,
    evaluate,
    format_table,
    predict_trajectory,
    write_report_csv,
)
from cqdd.training.latency import LatencyResult, latency_bench
from cqdd.training.spectral import RippleResult, ripple_analysis
from cqdd.training.trainer import EpochRecord, TrainConfig, TrainResult, train, write_history

__all__ = [
    "EpochRecord",
    "EvalReport",
    "LatencyResult",
    "RippleResult",
    "TrainConfig",
    "TrainResult",
    "error_metrics",
    "evaluate",
    "format_table",
    "latency_bench",
    "predict_trajectory",
    "ripple_analysis",
    "train",
    "write_history",
    "write_report_csv",
]
