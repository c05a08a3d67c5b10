"""
Latency validation.

Benchmarks single-window inference of a checkpoint and compares mean and p99
against the per-preset ceilings in policies/reference.yaml, returning a PASS/FAIL
verdict. The published cycle times are recorded for comparison only: they were
measured on different hardware.
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from cqdd.models.checkpoint import Checkpoint
from cqdd.services.config_loader import load_reference
from cqdd.tools.base import BaseTool
from cqdd.training.latency import DEFAULT_SAMPLES, latency_bench

logger = logging.getLogger(__name__)


class LatencyTool(BaseTool):
    """Single-window inference latency of a trained model."""

    name = "model.latency"
    description = "Time single-window forward passes and check them against latency ceilings."
    target = "model"

    def run(
        self,
        checkpoint: Checkpoint,
        n_samples: int = DEFAULT_SAMPLES,
        windows: np.ndarray | None = None,
        reference: dict[str, Any] | None = None,
        seed: int = 0,
    ) -> dict[str, Any]:
        reference = reference if reference is not None else load_reference()
        model = checkpoint.spec.name
        limits = reference.get("latency", {}).get("thresholds", {}).get(model, {})
        published = reference.get("models", {}).get(model, {}).get("cycle_us")

        findings = self.create_findings_base(subject=model)
        result = latency_bench(checkpoint, n_samples, windows=windows, seed=seed)
        findings["measurements"] = {**result.as_dict(), "publishedCycleUs": published}

        self.add_threshold_check(
            findings,
            "latency.mean",
            "Mean single-window latency",
            metric="meanUs",
            actual=result.mean_us,
            threshold=limits.get("meanUsMax"),
            severity="medium",
            hint="Run on an idle machine; latency is measured single-threaded",
        )
        self.add_threshold_check(
            findings,
            "latency.p99",
            "P99 single-window latency",
            metric="p99Us",
            actual=result.p99_us,
            threshold=limits.get("p99UsMax"),
            severity="low",
            hint="Tail latency is sensitive to background load",
        )
        return self.finalize(findings)
