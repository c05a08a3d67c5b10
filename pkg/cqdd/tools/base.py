"""
Base class for experiment tools.

A tool runs one measurement, compares it with the reference values in
policies/reference.yaml and returns a findings dict conforming to
schemas/findings.schema.json.
"""

from __future__ import annotations

import socket
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from typing import Any

from cqdd import __version__
from cqdd.services.run_manifest import generate_run_id

FINDINGS_VERSION = "1.0.0"
SUMMARY_KEYS = ("pass", "fail", "warn", "skipped")


class BaseTool(ABC):
    """Abstract base class for experiment tools."""

    name: str = ""
    description: str = ""
    target: str = "actuator"

    def create_findings_base(self, subject: str, run_id: str | None = None) -> dict[str, Any]:
        """Empty findings for one measurement of `subject`."""
        return {
            "version": FINDINGS_VERSION,
            "target": self.target,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "runId": run_id or generate_run_id(),
            "metadata": {
                "toolName": self.name,
                "toolVersion": __version__,
                "hostname": socket.gethostname(),
                "subject": subject,
            },
            "measurements": {},
            "checks": [],
            "summary": {"total": 0, **{key: 0 for key in SUMMARY_KEYS}},
            "verdict": "FAIL",
            "failureReasons": [],
        }

    def add_check(
        self,
        findings: dict[str, Any],
        check_id: str,
        title: str,
        severity: str,
        status: str,
        evidence: dict[str, Any] | None = None,
        hint: str | None = None,
    ) -> None:
        """Append one check and count it in the summary."""
        check: dict[str, Any] = {
            "id": check_id,
            "title": title,
            "severity": severity,
            "status": status,
        }
        optional = {"evidence": evidence, "hint": hint}
        check.update({key: value for key, value in optional.items() if value})
        findings["checks"].append(check)

        summary = findings["summary"]
        summary["total"] += 1
        if status in SUMMARY_KEYS:
            summary[status] += 1

    def add_threshold_check(
        self,
        findings: dict[str, Any],
        check_id: str,
        title: str,
        metric: str,
        actual: float,
        threshold: float | None,
        comparison: str = "<=",
        tolerance: float = 0.0,
        severity: str = "high",
        hint: str | None = None,
    ) -> None:
        """
        Compare a measured value with a reference.

        comparison is "<=" or ">=" for ceilings and floors, or "within" for
        |actual - threshold| <= tolerance. A missing threshold skips the check.
        """
        if threshold is None:
            self.add_check(
                findings,
                check_id,
                title,
                "info",
                "skipped",
                evidence={"metric": metric, "actual": actual},
                hint="No reference value configured",
            )
            return

        if comparison == "<=":
            passed = actual <= threshold
        elif comparison == ">=":
            passed = actual >= threshold
        elif comparison == "within":
            passed = abs(actual - threshold) <= tolerance
        else:
            raise ValueError(f"unknown comparison '{comparison}'")

        evidence: dict[str, Any] = {
            "metric": metric,
            "actual": actual,
            "threshold": threshold,
            "comparison": comparison,
        }
        if comparison == "within":
            evidence["tolerance"] = tolerance
        self.add_check(
            findings,
            check_id,
            title,
            severity,
            "pass" if passed else "fail",
            evidence=evidence,
            hint=None if passed else hint,
        )

    def finalize(self, findings: dict[str, Any]) -> dict[str, Any]:
        """Set the PASS/FAIL verdict and collect failure reasons."""
        failed = [c for c in findings["checks"] if c["status"] == "fail"]
        findings["verdict"] = "FAIL" if failed else "PASS"
        for check in failed:
            evidence = check.get("evidence", {})
            findings["failureReasons"].append(
                f"{check['title']}: {evidence.get('actual')} vs threshold "
                f"{evidence.get('threshold')}"
            )
        return findings

    @abstractmethod
    def run(self, *args: Any, **kwargs: Any) -> dict[str, Any]:
        """
        Run the measurement.

        Returns:
            Findings conforming to schemas/findings.schema.json
        """
        raise NotImplementedError
