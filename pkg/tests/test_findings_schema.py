"""
Tests for findings and run-manifest schema validation.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import pytest

SCHEMA_DIR = Path(__file__).parent.parent / "schemas"


def _load(name: str) -> dict:
    with open(SCHEMA_DIR / name, "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def schema() -> dict:
    """Load the findings schema."""
    return _load("findings.schema.json")


@pytest.fixture
def manifest_schema() -> dict:
    return _load("run-manifest.schema.json")


@pytest.fixture
def minimal() -> dict:
    return {
        "version": "1.0.0",
        "target": "actuator",
        "timestamp": "2026-01-21T10:00:00Z",
        "checks": [],
        "summary": {"total": 0, "pass": 0, "fail": 0, "warn": 0, "skipped": 0},
        "verdict": "PASS",
    }


class TestFindingsSchema:
    """Tests for findings schema validation."""

    def test_schema_is_valid_json_schema(self, schema: dict) -> None:
        jsonschema.Draft7Validator.check_schema(schema)

    def test_schema_has_required_metadata(self, schema: dict) -> None:
        assert "$schema" in schema
        assert "$id" in schema
        assert "title" in schema
        assert "version" in schema

    def test_minimal_valid_findings(self, schema: dict, minimal: dict) -> None:
        jsonschema.validate(minimal, schema)

    def test_findings_with_all_optional_fields(self, schema: dict, minimal: dict) -> None:
        full = {
            **minimal,
            "target": "model",
            "runId": "20260121-100000-abcd1234",
            "metadata": {
                "toolName": "model.latency",
                "toolVersion": "0.1.0",
                "hostname": "bench-host",
                "subject": "pva-gru",
            },
            "measurements": {"meanUs": 120.5, "p99Us": 310.0},
            "checks": [
                {
                    "id": "latency.mean",
                    "title": "Mean single-window latency",
                    "severity": "medium",
                    "status": "pass",
                    "evidence": {
                        "metric": "meanUs",
                        "actual": 120.5,
                        "threshold": 200,
                        "comparison": "<=",
                    },
                    "hint": "Run on an idle machine",
                }
            ],
            "summary": {"total": 1, "pass": 1, "fail": 0, "warn": 0, "skipped": 0},
            "failureReasons": [],
            "artifactHash": "sha256:" + "0" * 64,
            "_signed": {"signer": "cqdd", "signedAt": "2026-01-21T10:00:01Z"},
        }
        jsonschema.validate(full, schema)

    def test_invalid_target_rejected(self, schema: dict, minimal: dict) -> None:
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({**minimal, "target": "host"}, schema)

    def test_invalid_verdict_rejected(self, schema: dict, minimal: dict) -> None:
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({**minimal, "verdict": "MAYBE"}, schema)

    def test_invalid_severity_rejected(self, schema: dict, minimal: dict) -> None:
        check = {"id": "backlash.mean", "title": "T", "severity": "critical", "status": "pass"}
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({**minimal, "checks": [check]}, schema)

    def test_invalid_status_rejected(self, schema: dict, minimal: dict) -> None:
        check = {"id": "backlash.mean", "title": "T", "severity": "high", "status": "error"}
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({**minimal, "checks": [check]}, schema)

    def test_invalid_comparison_rejected(self, schema: dict, minimal: dict) -> None:
        check = {
            "id": "backlash.mean",
            "title": "T",
            "severity": "high",
            "status": "pass",
            "evidence": {"actual": 7.0, "threshold": 7.0, "comparison": "=="},
        }
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({**minimal, "checks": [check]}, schema)

    def test_missing_required_fields_rejected(self, schema: dict, minimal: dict) -> None:
        for field in ("version", "checks", "summary", "verdict"):
            invalid = {k: v for k, v in minimal.items() if k != field}
            with pytest.raises(jsonschema.ValidationError):
                jsonschema.validate(invalid, schema)

    def test_check_id_pattern(self, schema: dict, minimal: dict) -> None:
        valid = [
            {"id": "ripple.peak_to_peak", "title": "T", "severity": "low", "status": "pass"},
            {"id": "backdrive-static", "title": "T", "severity": "low", "status": "pass"},
        ]
        jsonschema.validate({**minimal, "checks": valid}, schema)
        invalid = [{"id": "bad id", "title": "T", "severity": "low", "status": "pass"}]
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({**minimal, "checks": invalid}, schema)


class TestRunManifestSchema:
    """Tests for run-manifest schema validation."""

    @pytest.fixture
    def manifest(self) -> dict:
        return {
            "version": "1.0.0",
            "command": "gen-data",
            "toolVersion": "0.1.0",
            "timestamp": "2026-01-21T10:00:00Z",
            "runId": "20260121-100000-abcd1234",
            "seed": 7,
            "config": {"n_scenarios": 100, "duration": 10.0, "max_lr": None},
            "artifacts": [{"path": "manifest.yaml", "sha256": "sha256:" + "a" * 64}],
            "artifactHash": "sha256:" + "b" * 64,
        }

    def test_schema_is_valid_json_schema(self, manifest_schema: dict) -> None:
        jsonschema.Draft7Validator.check_schema(manifest_schema)

    def test_valid_manifest(self, manifest_schema: dict, manifest: dict) -> None:
        jsonschema.validate(manifest, manifest_schema)

    def test_null_seed_allowed(self, manifest_schema: dict, manifest: dict) -> None:
        jsonschema.validate({**manifest, "seed": None}, manifest_schema)

    def test_unknown_field_rejected(self, manifest_schema: dict, manifest: dict) -> None:
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({**manifest, "extra": 1}, manifest_schema)

    def test_bad_digest_rejected(self, manifest_schema: dict, manifest: dict) -> None:
        manifest["artifacts"][0]["sha256"] = "md5:abc"
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(manifest, manifest_schema)
