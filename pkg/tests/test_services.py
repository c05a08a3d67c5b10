"""
Tests for seeding, configuration, artifact hashing and run manifests.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import pytest
import yaml

from cqdd.dynamics.actuator import ActuatorConfig
from cqdd.errors import ConfigError
from cqdd.services.artifact_signer import ArtifactSigner, file_digest
from cqdd.services.config_loader import (
    load_defaults,
    load_flat_config,
    load_reference,
    resolve_settings,
)
from cqdd.services.run_manifest import (
    FINDINGS_SCHEMA,
    MANIFEST_SCHEMA,
    load_schema,
    write_findings,
    write_run_manifest,
)
from cqdd.services.seeding import fork_seed, make_rng
from cqdd.training.trainer import TrainConfig


class TestSeeding:
    """Forked per-subsystem seeds."""

    def test_stable(self) -> None:
        assert fork_seed(42, "split") == fork_seed(42, "split")

    def test_labels_and_seeds_separate_streams(self) -> None:
        assert fork_seed(42, "split") != fork_seed(42, "init")
        assert fork_seed(42, "split") != fork_seed(43, "split")

    def test_rng_reproducible(self) -> None:
        a = make_rng(1, "x").normal(size=5)
        b = make_rng(1, "x").normal(size=5)
        assert list(a) == list(b)

    def test_negative_seed(self) -> None:
        with pytest.raises(ValueError):
            fork_seed(-1, "x")


class TestConfig:
    """Flat YAML settings and precedence."""

    def test_shipped_actuator_defaults_match_model(self) -> None:
        assert ActuatorConfig(**load_defaults("actuator")) == ActuatorConfig()

    def test_shipped_training_defaults_are_valid(self) -> None:
        settings = load_defaults("training")
        config = TrainConfig(**{k: v for k, v in settings.items() if k != "preset"})
        assert config == TrainConfig()
        assert settings["preset"] == "pva-gru"

    def test_precedence(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"a": 2, "b": 2}))
        resolved = resolve_settings({"a": 1, "b": 1, "c": 1}, path, {"b": 3, "c": None})
        assert resolved == {"a": 2, "b": 3, "c": 1}

    def test_unknown_file_key(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"z": 1}))
        with pytest.raises(ConfigError):
            resolve_settings({"a": 1}, path)

    def test_unknown_override(self) -> None:
        with pytest.raises(ConfigError):
            resolve_settings({"a": 1}, None, {"z": 1})

    def test_nested_values_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"a": {"b": 1}}))
        with pytest.raises(ConfigError):
            load_flat_config(path)

    def test_non_mapping_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_flat_config(path)

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            load_flat_config(tmp_path / "absent.yaml")

    def test_reference_policy(self) -> None:
        reference = load_reference()
        assert reference["backdrive"]["staticNm"] == 1.99
        assert reference["backlash"]["arcmin"] == 7.0
        assert set(reference["models"]) == {"pva-gru", "pv-gru", "mlp-tuned", "mlp-baseline"}
        assert reference["models"]["pva-gru"]["rmse_nm"] == 0.97


class TestArtifactSigner:
    """Content hashes over artifact data."""

    def test_volatile_fields_excluded(self) -> None:
        signer = ArtifactSigner()
        a = {"value": 1.5, "timestamp": "2026-01-01T00:00:00Z", "runId": "a"}
        b = {"value": 1.5, "timestamp": "2026-02-02T00:00:00Z", "runId": "b"}
        assert signer.compute_hash(a) == signer.compute_hash(b)

    def test_sign_and_verify(self) -> None:
        signer = ArtifactSigner(signer_identity="tests")
        artifact = signer.sign_artifact({"value": 1})
        assert artifact["_signed"]["signer"] == "tests"
        assert artifact["artifactHash"].startswith("sha256:")
        assert signer.verify_artifact(artifact)
        artifact["value"] = 2
        assert not signer.verify_artifact(artifact)

    def test_unsigned_fails_verification(self) -> None:
        assert not ArtifactSigner().verify_artifact({"value": 1})

    def test_file_digest(self, tmp_path: Path) -> None:
        path = tmp_path / "empty.bin"
        path.write_bytes(b"")
        assert file_digest(path) == (
            "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        )


class TestRunManifest:
    """Replayable run records."""

    def test_write_run_manifest(self, tmp_path: Path) -> None:
        artifact = tmp_path / "out" / "profile.csv"
        artifact.parent.mkdir()
        artifact.write_text("x_mm,y_mm\n1,2\n")
        path = write_run_manifest(
            "profile", {"num_teeth": 10, "format": "csv"}, None, [artifact], tmp_path / "out"
        )
        assert path.name == "run-manifest-profile.json"
        manifest = json.loads(path.read_text())
        jsonschema.validate(manifest, load_schema(MANIFEST_SCHEMA))
        assert manifest["artifacts"] == [{"path": "profile.csv", "sha256": file_digest(artifact)}]
        assert manifest["config"] == {"num_teeth": 10, "format": "csv"}
        assert manifest["seed"] is None

    def test_rejects_unknown_command(self, tmp_path: Path) -> None:
        with pytest.raises(jsonschema.ValidationError):
            write_run_manifest("deploy", {}, 0, [], tmp_path)

    def test_rejects_nested_config(self, tmp_path: Path) -> None:
        with pytest.raises(jsonschema.ValidationError):
            write_run_manifest("train", {"nested": {"a": 1}}, 0, [], tmp_path)

    def test_write_findings_signs(self, tmp_path: Path) -> None:
        findings = {
            "version": "1.0.0",
            "target": "actuator",
            "timestamp": "2026-01-01T00:00:00+00:00",
            "checks": [],
            "summary": {"total": 0, "pass": 0, "fail": 0, "warn": 0, "skipped": 0},
            "verdict": "PASS",
        }
        path = write_findings(findings, tmp_path / "sub" / "f.json")
        stored = json.loads(path.read_text())
        assert stored["artifactHash"].startswith("sha256:")
        jsonschema.validate(stored, load_schema(FINDINGS_SCHEMA))
