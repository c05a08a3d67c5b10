"""
Run manifests.

Every CLI run writes one run-manifest-<command>.json next to its artifacts. The
manifest carries the fully resolved settings and the seed so the run can be
replayed, plus a digest of each artifact it produced.
"""

from __future__ import annotations

import json
import logging
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import jsonschema

from cqdd import __version__
from cqdd.services.artifact_signer import file_digest, sign_artifact
from cqdd.services.config_loader import SCHEMA_DIR

logger = logging.getLogger(__name__)

MANIFEST_VERSION = "1.0.0"
MANIFEST_SCHEMA = SCHEMA_DIR / "run-manifest.schema.json"
FINDINGS_SCHEMA = SCHEMA_DIR / "findings.schema.json"


def generate_run_id() -> str:
    timestamp = datetime.now(timezone.utc).strftime("%Y%m%d-%H%M%S")
    return f"{timestamp}-{str(uuid.uuid4())[:8]}"


def _jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return value.as_posix()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def load_schema(path: Path) -> dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        schema: dict[str, Any] = json.load(f)
    return schema


def build_run_manifest(
    command: str,
    settings: dict[str, Any],
    seed: int | None,
    artifacts: list[Path],
    output_dir: Path,
) -> dict[str, Any]:
    """Signed manifest dict; artifact paths are stored relative to output_dir."""
    entries = []
    for path in artifacts:
        try:
            rel = path.resolve().relative_to(output_dir.resolve())
        except ValueError:
            rel = path
        entries.append({"path": rel.as_posix(), "sha256": file_digest(path)})

    manifest: dict[str, Any] = {
        "version": MANIFEST_VERSION,
        "command": command,
        "toolVersion": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "runId": generate_run_id(),
        "seed": seed,
        "config": _jsonable(settings),
        "artifacts": entries,
    }
    return sign_artifact(manifest)


def write_run_manifest(
    command: str,
    settings: dict[str, Any],
    seed: int | None,
    artifacts: list[Path],
    output_dir: Path,
) -> Path:
    """Build, validate and write the manifest. Raises jsonschema.ValidationError."""
    manifest = build_run_manifest(command, settings, seed, artifacts, output_dir)
    jsonschema.validate(manifest, load_schema(MANIFEST_SCHEMA))
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / f"run-manifest-{command}.json"
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    logger.info("Wrote run manifest %s (%d artifacts)", path, len(manifest["artifacts"]))
    return path


def write_findings(findings: dict[str, Any], path: Path) -> Path:
    """Sign, validate against the findings schema and write a findings artifact."""
    sign_artifact(findings)
    jsonschema.validate(findings, load_schema(FINDINGS_SCHEMA))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(findings, f, indent=2)
        f.write("\n")
    return path
