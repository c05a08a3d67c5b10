"""
Content hashing for run artifacts.

The hash covers the artifact's data only: volatile fields (timestamp, runId and
the signing block) are excluded so that two runs with identical inputs carry
identical hashes.
"""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

VOLATILE_FIELDS = ("artifactHash", "_signed", "timestamp", "runId")


class ArtifactSigner:
    """Signs and verifies artifact integrity."""

    def __init__(self, signer_identity: str = "cqdd"):
        self.signer_identity = signer_identity

    def compute_hash(
        self, data: dict[str, Any], exclude_fields: tuple[str, ...] = VOLATILE_FIELDS
    ) -> str:
        """SHA-256 of the sorted, compact JSON form, prefixed with 'sha256:'."""
        data_to_hash = {k: v for k, v in data.items() if k not in exclude_fields}
        json_str = json.dumps(data_to_hash, sort_keys=True, separators=(",", ":"))
        return f"sha256:{hashlib.sha256(json_str.encode('utf-8')).hexdigest()}"

    def sign_artifact(self, artifact: dict[str, Any]) -> dict[str, Any]:
        """Add signing metadata and artifactHash in place; returns the artifact."""
        artifact["_signed"] = {
            "signer": self.signer_identity,
            "signedAt": datetime.now(timezone.utc).isoformat(),
        }
        artifact["artifactHash"] = self.compute_hash(artifact)
        return artifact

    def verify_artifact(self, artifact: dict[str, Any]) -> bool:
        if "artifactHash" not in artifact:
            return False
        return bool(artifact["artifactHash"] == self.compute_hash(artifact))


def file_digest(path: str | Path) -> str:
    """sha256 of a file's bytes, prefixed with 'sha256:'."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


_default_signer = ArtifactSigner()


def sign_artifact(artifact: dict[str, Any]) -> dict[str, Any]:
    """Sign artifact with default signer."""
    return _default_signer.sign_artifact(artifact)


def verify_artifact(artifact: dict[str, Any]) -> bool:
    """Verify artifact with default signer."""
    return _default_signer.verify_artifact(artifact)
