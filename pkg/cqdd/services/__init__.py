"""Shared services: configuration, seeding, artifact integrity and run manifests."""

from cqdd.services.artifact_signer import ArtifactSigner, sign_artifact, verify_artifact
from cqdd.services.config_loader import load_flat_config, load_reference, resolve_settings
from cqdd.services.run_manifest import write_findings, write_run_manifest
from cqdd.services.seeding import fork_seed, make_rng

__all__ = [
    "ArtifactSigner",
    "sign_artifact",
    "verify_artifact",
    "load_flat_config",
    "load_reference",
    "resolve_settings",
    "write_findings",
    "write_run_manifest",
    "fork_seed",
    "make_rng",
]
