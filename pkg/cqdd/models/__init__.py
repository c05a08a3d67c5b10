"""Torque estimator architectures, presets and checkpoints."""

from cqdd.models.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from cqdd.models.networks import GRUModel, MLPModel, TorqueModel, build_model
from cqdd.models.spec import PRESETS, ModelKind, ModelSpec, resolve_spec

__all__ = [
    "Checkpoint",
    "GRUModel",
    "MLPModel",
    "ModelKind",
    "ModelSpec",
    "PRESETS",
    "TorqueModel",
    "build_model",
    "load_checkpoint",
    "resolve_spec",
    "save_checkpoint",
]
