"""
Binary checkpoints.

Little-endian layout:

    magic        8 bytes   b"CQDDNET\\0"
    version      uint16
    spec         uint32 length + UTF-8 JSON
    normalization 8 x float64 (mean, std per channel q_e, qd, qdd, tau)
    metadata     uint32 length + UTF-8 JSON
    n_params     uint32
    per parameter: rows uint32, cols uint32, rows*cols float64 row-major

Parameters are stored in declaration order, so a save/load round trip is the
identity on the parameter vector.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from cqdd.errors import (
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    ShapeError,
    SpecMismatchError,
)
from cqdd.models.networks import TorqueModel, build_model, expected_shapes
from cqdd.models.spec import ModelSpec
from cqdd.pendulum.dataset import Normalization

logger = logging.getLogger(__name__)

MAGIC = b"CQDDNET\x00"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """A trained model with the statistics its inputs were normalized with."""

    model: TorqueModel
    normalization: Normalization
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def spec(self) -> ModelSpec:
        return self.model.spec


def _json_block(data: dict[str, Any]) -> bytes:
    encoded = json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return struct.pack("<I", len(encoded)) + encoded


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    parts = [
        MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        _json_block(checkpoint.spec.model_dump(mode="json")),
        struct.pack("<8d", *checkpoint.normalization.as_vector()),
        _json_block(checkpoint.metadata),
        struct.pack("<I", len(checkpoint.model.params)),
    ]
    for p in checkpoint.model.params:
        rows, cols = p.shape
        parts.append(struct.pack("<II", rows, cols))
        parts.append(np.ascontiguousarray(p.data, dtype="<f8").tobytes())
    return b"".join(parts)


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(checkpoint))
    logger.info("Saved %s checkpoint to %s", checkpoint.spec.name, path)
    return path


class _Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def take(self, size: int, what: str) -> bytes:
        end = self._pos + size
        if end > len(self._data):
            raise CheckpointTruncatedError(
                f"checkpoint ends inside {what} (need {size} bytes at offset {self._pos}, "
                f"{len(self._data) - self._pos} left)"
            )
        chunk = self._data[self._pos : end]
        self._pos = end
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def json_block(self, what: str) -> dict[str, Any]:
        (length,) = self.unpack("<I", f"{what} length")
        try:
            value = json.loads(self.take(length, what).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointFormatError(f"{what} block is not valid JSON: {e}") from e
        if not isinstance(value, dict):
            raise CheckpointFormatError(f"{what} block must be a JSON object")
        return value

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos


def decode_checkpoint(data: bytes, expected_channels: int | None = None) -> Checkpoint:
    reader = _Reader(data)
    if reader.take(len(MAGIC), "magic") != MAGIC:
        raise CheckpointFormatError("not a cqdd checkpoint (bad magic bytes)")
    (version,) = reader.unpack("<H", "version")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(
            f"checkpoint format version {version} is not supported (expected {FORMAT_VERSION})"
        )

    try:
        spec = ModelSpec.model_validate(reader.json_block("spec"))
    except ValidationError as e:
        raise CheckpointFormatError(f"invalid model spec in checkpoint: {e}") from e
    normalization = Normalization.from_vector(np.array(reader.unpack("<8d", "normalization")))
    metadata = reader.json_block("metadata")

    shapes = expected_shapes(spec)
    (count,) = reader.unpack("<I", "parameter count")
    if count != len(shapes):
        raise CheckpointShapeError(
            f"checkpoint holds {count} parameters but spec {spec.name} needs {len(shapes)}"
        )
    arrays = []
    for i, shape in enumerate(shapes):
        rows, cols = reader.unpack("<II", f"parameter {i} shape")
        if (rows, cols) != shape:
            raise CheckpointShapeError(
                f"parameter {i} stored as {rows}x{cols}, spec {spec.name} needs "
                f"{shape[0]}x{shape[1]}"
            )
        raw = reader.take(8 * rows * cols, f"parameter {i} data")
        arrays.append(np.frombuffer(raw, dtype="<f8").reshape(rows, cols).astype(np.float64))
    if reader.remaining:
        raise CheckpointFormatError(f"{reader.remaining} unexpected bytes after the parameters")

    if expected_channels is not None and spec.input_channels != expected_channels:
        raise SpecMismatchError(
            f"checkpoint {spec.name} takes {spec.input_channels} input channels, "
            f"data provides {expected_channels}"
        )
    try:
        model = build_model(spec, arrays)
    except ShapeError as e:
        raise CheckpointShapeError(str(e)) from e
    return Checkpoint(model=model, normalization=normalization, metadata=metadata)


def load_checkpoint(path: str | Path, expected_channels: int | None = None) -> Checkpoint:
    """Read a checkpoint; optionally insist on a number of input channels."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes(), expected_channels)
