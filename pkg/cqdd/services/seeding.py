"""Per-subsystem random streams forked from one run seed."""

from __future__ import annotations

import zlib

import numpy as np


def fork_seed(seed: int, label: str) -> int:
    """Child seed for `label`; stable across processes and platforms."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    sequence = np.random.SeedSequence([seed, zlib.crc32(label.encode("utf-8"))])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(fork_seed(seed, label))
