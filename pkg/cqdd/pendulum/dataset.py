"""
Datasets of pendulum trajectories.

Trajectories are split whole into train/validation/test; ripple probes form their
own `probe` split. Per-channel z-score statistics come from the training split
only. On disk a dataset is one CSV per trajectory plus a flat YAML manifest.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from numpy.lib.stride_tricks import sliding_window_view

from cqdd.errors import ConstantChannelError, DatasetError, TrajectoryTooShortError
from cqdd.pendulum.scenario import RECORD_FIELDS, SAMPLE_RATE_HZ, Trajectory
from cqdd.services.seeding import make_rng

logger = logging.getLogger(__name__)

CHANNELS = ("q_e", "qd", "qdd", "tau")
TARGET_CHANNEL = 3
SPLITS = ("train", "validation", "test")
PROBE_SPLIT = "probe"
MANIFEST_NAME = "manifest.yaml"
TRAJECTORY_DIR = "trajectories"
FORMAT_VERSION = 1
DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


class InputMode(str, Enum):
    """Input channels of a model window."""

    PV = "PV"
    PVA = "PVA"

    @property
    def channel_indices(self) -> tuple[int, ...]:
        return (0, 1) if self is InputMode.PV else (0, 1, 2)

    @property
    def channels(self) -> int:
        return len(self.channel_indices)

    @classmethod
    def for_channels(cls, channels: int) -> InputMode:
        if channels == 2:
            return cls.PV
        if channels == 3:
            return cls.PVA
        raise DatasetError(f"no input mode with {channels} channels")


@dataclass(frozen=True)
class Normalization:
    """Per-channel mean and standard deviation in CHANNELS order."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if mean.shape != (len(CHANNELS),) or std.shape != (len(CHANNELS),):
            raise DatasetError(f"normalization needs {len(CHANNELS)} channels")
        for name, s in zip(CHANNELS, std):
            if not s > 0:
                raise ConstantChannelError(f"channel '{name}' has zero spread (std={s})")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def fit(cls, data: np.ndarray) -> Normalization:
        """Statistics of an (N, 4) channel array."""
        return cls(mean=data.mean(axis=0), std=data.std(axis=0))

    def normalize(self, data: np.ndarray) -> np.ndarray:
        return (data - self.mean) / self.std

    def denormalize(self, data: np.ndarray) -> np.ndarray:
        return data * self.std + self.mean

    @property
    def tau_mean(self) -> float:
        return float(self.mean[TARGET_CHANNEL])

    @property
    def tau_std(self) -> float:
        return float(self.std[TARGET_CHANNEL])

    def as_vector(self) -> np.ndarray:
        """mean and std interleaved per channel."""
        return np.column_stack([self.mean, self.std]).reshape(-1)

    @classmethod
    def from_vector(cls, values: np.ndarray) -> Normalization:
        pairs = np.asarray(values, dtype=np.float64).reshape(len(CHANNELS), 2)
        return cls(mean=pairs[:, 0], std=pairs[:, 1])


@dataclass
class Dataset:
    """Trajectories with a trajectory-level split and training-split statistics."""

    trajectories: list[Trajectory]
    normalization: Normalization
    splits: dict[str, list[int]]
    seed: int = 0
    info: dict[str, Any] = field(default_factory=dict)

    def split(self, name: str) -> list[Trajectory]:
        if name not in self.splits:
            raise DatasetError(f"dataset has no '{name}' split")
        return [self.trajectories[i] for i in self.splits[name]]

    def split_of(self, index: int) -> str:
        for name, members in self.splits.items():
            if index in members:
                return name
        raise DatasetError(f"trajectory {index} is in no split")

    def normalize(self, data: np.ndarray) -> np.ndarray:
        return self.normalization.normalize(data)

    def denormalize(self, data: np.ndarray) -> np.ndarray:
        return self.normalization.denormalize(data)


def split_counts(n: int, fractions: tuple[float, float, float]) -> tuple[int, int, int]:
    """Train/validation/test counts; validation and test get at least one each."""
    if n < 3:
        raise DatasetError(f"need at least 3 trajectories, got {n}")
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise DatasetError(f"split fractions must be three non-negative values, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DatasetError(f"split fractions must sum to 1, got {sum(fractions)}")
    n_val = max(1, int(round(fractions[1] * n)))
    n_test = max(1, int(round(fractions[2] * n)))
    n_train = n - n_val - n_test
    if n_train < 1:
        raise DatasetError(f"split {fractions} leaves no training trajectory out of {n}")
    return n_train, n_val, n_test


def build_dataset(
    trajectories: list[Trajectory],
    split_fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 0,
    probes: list[Trajectory] | None = None,
) -> Dataset:
    """Shuffle trajectories into splits and fit normalization on the training split."""
    n_train, n_val, _ = split_counts(len(trajectories), split_fractions)
    order = make_rng(seed, "split").permutation(len(trajectories))
    splits = {
        "train": sorted(int(i) for i in order[:n_train]),
        "validation": sorted(int(i) for i in order[n_train : n_train + n_val]),
        "test": sorted(int(i) for i in order[n_train + n_val :]),
    }
    members = list(trajectories)
    if probes:
        splits[PROBE_SPLIT] = list(range(len(members), len(members) + len(probes)))
        members.extend(probes)

    train = np.concatenate([members[i].channels() for i in splits["train"]])
    normalization = Normalization.fit(train)
    logger.info(
        "Dataset: %d train, %d validation, %d test, %d probe trajectories",
        len(splits["train"]),
        len(splits["validation"]),
        len(splits["test"]),
        len(splits.get(PROBE_SPLIT, [])),
    )
    return Dataset(trajectories=members, normalization=normalization, splits=splits, seed=seed)


def window_trajectory(
    trajectory: Trajectory,
    normalization: Normalization,
    history: int,
    mode: InputMode,
) -> tuple[np.ndarray, np.ndarray]:
    """Windows (N-L+1, C, L) and normalized targets (N-L+1,) of one trajectory."""
    if history < 1:
        raise DatasetError(f"history must be >= 1, got {history}")
    if len(trajectory) < history:
        raise TrajectoryTooShortError(
            f"{trajectory.name}: {len(trajectory)} samples is shorter than history {history}"
        )
    data = normalization.normalize(trajectory.channels())
    inputs = data[:, list(mode.channel_indices)]
    windows = sliding_window_view(inputs, history, axis=0)
    targets = data[history - 1 :, TARGET_CHANNEL]
    return np.ascontiguousarray(windows), targets.copy()


def window(
    dataset: Dataset,
    history: int,
    mode: InputMode | str,
    split: str = "train",
) -> tuple[np.ndarray, np.ndarray]:
    """Windows of every trajectory in a split, never crossing trajectory boundaries."""
    mode = InputMode(mode)
    parts = [
        window_trajectory(t, dataset.normalization, history, mode) for t in dataset.split(split)
    ]
    if not parts:
        raise DatasetError(f"split '{split}' is empty")
    inputs = np.concatenate([p[0] for p in parts])
    targets = np.concatenate([p[1] for p in parts])
    return inputs, targets


class _ManifestDumper(yaml.SafeDumper):
    pass


def _represent_float(dumper: yaml.SafeDumper, value: float) -> yaml.ScalarNode:
    if not np.isfinite(value):
        return dumper.represent_float(value)
    text = f"{value:.17g}"
    if not any(c in text for c in ".en"):
        text += ".0"
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


_ManifestDumper.add_representer(float, _represent_float)


def _scalar(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _manifest(dataset: Dataset) -> dict[str, Any]:
    entries: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "seed": dataset.seed,
        "sample_rate_hz": SAMPLE_RATE_HZ,
        "channels": ",".join(CHANNELS),
        "columns": ",".join(RECORD_FIELDS),
    }
    for key, value in dataset.info.items():
        entries[key] = _scalar(value)
    for c, name in enumerate(CHANNELS):
        entries[f"norm.{name}.mean"] = float(dataset.normalization.mean[c])
        entries[f"norm.{name}.std"] = float(dataset.normalization.std[c])
    for split, members in dataset.splits.items():
        entries[f"split.{split}"] = ",".join(dataset.trajectories[i].name for i in members)
    for index, traj in enumerate(dataset.trajectories):
        prefix = f"traj.{traj.name}"
        entries[f"{prefix}.split"] = dataset.split_of(index)
        entries[f"{prefix}.file"] = f"{TRAJECTORY_DIR}/{traj.name}.csv"
        for key, value in traj.params.items():
            entries[f"{prefix}.{key}"] = _scalar(value)
    return entries


def save_dataset(dataset: Dataset, directory: str | Path) -> list[Path]:
    """Write CSVs and manifest; returns every file written."""
    directory = Path(directory)
    (directory / TRAJECTORY_DIR).mkdir(parents=True, exist_ok=True)
    written = []
    for traj in dataset.trajectories:
        path = directory / TRAJECTORY_DIR / f"{traj.name}.csv"
        np.savetxt(
            path,
            traj.records(),
            fmt="%.17g",
            delimiter=",",
            header=",".join(RECORD_FIELDS),
            comments="",
        )
        written.append(path)
    manifest_path = directory / MANIFEST_NAME
    with open(manifest_path, "w", encoding="utf-8") as f:
        yaml.dump(_manifest(dataset), f, Dumper=_ManifestDumper, sort_keys=False, width=1000)
    written.append(manifest_path)
    logger.info("Saved %d trajectories to %s", len(dataset.trajectories), directory)
    return written


def read_trajectory_csv(
    path: str | Path, name: str, params: dict[str, Any] | None = None
) -> Trajectory:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Trajectory file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
    if header != ",".join(RECORD_FIELDS):
        raise DatasetError(f"{path}: unexpected header '{header}'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    columns = {name_: data[:, i] for i, name_ in enumerate(RECORD_FIELDS)}
    return Trajectory(name=name, params=params or {}, **columns)


def load_dataset(directory: str | Path) -> Dataset:
    """Read a dataset written by save_dataset."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise FileNotFoundError(f"Dataset manifest not found: {manifest_path}")
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = yaml.safe_load(f)
    if not isinstance(manifest, dict) or manifest.get("format_version") != FORMAT_VERSION:
        raise DatasetError(f"{manifest_path}: unsupported dataset manifest")

    mean = [manifest[f"norm.{c}.mean"] for c in CHANNELS]
    std = [manifest[f"norm.{c}.std"] for c in CHANNELS]

    # traj.<name>.<field> keys, in the order the trajectories were saved.
    fields: dict[str, dict[str, Any]] = {}
    for key, value in manifest.items():
        if key.startswith("traj."):
            _, name, field_name = key.split(".", 2)
            fields.setdefault(name, {})[field_name] = value

    trajectories = []
    splits: dict[str, list[int]] = {}
    for index, (name, values) in enumerate(fields.items()):
        if "file" not in values or "split" not in values:
            raise DatasetError(f"{manifest_path}: trajectory '{name}' lacks file or split")
        splits.setdefault(str(values["split"]), []).append(index)
        params = {k: v for k, v in values.items() if k not in ("split", "file")}
        trajectories.append(read_trajectory_csv(directory / values["file"], name, params))
    known = [*SPLITS, PROBE_SPLIT]
    splits = {k: splits[k] for k in known if k in splits} | {
        k: v for k, v in splits.items() if k not in known
    }

    reserved = ("format_version", "seed", "sample_rate_hz", "channels", "columns")
    info = {
        k: v
        for k, v in manifest.items()
        if k not in reserved and not k.startswith(("norm.", "split.", "traj."))
    }
    return Dataset(
        trajectories=trajectories,
        normalization=Normalization(mean=np.asarray(mean), std=np.asarray(std)),
        splits=splits,
        seed=int(manifest.get("seed", 0)),
        info=info,
    )
