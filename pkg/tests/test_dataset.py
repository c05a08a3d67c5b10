"""
Tests for dataset splitting, normalization, windowing and persistence.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import yaml

from cqdd.errors import ConstantChannelError, DatasetError, TrajectoryTooShortError
from cqdd.pendulum.dataset import (
    MANIFEST_NAME,
    Dataset,
    InputMode,
    Normalization,
    load_dataset,
    save_dataset,
    split_counts,
    window,
    window_trajectory,
)


class TestSplits:
    """Trajectory-level splits."""

    def test_default_fractions(self) -> None:
        assert split_counts(100, (0.8, 0.1, 0.1)) == (80, 10, 10)

    def test_small_datasets_keep_every_split(self) -> None:
        assert split_counts(3, (0.8, 0.1, 0.1)) == (1, 1, 1)

    def test_too_few_trajectories(self) -> None:
        with pytest.raises(DatasetError):
            split_counts(2, (0.8, 0.1, 0.1))

    def test_bad_fractions(self) -> None:
        with pytest.raises(DatasetError):
            split_counts(10, (0.5, 0.1, 0.1))
        with pytest.raises(DatasetError):
            split_counts(10, (1.2, -0.1, -0.1))

    def test_splits_partition_trajectories(self, small_dataset: Dataset) -> None:
        splits = small_dataset.splits
        members = [i for name in ("train", "validation", "test") for i in splits[name]]
        assert sorted(members) == list(range(6))
        assert small_dataset.splits["probe"] == [6]
        assert small_dataset.split_of(6) == "probe"

    def test_unknown_split(self, small_dataset: Dataset) -> None:
        with pytest.raises(DatasetError):
            small_dataset.split("holdout")


class TestNormalization:
    """Training-split statistics."""

    def test_fit_on_training_split_only(self, small_dataset: Dataset) -> None:
        train = np.concatenate([t.channels() for t in small_dataset.split("train")])
        np.testing.assert_allclose(small_dataset.normalization.mean, train.mean(axis=0))
        np.testing.assert_allclose(small_dataset.normalization.std, train.std(axis=0))

    def test_denormalize_inverts(self, small_dataset: Dataset) -> None:
        data = small_dataset.trajectories[0].channels()
        back = small_dataset.denormalize(small_dataset.normalize(data))
        np.testing.assert_allclose(back, data, atol=1e-12)

    def test_constant_channel_rejected(self) -> None:
        with pytest.raises(ConstantChannelError):
            Normalization(mean=np.zeros(4), std=np.array([1.0, 1.0, 0.0, 1.0]))

    def test_vector_form(self) -> None:
        norm = Normalization(mean=np.arange(4.0), std=np.arange(1.0, 5.0))
        np.testing.assert_array_equal(norm.as_vector(), [0, 1, 1, 2, 2, 3, 3, 4])
        restored = Normalization.from_vector(norm.as_vector())
        np.testing.assert_array_equal(restored.std, norm.std)


class TestInputMode:
    def test_channels(self) -> None:
        assert InputMode.PV.channel_indices == (0, 1)
        assert InputMode.PVA.channels == 3
        assert InputMode.for_channels(2) is InputMode.PV

    def test_unknown_channel_count(self) -> None:
        with pytest.raises(DatasetError):
            InputMode.for_channels(4)


class TestWindowing:
    """Sliding history windows."""

    def test_shapes(self, small_dataset: Dataset) -> None:
        inputs, targets = window(small_dataset, history=5, mode="PVA", split="train")
        per_traj = 400 - 5 + 1
        assert inputs.shape == (4 * per_traj, 3, 5)
        assert targets.shape == (4 * per_traj,)

    def test_window_contents(self, small_dataset: Dataset) -> None:
        traj = small_dataset.split("train")[0]
        inputs, targets = window_trajectory(
            traj, small_dataset.normalization, 5, InputMode.PV
        )
        data = small_dataset.normalize(traj.channels())
        np.testing.assert_array_equal(inputs[0, 0], data[0:5, 0])
        np.testing.assert_array_equal(inputs[7, 1], data[7:12, 1])
        assert targets[0] == data[4, 3]

    def test_windows_do_not_cross_trajectories(self, small_dataset: Dataset) -> None:
        inputs, _ = window(small_dataset, history=5, mode="PV", split="train")
        second = small_dataset.split("train")[1]
        data = small_dataset.normalize(second.channels())
        np.testing.assert_array_equal(inputs[396, 0], data[0:5, 0])

    def test_history_longer_than_trajectory(self, small_dataset: Dataset) -> None:
        with pytest.raises(TrajectoryTooShortError):
            window(small_dataset, history=401, mode="PV")

    def test_bad_history(self, small_dataset: Dataset) -> None:
        with pytest.raises(DatasetError):
            window(small_dataset, history=0, mode="PV")


class TestPersistence:
    """CSV plus manifest layout on disk."""

    def test_save_then_load(self, small_dataset: Dataset, tmp_path: Path) -> None:
        dataset = replace(small_dataset, info={"n_scenarios": 6})
        written = save_dataset(dataset, tmp_path)
        assert (tmp_path / MANIFEST_NAME) in written
        assert (tmp_path / "trajectories" / "probe-00.csv").exists()

        loaded = load_dataset(tmp_path)
        assert loaded.splits == small_dataset.splits
        assert loaded.seed == small_dataset.seed
        assert loaded.info["n_scenarios"] == 6
        np.testing.assert_array_equal(loaded.normalization.mean, small_dataset.normalization.mean)
        for a, b in zip(loaded.trajectories, small_dataset.trajectories):
            assert a.name == b.name
            np.testing.assert_array_equal(a.records(), b.records())
        assert loaded.trajectories[6].params["kind"] == "probe"

    def test_missing_manifest(self, tmp_path: Path) -> None:
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path)

    def test_unsupported_format(self, tmp_path: Path) -> None:
        (tmp_path / MANIFEST_NAME).write_text(yaml.safe_dump({"format_version": 99}))
        with pytest.raises(DatasetError):
            load_dataset(tmp_path)

    def test_bad_csv_header(self, small_dataset: Dataset, tmp_path: Path) -> None:
        save_dataset(small_dataset, tmp_path)
        path = tmp_path / "trajectories" / f"{small_dataset.trajectories[0].name}.csv"
        lines = path.read_text().splitlines()
        lines[0] = "a,b,c,d,e,f"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetError):
            load_dataset(tmp_path)
