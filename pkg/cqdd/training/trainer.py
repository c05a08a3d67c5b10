"""
Supervised training of torque estimators.

Mini-batch MSE on normalized torque with Adam, global-norm clipping and a
one-cycle schedule over epochs x batches steps. The validation split selects the
returned parameters and drives early stopping.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from cqdd.autodiff.optim import OneCycleSchedule, Optimizer
from cqdd.autodiff.tensor import Tape, Tensor2D, backward, mse_loss
from cqdd.errors import DatasetError, NonFiniteError
from cqdd.models.checkpoint import Checkpoint
from cqdd.models.networks import TorqueModel, build_model
from cqdd.models.spec import ModelSpec
from cqdd.pendulum.dataset import Dataset, window
from cqdd.services.seeding import make_rng

logger = logging.getLogger(__name__)

PREDICT_CHUNK = 4096
HISTORY_COLUMNS = ("epoch", "train_loss", "val_loss", "lr")


class TrainConfig(BaseModel):
    """Training hyperparameters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    batch_size: int = Field(default=64, ge=1)
    epochs: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    initial_lr: float = Field(default=1e-4, gt=0, allow_inf_nan=False)
    max_lr: float | None = Field(default=None, gt=0, allow_inf_nan=False)
    warmup_fraction: float = Field(default=0.3, gt=0, lt=1)
    final_lr_fraction: float = Field(default=0.04, gt=0, allow_inf_nan=False)
    patience: int = Field(default=10, ge=1)
    max_grad_norm: float = Field(default=1.0, ge=0, allow_inf_nan=False)
    stride: int = Field(default=1, ge=1, description="keep every stride-th training window")

    def schedule(self, total_steps: int) -> OneCycleSchedule:
        return OneCycleSchedule(
            initial_lr=self.initial_lr,
            max_lr=self.max_lr,
            total_steps=total_steps,
            warmup_fraction=self.warmup_fraction,
            final_lr_fraction=self.final_lr_fraction,
        )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[EpochRecord]
    best_epoch: int


def predict_in_chunks(model: TorqueModel, windows: np.ndarray) -> np.ndarray:
    return np.concatenate(
        [
            model.predict_batch(windows[i : i + PREDICT_CHUNK])
            for i in range(0, len(windows), PREDICT_CHUNK)
        ]
    )


def _mse(model: TorqueModel, windows: np.ndarray, targets: np.ndarray) -> float:
    error = predict_in_chunks(model, windows) - targets
    return float(np.mean(error * error))


def train(spec: ModelSpec, dataset: Dataset, config: TrainConfig | None = None) -> TrainResult:
    """Train `spec` on the dataset's train split; keep the best validation epoch."""
    config = config or TrainConfig()
    x_train, y_train = window(dataset, spec.history, spec.mode, "train")
    x_train, y_train = x_train[:: config.stride], y_train[:: config.stride]
    x_val, y_val = window(dataset, spec.history, spec.mode, "validation")
    if len(x_train) == 0 or len(x_val) == 0:
        raise DatasetError("training and validation splits must yield windows")

    batches = math.ceil(len(x_train) / config.batch_size)
    total_steps = config.epochs * batches
    model = build_model(spec, rng=make_rng(config.seed, "init"))
    optimizer = Optimizer(model.params, config.schedule(total_steps), config.max_grad_norm)
    shuffle = make_rng(config.seed, "shuffle")
    logger.info(
        "Training %s on %d windows (%d validation), %d epochs x %d batches",
        spec.name,
        len(x_train),
        len(x_val),
        config.epochs,
        batches,
    )

    history: list[EpochRecord] = []
    best_val = math.inf
    best_arrays = model.arrays()
    best_epoch = 0
    stale = 0
    for epoch in range(1, config.epochs + 1):
        order = shuffle.permutation(len(x_train))
        running = 0.0
        for b in range(batches):
            idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            target = Tensor2D(y_train[idx][np.newaxis, :])
            try:
                with Tape() as tape:
                    loss = mse_loss(model.forward(x_train[idx]), target)
                grads = backward(tape, loss)
                optimizer.step(grads)
            except NonFiniteError as e:
                raise NonFiniteError(
                    f"training diverged at epoch {epoch}, batch {b + 1}: {e}"
                ) from e
            running += loss.item() * len(idx)

        train_loss = running / len(x_train)
        val_loss = _mse(model, x_val, y_val)
        if not math.isfinite(val_loss):
            raise NonFiniteError(f"validation loss is {val_loss} at epoch {epoch}")
        history.append(EpochRecord(epoch, train_loss, val_loss, optimizer.last_lr))
        logger.debug(
            "epoch %d train=%.6g val=%.6g lr=%.3g", epoch, train_loss, val_loss, optimizer.last_lr
        )

        if val_loss < best_val:
            best_val, best_arrays, best_epoch, stale = val_loss, model.arrays(), epoch, 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info("Early stop at epoch %d (best epoch %d)", epoch, best_epoch)
                break

    model.load_arrays(best_arrays)
    last = history[-1]
    metadata = {
        "preset": spec.name,
        "seed": config.seed,
        "epochs_run": len(history),
        "best_epoch": best_epoch,
        "best_val_loss": best_val,
        "final_train_loss": last.train_loss,
        "final_val_loss": last.val_loss,
        "train_windows": int(len(x_train)),
        "dataset_seed": dataset.seed,
    }
    checkpoint = Checkpoint(model=model, normalization=dataset.normalization, metadata=metadata)
    return TrainResult(checkpoint=checkpoint, history=history, best_epoch=best_epoch)


def write_history(history: list[EpochRecord], path: str | Path) -> Path:
    """Loss history CSV with columns epoch,train_loss,val_loss,lr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HISTORY_COLUMNS)
        for r in history:
            writer.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss), repr(r.lr)])
    return path
