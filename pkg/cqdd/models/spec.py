"""Model architecture descriptions and the named presets."""

from __future__ import annotations

from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from cqdd.errors import ConfigError
from cqdd.pendulum.dataset import InputMode


class ModelKind(str, Enum):
    GRU = "GRU"
    MLP = "MLP"


class ModelSpec(BaseModel):
    """
    Architecture of a torque estimator.

    For GRU models `layers` counts stacked recurrent layers; for MLPs it counts all
    weight layers including the output layer.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "custom"
    kind: ModelKind
    input_channels: Literal[2, 3]
    history: int = Field(ge=1)
    layers: int = Field(ge=1)
    hidden_size: int = Field(ge=1)

    @property
    def mode(self) -> InputMode:
        return InputMode.for_channels(self.input_channels)

    @property
    def window_shape(self) -> tuple[int, int]:
        return (self.input_channels, self.history)


PRESETS: dict[str, ModelSpec] = {
    "pva-gru": ModelSpec(
        name="pva-gru", kind=ModelKind.GRU, input_channels=3, history=30, layers=4, hidden_size=32
    ),
    "pv-gru": ModelSpec(
        name="pv-gru", kind=ModelKind.GRU, input_channels=2, history=30, layers=4, hidden_size=32
    ),
    # MLPs see position error and velocity, like the actuator network they reproduce.
    "mlp-tuned": ModelSpec(
        name="mlp-tuned", kind=ModelKind.MLP, input_channels=2, history=24, layers=3, hidden_size=32
    ),
    "mlp-baseline": ModelSpec(
        name="mlp-baseline",
        kind=ModelKind.MLP,
        input_channels=2,
        history=3,
        layers=3,
        hidden_size=32,
    ),
}


def resolve_spec(preset: str | ModelSpec) -> ModelSpec:
    """A ModelSpec, or the preset with that name."""
    if isinstance(preset, ModelSpec):
        return preset
    try:
        return PRESETS[preset.lower()]
    except KeyError:
        raise ConfigError(
            f"unknown preset '{preset}'; choose one of {', '.join(PRESETS)}"
        ) from None
