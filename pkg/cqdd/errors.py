"""
Exception hierarchy for cqdd.

Every error raised on purpose by the library derives from CqddError so the CLI
can map it to an exit code in one place.
"""

from __future__ import annotations


class CqddError(Exception):
    """Base class for all cqdd errors."""


class GeometryError(CqddError, ValueError):
    """Gear parameters or profile request violate the cycloid constraints."""


class ConfigError(CqddError, ValueError):
    """A configuration file or value could not be resolved."""


class ScenarioError(CqddError, ValueError):
    """A pendulum scenario cannot be simulated."""


class StepError(CqddError, ArithmeticError):
    """Integration produced a non-finite state."""


class DatasetError(CqddError, ValueError):
    """A dataset cannot be built, windowed or read."""


class ConstantChannelError(DatasetError):
    """A channel has zero variance in the training split."""


class TrajectoryTooShortError(DatasetError):
    """A trajectory holds fewer samples than the requested history."""


class ShapeError(CqddError, ValueError):
    """Operand shapes are incompatible."""


class NonFiniteError(CqddError, ArithmeticError):
    """A NaN or infinity appeared in a tensor, gradient or loss."""


class TapeError(CqddError, RuntimeError):
    """The gradient tape was used outside its lifecycle."""


class CheckpointError(CqddError):
    """Base class for checkpoint read/write problems."""


class CheckpointFormatError(CheckpointError):
    """Magic bytes or format version do not match."""


class CheckpointTruncatedError(CheckpointError):
    """The checkpoint file ended early."""


class CheckpointShapeError(CheckpointError):
    """Stored parameter shapes disagree with the stored model spec."""


class SpecMismatchError(CheckpointShapeError):
    """A model's input layout does not match the data it is asked to evaluate."""


class SeriesTooShortError(CqddError, ValueError):
    """A signal is too short for spectral analysis."""
