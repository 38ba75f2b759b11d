"""
Exception types raised by the grainlab modules.

Library code raises these; the study manager catches them at the boundary
and turns them into result dicts and exit codes.
"""


class GrainLabError(Exception):
    """Base class for all grainlab errors."""


class ArgumentError(GrainLabError, ValueError):
    """An argument is outside the operation's domain (r = 0, steps = 0, ...)."""


class DimensionError(ArgumentError):
    """Unsupported ambient or grain dimension."""


class DomainError(ArgumentError):
    """A query point lies outside the window the operation is defined on."""


class UnsupportedShapeError(GrainLabError):
    """No closed form for this shape; callers fall back to the grid oracle."""


class UnsupportedModelError(GrainLabError):
    """The model is outside the class an operation has a formula for."""


class ModelValidationError(GrainLabError, ValueError):
    """A model violates one of its declared assumptions."""


class IllConditionedError(GrainLabError):
    """A conditioning probability is too small for a stable estimate."""


class SimulationError(GrainLabError, RuntimeError):
    """A replication worker failed."""


class ConfigError(GrainLabError, ValueError):
    """Invalid run configuration; `pointer` is a JSON pointer into the config."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
        self.detail = message
