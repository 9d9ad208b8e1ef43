"""Exception types shared across the pipeline.

Composite operations (``locate_pupil``, ``measure_refraction``) tag the
failing stage on the exception so batch drivers can report provenance.
"""


class EyescreenError(Exception):
    """Base class for pipeline errors.

    `stage` names the pipeline stage that raised (when relevant) and
    `diagnostics` carries structured context for reports.
    """

    def __init__(self, message, stage=None, **diagnostics):
        if stage:
            message = f"{stage}: {message}"
        super().__init__(message)
        self.stage = stage
        self.diagnostics = diagnostics


class ParameterError(EyescreenError, ValueError):
    """An argument violates a documented precondition."""


class RegionNotFoundError(EyescreenError):
    """No region satisfying the search criteria exists in the input."""


class InsufficientSignalError(EyescreenError):
    """Too little usable signal to proceed (e.g. a featureless image)."""


class FitFailureError(EyescreenError):
    """A model fit did not produce a usable result."""


class DegenerateInputError(EyescreenError, ValueError):
    """Input is degenerate for the requested operation (e.g. a mask with no boundary)."""


class ModelError(EyescreenError, ValueError):
    """A fitted model cannot be applied (e.g. zero slope)."""
