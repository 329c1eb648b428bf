"""Exception hierarchy for resetloop."""


class ResetLoopError(Exception):
    """Base class for all package errors."""


class EvaluationError(ResetLoopError):
    """A frequency response could not be evaluated (singular resolvent)."""


class FrfRangeError(ResetLoopError):
    """A measured FRF was queried outside its span in strict mode."""


class KernelError(ResetLoopError):
    """The harmonic kernel is singular at the requested frequency."""

    def __init__(self, message: str, omega: float | None = None):
        super().__init__(message)
        self.omega = omega


class AlphaError(ResetLoopError):
    """The gain-correction search could not bracket a solution."""


class PredictionError(ResetLoopError):
    """Closed-loop prediction is undefined (for example ``1 + L1 = 0``)."""


class SimulationUnsupported(ResetLoopError):
    """The plant cannot be simulated (no state-space realization)."""


class SimulationDiverged(ResetLoopError):
    """The hybrid simulation escaped the divergence bound."""

    def __init__(self, message: str, escape_time: float):
        super().__init__(message)
        self.escape_time = escape_time


class ConfigError(ResetLoopError):
    """Invalid run configuration."""
