"""Exception types raised across the heatbath package."""


class HeatBathError(Exception):
    """Base class for every error raised by heatbath."""


class DegenerateInputError(HeatBathError, ValueError):
    pass


class PoleEvaluationError(HeatBathError, ZeroDivisionError):
    def __init__(self, s, message=None):
        self.s = complex(s)
        super().__init__(message or f"evaluation at a pole: s = {self.s!r}")


class NotSpectralDensityError(HeatBathError, ValueError):
    pass


class NotLosslessError(HeatBathError, ValueError):
    pass


class InvalidLoadError(HeatBathError, ValueError):
    pass


class ImproperResultError(HeatBathError, ValueError):
    pass


class ScatteringMismatchError(HeatBathError, ArithmeticError):
    pass


class ReflectionWindowError(HeatBathError, RuntimeError):
    pass


class ContaminatedWindowError(HeatBathError, ValueError):
    pass


class StageError(HeatBathError):
    """Failure inside a multi-stage pipeline, tagged with the stage name."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class ConfigError(HeatBathError, ValueError):
    pass
