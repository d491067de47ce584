"""Exception hierarchy shared by all fracphase modules."""


class FracPhaseError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FracPhaseError, ValueError):
    """A parameter lies outside the range where a formula is defined."""


class SingularSymbol(FracPhaseError, ZeroDivisionError):
    """A Fourier symbol of an implicit operator vanishes."""


class HistoryLengthMismatch(FracPhaseError, ValueError):
    pass


class UnsupportedSplit(FracPhaseError, ValueError):
    pass


class NonlinearDivergence(FracPhaseError, RuntimeError):
    """Fixed-point iteration hit its iteration cap before converging."""


class BudgetExceeded(FracPhaseError, MemoryError):
    """The increment history would not fit in the configured memory cap."""


class ConfigError(FracPhaseError, ValueError):
    """Invalid run configuration. ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class InsufficientData(FracPhaseError, ValueError):
    pass


class NonpositiveEnergy(FracPhaseError, ValueError):
    pass
