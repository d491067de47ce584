"""Energy-stable L1 schemes for time-fractional Allen-Cahn, Cahn-Hilliard and MBE equations."""

from .errors import (
    BudgetExceeded,
    ConfigError,
    DomainError,
    FracPhaseError,
    HistoryLengthMismatch,
    InsufficientData,
    NonlinearDivergence,
    NonpositiveEnergy,
    SingularSymbol,
    UnsupportedSplit,
)
from .fracops import L1Kernel, History
from .models import ModelSpec, EnergyValue
from .spectral import Grid
from .stepper import RunState, SolverSettings, run

__version__ = "0.1.0"
