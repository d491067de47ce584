"""Time series recording and post-processing: power-law fits, L1 order checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import DomainError, InsufficientData, NonpositiveEnergy
from .fracops import b_coeffs
from .models import EnergyValue, ModelSpec
from .spectral import Grid


@dataclass
class SeriesReport:
    steps: list[int] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    energy: list[EnergyValue] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    max_abs: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    def append(self, step: int, time: float, e: EnergyValue, mass: float, max_abs: float) -> None:
        if self.times and not time > self.times[-1]:
            raise ValueError(f"times must increase strictly: {time} after {self.times[-1]}")
        self.steps.append(int(step))
        self.times.append(float(time))
        self.energy.append(e)
        self.mass.append(float(mass))
        self.max_abs.append(float(max_abs))

    @property
    def total_energy(self) -> np.ndarray:
        return np.array([e.total for e in self.energy])

    @classmethod
    def from_arrays(cls, times, energies, mass=None, max_abs=None, steps=None) -> "SeriesReport":
        """Build a report from plain sequences; energies are taken as totals."""
        times = list(times)
        n = len(times)
        rep = cls()
        for i in range(n):
            e = float(energies[i])
            rep.append(
                steps[i] if steps is not None else i,
                times[i],
                EnergyValue(e, math.nan, math.nan),
                mass[i] if mass is not None else math.nan,
                max_abs[i] if max_abs is not None else math.nan,
            )
        return rep


class EnergyRecorder:
    """Observer that appends energy, mass and max-norm every ``stride`` steps."""

    def __init__(self, grid: Grid, spec: ModelSpec, stride: int = 1):
        if stride < 1:
            raise ValueError(f"stride must be >= 1, got {stride}")
        self.grid = grid
        self.spec = spec
        self.stride = stride
        self.report = SeriesReport()

    def observe(self, state) -> None:
        phi = state.phi
        self.report.append(
            state.step,
            state.time,
            models.energy(self.grid, phi, self.spec),
            float(np.mean(phi)),
            float(np.max(np.abs(phi))),
        )


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    window: tuple[float, float]
    residual: float
    n_points: int


def fit_power_law(series: SeriesReport, window: tuple[float, float]) -> PowerLawFit:
    """Least-squares fit of ``log E = log C + p log t`` over ``t0 <= t <= t1``."""
    t0, t1 = window
    if not t0 < t1:
        raise InsufficientData(f"empty window {window}")
    t = np.asarray(series.times, dtype=float)
    e = series.total_energy
    sel = (t >= t0) & (t <= t1) & (t > 0)
    if np.count_nonzero(sel) < 5:
        raise InsufficientData(f"need at least 5 samples in window {window}, have {np.count_nonzero(sel)}")
    t, e = t[sel], e[sel]
    if np.any(e <= 0):
        raise NonpositiveEnergy("energy must be strictly positive inside the fit window")
    X, Y = np.log(t), np.log(e)
    p, logc = np.polyfit(X, Y, 1)
    resid = Y - (p * X + logc)
    return PowerLawFit(float(p), float(np.exp(logc)), (float(t0), float(t1)),
                       float(np.sqrt(np.mean(resid**2))), int(t.size))


# -- scalar L1 accuracy check -------------------------------------------------

_MANUFACTURED = {
    # name: (u(t), Caputo derivative of u)
    "quadratic": (lambda t: t**2, lambda t, a: 2.0 * t ** (2 - a) / math.gamma(3 - a)),
    "linear": (lambda t: t, lambda t, a: t ** (1 - a) / math.gamma(2 - a)),
}


def l1_solve_scalar(alpha: float, tau: float, T: float, rhs) -> np.ndarray:
    """Solve ``D^alpha u = rhs(t)``, ``u(0) = 0`` with the L1 scheme; return ``u^0..u^n``."""
    n = int(round(T / tau))
    if n < 1 or abs(n * tau - T) > 1e-12 * T:
        raise DomainError(f"T={T} is not a whole number of steps of tau={tau}")
    b = b_coeffs(alpha, tau, n)
    u = np.zeros(n + 1)
    du = np.zeros(n)
    for k in range(n):
        known = np.dot(b[k:0:-1], du[:k]) if k else 0.0
        du[k] = (tau * rhs((k + 1) * tau) - known) / b[0]
        u[k + 1] = u[k] + du[k]
    return u


def l1_errors(alpha: float, taus, solution: str = "quadratic", T: float = 1.0) -> np.ndarray:
    """Absolute error at ``T`` of the L1 scheme for a manufactured solution."""
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    exact, caputo = _MANUFACTURED[solution]
    errs = [abs(l1_solve_scalar(alpha, tau, T, lambda t: caputo(t, alpha))[-1] - exact(T)) for tau in taus]
    return np.array(errs)


def l1_convergence_order(alpha: float, taus, solution: str = "quadratic", T: float = 1.0) -> float:
    """Observed order: slope of ``log2(error)`` against ``log2(tau)``."""
    taus = np.asarray(taus, dtype=float)
    if taus.size < 3 or np.any(np.diff(taus) >= 0):
        raise DomainError("taus must be strictly decreasing with at least 3 values")
    errs = l1_errors(alpha, taus, solution, T)
    return float(np.polyfit(np.log2(taus), np.log2(errs), 1)[0])


# -- misc --------------------------------------------------------------------


def max_principle_overshoot(series: SeriesReport) -> float:
    if not series.max_abs:
        return 0.0
    return max(0.0, max(series.max_abs) - 1.0)


def first_crossing_time(series: SeriesReport, fraction: float = 0.5) -> float:
    """First recorded time at which ``E < fraction * E(t_0)``; ``inf`` if never."""
    e = series.total_energy
    if e.size == 0:
        return math.inf
    below = np.nonzero(e < fraction * e[0])[0]
    return series.times[below[0]] if below.size else math.inf
