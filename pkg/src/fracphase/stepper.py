"""L1 time stepping for the time-fractional AC, CH and MBE equations.

Every scheme has the form

    (1/(gamma tau)) sum_{j=0}^{k} b_j (phi^{k+1-j} - phi^{k-j}) = N(phi^{k+1}, phi^k)

The ``j = 0`` term carries the unknown and is folded into the implicit
Fourier symbol as ``c0 = b_0/(gamma tau)``; the ``j >= 1`` terms come from
:func:`fracphase.fracops.history_convolution` and go to the right-hand side.
Stabilized schemes need one diagonal solve per step. Convex-split schemes
solve their nonlinear equation by a relaxed Picard iteration (see
:func:`_picard`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from . import models, spectral
from .diagnostics import EnergyRecorder, SeriesReport  # noqa: F401  (re-export)
from .errors import BudgetExceeded, DomainError, NonlinearDivergence, UnsupportedSplit
from .fracops import History, L1Kernel, history_convolution
from .models import ModelSpec
from .spectral import Grid

log = logging.getLogger(__name__)

DEFAULT_MEMORY_CAP = 4 * 2**30


@dataclass(frozen=True)
class SolverSettings:
    tau: float
    n_steps: int
    nonlinear_tol: float = 1e-10
    nonlinear_max_iter: int = 200
    dealias: bool = False
    # Picard shift for convex splits; None picks 1.5 * max slope^2 of phi^k,
    # 0 gives the plain lagged iteration
    relaxation: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise DomainError(f"n_steps must be a nonnegative integer, got {self.n_steps}")
        if not 0 < self.nonlinear_tol <= 1e-4:
            raise DomainError(f"nonlinear_tol must lie in (0, 1e-4], got {self.nonlinear_tol}")
        if self.nonlinear_max_iter < 1:
            raise DomainError(f"nonlinear_max_iter must be >= 1, got {self.nonlinear_max_iter}")


@dataclass
class RunState:
    """Current field plus the shared, append-only increment history."""

    grid: Grid
    phi: np.ndarray
    history: History
    step: int = 0
    time: float = 0.0

    @classmethod
    def initial(cls, grid: Grid, phi0: np.ndarray, capacity: int) -> "RunState":
        phi0 = np.array(phi0, dtype=float)
        if phi0.shape != grid.shape:
            raise ValueError(f"initial field shape {phi0.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(phi0)):
            raise ValueError("initial field has non-finite entries")
        return cls(grid, phi0, History(grid.shape, capacity))


def _known_part(state: RunState, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings):
    """Return ``(c0, base)`` with ``base = c0 phi^k - H/(gamma tau)``."""
    if len(state.history) != state.step:
        raise DomainError(f"history length {len(state.history)} != step {state.step}")
    gt = spec.gamma * settings.tau
    c0 = kernel.b[0] / gt
    H = history_convolution(state.history, kernel, state.step, ops=state.grid.ops)
    return c0, c0 * state.phi - H / gt


def _advance(state: RunState, phi_new: np.ndarray, tau: float) -> RunState:
    state.history.append(phi_new - state.phi)
    step = state.step + 1
    return RunState(state.grid, phi_new, state.history, step, step * tau)


def _picard(grid: Grid, symbol: np.ndarray, rhs_hat: np.ndarray, correction: Callable,
            u0: np.ndarray, settings: SolverSettings) -> np.ndarray:
    """Iterate ``u <- ifft((rhs_hat + correction(u)) / symbol)`` to a fixed point."""
    u = u0
    for _ in range(settings.nonlinear_max_iter):
        u_next = spectral.inverse_transform(grid, (rhs_hat + correction(u)) / symbol)
        if not np.all(np.isfinite(u_next)):
            break
        diff = np.max(np.abs(u_next - u))
        u = u_next
        if diff <= settings.nonlinear_tol:
            return u
    raise NonlinearDivergence(
        f"Picard iteration did not reach tol {settings.nonlinear_tol} in {settings.nonlinear_max_iter} iterations"
    )


def _shift(settings: SolverSettings, slope_sq_max: float) -> float:
    if settings.relaxation is not None:
        return float(settings.relaxation)
    return 1.5 * float(slope_sq_max)


# -- Allen-Cahn --------------------------------------------------------------


def step_ac_stabilized(state: RunState, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings) -> RunState:
    grid, eps, phi = state.grid, spec.epsilon, state.phi
    c0, base = _known_part(state, spec, kernel, settings)
    s = spec.stabilization_S / spec.gamma
    f = spectral.evaluate_pointwise(grid, lambda p: models.bulk_f(p, spec.potential), phi, dealias=settings.dealias)
    rhs = base + s * phi - f / eps
    phi_new = spectral.solve_modified_helmholtz(grid, rhs, c0 + s, eps, 0.0)
    return _advance(state, phi_new, settings.tau)


def step_ac_convex_split(state: RunState, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings) -> RunState:
    if spec.potential != "quartic":
        raise UnsupportedSplit("convex splitting needs the quartic potential")
    grid, eps, phi = state.grid, spec.epsilon, state.phi
    c0, base = _known_part(state, spec, kernel, settings)
    sigma = _shift(settings, np.max(phi**2))
    symbol = spectral.helmholtz_symbol(grid, c0 + sigma / eps, eps, 0.0)
    rhs_hat = spectral.forward_transform(grid, base + phi / eps)

    def correction(u):
        g = spectral.evaluate_pointwise(grid, lambda v: v * v * v - sigma * v, u, dealias=settings.dealias)
        return -spectral.forward_transform(grid, g) / eps

    phi_new = _picard(grid, symbol, rhs_hat, correction, phi, settings)
    return _advance(state, phi_new, settings.tau)


# -- Cahn-Hilliard -----------------------------------------------------------


def step_ch_stabilized(state: RunState, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings) -> RunState:
    grid, eps, phi = state.grid, spec.epsilon, state.phi
    c0, base = _known_part(state, spec, kernel, settings)
    s = spec.stabilization_S / spec.gamma
    f = spectral.evaluate_pointwise(grid, lambda p: models.bulk_f(p, spec.potential), phi, dealias=settings.dealias)
    symbol = spectral.helmholtz_symbol(grid, c0, s, eps)
    rhs_hat = (spectral.forward_transform(grid, base)
               - grid.k2 * spectral.forward_transform(grid, f / eps - s * phi))
    phi_new = spectral.inverse_transform(grid, rhs_hat / symbol)
    return _advance(state, phi_new, settings.tau)


def step_ch_convex_split(state: RunState, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings) -> RunState:
    if spec.potential != "quartic":
        raise UnsupportedSplit("convex splitting needs the quartic potential")
    grid, eps, phi = state.grid, spec.epsilon, state.phi
    c0, base = _known_part(state, spec, kernel, settings)
    sigma = _shift(settings, np.max(phi**2))
    symbol = spectral.helmholtz_symbol(grid, c0, sigma / eps, eps)
    rhs_hat = spectral.forward_transform(grid, base) + grid.k2 * spectral.forward_transform(grid, phi) / eps

    def correction(u):
        g = spectral.evaluate_pointwise(grid, lambda v: v * v * v - sigma * v, u, dealias=settings.dealias)
        return -grid.k2 * spectral.forward_transform(grid, g) / eps

    phi_new = _picard(grid, symbol, rhs_hat, correction, phi, settings)
    return _advance(state, phi_new, settings.tau)


# -- molecular beam epitaxy --------------------------------------------------


def _divergence_hat(grid: Grid, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    return grid.ikx * spectral.forward_transform(grid, vx) + grid.iky * spectral.forward_transform(grid, vy)


def step_mbe_stabilized(state: RunState, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings) -> RunState:
    if not spec.is_mbe:
        raise DomainError(f"step_mbe_stabilized needs an MBE family, got {spec.family}")
    grid, eps, phi = state.grid, spec.epsilon, state.phi
    c0, base = _known_part(state, spec, kernel, settings)
    s = spec.stabilization_S / spec.gamma
    gx, gy = spectral.apply_operator(grid, phi, "gradient")
    fx, fy = spectral.evaluate_pointwise(grid, lambda a, b: models.mbe_force(a, b, spec.family), gx, gy,
                                         dealias=settings.dealias)
    symbol = spectral.helmholtz_symbol(grid, c0, s, eps)
    # -(S/gamma) Lap phi^k  ->  + s |k|^2 phi_hat
    rhs_hat = (spectral.forward_transform(grid, base)
               + s * grid.k2 * spectral.forward_transform(grid, phi)
               + _divergence_hat(grid, fx, fy) / eps)
    phi_new = spectral.inverse_transform(grid, rhs_hat / symbol)
    return _advance(state, phi_new, settings.tau)


def step_mbe_convex_split(state: RunState, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings) -> RunState:
    if spec.family != "MBE_slope":
        raise UnsupportedSplit("the MBE convex split is defined for the slope-selection model only")
    grid, eps, phi = state.grid, spec.epsilon, state.phi
    c0, base = _known_part(state, spec, kernel, settings)
    gx, gy = spectral.apply_operator(grid, phi, "gradient")
    sigma = _shift(settings, np.max(gx**2 + gy**2))
    # the shift is removed again through div(grad u), whose symbol has the
    # Nyquist wavenumbers zeroed, so add it with that same symbol
    div_grad = (np.abs(grid.ikx) ** 2 + np.abs(grid.iky) ** 2)
    symbol = spectral.helmholtz_symbol(grid, c0, 0.0, eps) + (sigma / eps) * div_grad
    rhs_hat = spectral.forward_transform(grid, base) + grid.k2 * spectral.forward_transform(grid, phi) / eps

    def g(vx, vy):
        m = vx**2 + vy**2 - sigma
        return m * vx, m * vy

    def correction(u):
        U = spectral.forward_transform(grid, u)
        ux = spectral.inverse_transform(grid, grid.ikx * U)
        uy = spectral.inverse_transform(grid, grid.iky * U)
        hx, hy = spectral.evaluate_pointwise(grid, g, ux, uy, dealias=settings.dealias)
        return _divergence_hat(grid, hx, hy) / eps

    phi_new = _picard(grid, symbol, rhs_hat, correction, phi, settings)
    return _advance(state, phi_new, settings.tau)


_SCHEMES = {
    ("AC", "stabilized"): step_ac_stabilized,
    ("AC", "convex_split"): step_ac_convex_split,
    ("CH", "stabilized"): step_ch_stabilized,
    ("CH", "convex_split"): step_ch_convex_split,
    ("MBE_slope", "stabilized"): step_mbe_stabilized,
    ("MBE_noslope", "stabilized"): step_mbe_stabilized,
    ("MBE_slope", "convex_split"): step_mbe_convex_split,
}


def scheme_for(spec: ModelSpec):
    try:
        return _SCHEMES[(spec.family, spec.splitting)]
    except KeyError:
        raise UnsupportedSplit(f"no {spec.splitting} scheme for {spec.family}") from None


def history_bytes(grid: Grid, n_steps: int) -> int:
    return int(n_steps) * grid.nx * grid.ny * 8


def run(grid: Grid, spec: ModelSpec, kernel: L1Kernel, settings: SolverSettings, initial: np.ndarray,
        observers: Iterable = (), memory_cap_bytes: int = DEFAULT_MEMORY_CAP) -> tuple[RunState, SeriesReport]:
    """Advance ``settings.n_steps`` steps from ``initial``.

    Each observer needs a ``stride`` attribute and an ``observe(state)``
    method; it is called at step 0 and at every multiple of its stride. The
    returned report is the ``report`` of the first observer that has one,
    e.g. an :class:`EnergyRecorder` (empty if there is none).
    """
    step_fn = scheme_for(spec)
    if kernel.n_max < settings.n_steps:
        raise DomainError(f"kernel built for {kernel.n_max} steps, run needs {settings.n_steps}")
    if kernel.tau != settings.tau:
        raise DomainError(f"kernel tau {kernel.tau} != settings tau {settings.tau}")
    need = history_bytes(grid, settings.n_steps)
    if need > memory_cap_bytes:
        raise BudgetExceeded(f"history needs {need} bytes, cap is {memory_cap_bytes}")
    for msg in models.stability_warnings(spec):
        log.warning(msg)

    observers = list(observers)
    state = RunState.initial(grid, initial, settings.n_steps)
    for obs in observers:
        obs.observe(state)
    for _ in range(settings.n_steps):
        state = step_fn(state, spec, kernel, settings)
        for obs in observers:
            if state.step % obs.stride == 0:
                obs.observe(state)

    report = next((o.report for o in observers if isinstance(getattr(o, "report", None), SeriesReport)),
                  SeriesReport())
    return state, report
