"""Periodic 2-D Fourier pseudo-spectral machinery.

Conventions
-----------
A field is a real ``float64`` array of shape ``(nx, ny)``; entry ``[i, j]``
is the value at ``(x_i, y_j) = (i*lx/nx, j*ly/ny)``.

Transforms are real-to-complex over both axes (``numpy.fft.rfft2``): the
spectrum has shape ``(nx, ny//2 + 1)``, with the full set of x-modes
``p = -nx/2 .. nx/2-1`` along axis 0 and the non-negative y-modes
``q = 0 .. ny/2`` along axis 1. The forward transform is unnormalized (the
zero mode equals ``nx*ny*mean(f)``); the inverse carries ``1/(nx*ny)``.

First derivatives zero the Nyquist mode in each direction so that
derivatives of real fields stay real. Even-order operators keep it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import DomainError, SingularSymbol

SYMBOL_FLOOR = 1e-14


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    lx: float
    ly: float
    # transform / multiply-add counters, used by cost tests
    ops: Counter = field(default_factory=Counter, compare=False, repr=False)

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 4 or n % 2:
                raise DomainError(f"{name} must be an even integer >= 4, got {n}")
        for name in ("lx", "ly"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.nx) * (self.lx / self.nx)
        y = np.arange(self.ny) * (self.ly / self.ny)
        return np.meshgrid(x, y, indexing="ij")

    @cached_property
    def kx(self) -> np.ndarray:
        p = np.fft.fftfreq(self.nx, d=1.0 / self.nx)
        return (2 * np.pi / self.lx * p)[:, None]

    @cached_property
    def ky(self) -> np.ndarray:
        q = np.fft.rfftfreq(self.ny, d=1.0 / self.ny)
        return (2 * np.pi / self.ly * q)[None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the half spectrum, i.e. the symbol of -Laplacian."""
        return self.kx**2 + self.ky**2

    @cached_property
    def k4(self) -> np.ndarray:
        return self.k2**2

    @cached_property
    def ikx(self) -> np.ndarray:
        s = 1j * self.kx
        s[self.nx // 2, 0] = 0.0
        return s

    @cached_property
    def iky(self) -> np.ndarray:
        s = 1j * self.ky
        s[0, self.ny // 2] = 0.0
        return s

    @cached_property
    def parseval_weights(self) -> np.ndarray:
        # half-spectrum columns q=1..ny/2-1 stand for two conjugate modes
        w = np.full(self.ny // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w[None, :]


def forward_transform(grid: Grid, f: np.ndarray) -> np.ndarray:
    grid.ops["fft"] += 1
    return np.fft.rfft2(f)


def inverse_transform(grid: Grid, F: np.ndarray) -> np.ndarray:
    grid.ops["ifft"] += 1
    return np.fft.irfft2(F, s=grid.shape)


def apply_operator(grid: Grid, f, op: str):
    """Apply ``laplacian``, ``bilaplacian``, ``gradient`` or ``divergence``.

    ``gradient`` returns an ``(fx, fy)`` pair; ``divergence`` expects one.
    """
    if op == "divergence":
        fx, fy = f
        F = grid.ikx * forward_transform(grid, fx) + grid.iky * forward_transform(grid, fy)
        return inverse_transform(grid, F)
    F = forward_transform(grid, f)
    if op == "laplacian":
        return inverse_transform(grid, -grid.k2 * F)
    if op == "bilaplacian":
        return inverse_transform(grid, grid.k4 * F)
    if op == "gradient":
        return inverse_transform(grid, grid.ikx * F), inverse_transform(grid, grid.iky * F)
    raise ValueError(f"unknown operator {op!r}")


def helmholtz_symbol(grid: Grid, a: float, b: float, c: float) -> np.ndarray:
    """Fourier symbol of ``a - b*Laplacian + c*Bilaplacian``."""
    sym = a + b * grid.k2 + c * grid.k4
    if np.min(np.abs(sym)) < SYMBOL_FLOOR:
        raise SingularSymbol(f"symbol of ({a}) - ({b})Lap + ({c})Lap^2 vanishes on some mode")
    return sym


def solve_modified_helmholtz(grid: Grid, rhs: np.ndarray, a: float, b: float, c: float) -> np.ndarray:
    """Solve ``(a - b*Lap + c*Lap^2) u = rhs`` mode by mode."""
    sym = helmholtz_symbol(grid, a, b, c)
    return inverse_transform(grid, forward_transform(grid, rhs) / sym)


def mean(f: np.ndarray) -> float:
    return float(np.mean(f))


def spectral_mean_square(grid: Grid, F: np.ndarray, symbol=None) -> float:
    """Grid mean of ``|g|^2`` where ``g`` has half spectrum ``symbol * F``.

    ``symbol`` may be a real array broadcastable to the spectrum; it enters
    squared, so pass ``sqrt`` of a nonnegative weight if needed.
    """
    G = F if symbol is None else symbol * F
    n = grid.nx * grid.ny
    return float(np.sum(grid.parseval_weights * np.abs(G) ** 2) / n**2)


def _pad_spectrum(grid: Grid, F: np.ndarray, mx: int, my: int) -> np.ndarray:
    nx, ny = grid.shape
    out = np.zeros((mx, my // 2 + 1), dtype=complex)
    h = nx // 2
    out[:h, : ny // 2] = F[:h, : ny // 2]
    out[mx - h + 1 :, : ny // 2] = F[h + 1 :, : ny // 2]
    return out


def _truncate_spectrum(grid: Grid, G: np.ndarray) -> np.ndarray:
    nx, ny = grid.shape
    mx = G.shape[0]
    out = np.zeros((nx, ny // 2 + 1), dtype=complex)
    h = nx // 2
    out[:h, : ny // 2] = G[:h, : ny // 2]
    out[h + 1 :, : ny // 2] = G[mx - h + 1 :, : ny // 2]
    return out


def evaluate_pointwise(grid: Grid, func: Callable, *fields: np.ndarray, dealias: bool = False):
    """Evaluate a pointwise nonlinearity ``func(*fields)``.

    Without ``dealias`` this is plain collocation. With it, the inputs are
    zero-padded to a 3/2-sized grid, ``func`` is applied there, and the
    result is truncated back (Nyquist modes dropped). ``func`` may return a
    single array or a tuple of arrays.
    """
    if not dealias:
        return func(*fields)
    mx, my = 3 * grid.nx // 2, 3 * grid.ny // 2
    mx += mx % 2
    my += my % 2
    scale = (mx * my) / (grid.nx * grid.ny)
    padded = [
        np.fft.irfft2(_pad_spectrum(grid, forward_transform(grid, f), mx, my), s=(mx, my)) * scale
        for f in fields
    ]
    res = func(*padded)
    single = isinstance(res, np.ndarray)
    outs = []
    for r in (res,) if single else res:
        G = np.fft.rfft2(r) / scale
        outs.append(inverse_transform(grid, _truncate_spectrum(grid, G)))
    return outs[0] if single else tuple(outs)
