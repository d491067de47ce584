"""Deterministic initial conditions."""

from __future__ import annotations

import numpy as np

from .spectral import Grid

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def initial_flower(grid: Grid, epsilon: float, corner_origin: bool = False) -> np.ndarray:
    """Four-petal interface ``tanh((r - 1/4 - (1 + cos 4 theta)/16) / (sqrt(2) eps))``.

    Polar coordinates are taken about the domain centre unless
    ``corner_origin`` is set, in which case the origin is ``(0, 0)``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    x, y = grid.coords
    if not corner_origin:
        x = x - 0.5 * grid.lx
        y = y - 0.5 * grid.ly
    r = np.sqrt(x * x + y * y)
    theta = np.arctan2(y, x)
    return np.tanh((r - 0.25 - (1.0 + np.cos(4.0 * theta)) / 16.0) / (np.sqrt(2.0) * epsilon))


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First ``n`` outputs of the splitmix64 generator started at ``seed``."""
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def initial_random(grid: Grid, seed: int, amplitude: float) -> np.ndarray:
    """I.i.d. uniform values on ``[-amplitude, amplitude]``, filled row-major.

    Value ``i`` is ``amplitude * (2 z_i / 2**64 - 1)`` with ``z_i`` the
    ``i``-th splitmix64 output, so fields are identical across platforms.
    """
    if not amplitude > 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    u = splitmix64(seed, grid.nx * grid.ny).astype(np.float64) * 2.0**-64
    return (amplitude * (2.0 * u - 1.0)).reshape(grid.shape)
