"""Bulk potentials, forces and free energies for the AC, CH and MBE models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .errors import DomainError, UnsupportedSplit
from .spectral import Grid

FAMILIES = ("AC", "CH", "MBE_slope", "MBE_noslope")
POTENTIALS = ("quartic", "truncated_quartic")
SPLITTINGS = ("stabilized", "convex_split")

# max F'' of the truncated double well (attained for |phi| >= 2)
TRUNCATED_L = 11.0
# max of (v^2-1)/(1+v^2)^2, attained at v^2 = 3
NOSLOPE_L = 1.0 / 8.0


@dataclass(frozen=True)
class ModelSpec:
    family: str
    epsilon: float
    gamma: float
    stabilization_S: float = 0.0
    potential: str = "quartic"
    splitting: str = "stabilized"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.potential not in POTENTIALS:
            raise DomainError(f"potential must be one of {POTENTIALS}, got {self.potential!r}")
        if self.splitting not in SPLITTINGS:
            raise DomainError(f"splitting must be one of {SPLITTINGS}, got {self.splitting!r}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not self.stabilization_S >= 0:
            raise DomainError(f"stabilization_S must be nonnegative, got {self.stabilization_S}")

    @property
    def is_mbe(self) -> bool:
        return self.family.startswith("MBE")


@dataclass(frozen=True)
class EnergyValue:
    total: float
    gradient_part: float
    bulk_part: float


# -- scalar double well ------------------------------------------------------


def bulk_F(phi, variant: str = "quartic"):
    """Double-well density ``(1 - phi^2)^2 / 4``, optionally with quadratic tails.

    The truncated variant is even in ``phi`` and C^1 (in fact C^2) at ``|phi| = 2``.
    """
    phi = np.asarray(phi, dtype=float)
    p2 = phi * phi
    F = 0.25 * (1.0 - p2) * (1.0 - p2)
    if variant == "quartic":
        return F
    if variant != "truncated_quartic":
        raise DomainError(f"unknown potential {variant!r}")
    d = np.abs(phi) - 2.0
    tail = 5.5 * d**2 + 6.0 * d + 2.25
    return np.where(d > 0, tail, F)


def bulk_f(phi, variant: str = "quartic"):
    """Derivative of :func:`bulk_F`."""
    phi = np.asarray(phi, dtype=float)
    f = phi * phi * phi - phi
    if variant == "quartic":
        return f
    if variant != "truncated_quartic":
        raise DomainError(f"unknown potential {variant!r}")
    d = np.abs(phi) - 2.0
    tail = np.sign(phi) * (11.0 * d + 6.0)
    return np.where(d > 0, tail, f)


def convex_split_f(phi, variant: str = "quartic"):
    """Split ``f = f_i - f_e`` with ``f_i = phi^3`` (implicit) and ``f_e = phi``."""
    if variant != "quartic":
        raise UnsupportedSplit(f"convex splitting is only defined for the quartic potential, not {variant!r}")
    phi = np.asarray(phi, dtype=float)
    return phi**3, phi


# -- MBE vector forces -------------------------------------------------------


def mbe_force(gradx: np.ndarray, grady: np.ndarray, family: str):
    """Pointwise ``f(grad phi)`` for the slope / no-slope MBE models."""
    v2 = gradx**2 + grady**2
    if family == "MBE_slope":
        m = v2 - 1.0
    elif family == "MBE_noslope":
        m = -1.0 / (1.0 + v2)
    else:
        raise DomainError(f"not an MBE family: {family!r}")
    return m * gradx, m * grady


def mbe_bulk_F(gradx: np.ndarray, grady: np.ndarray, family: str) -> np.ndarray:
    v2 = gradx**2 + grady**2
    if family == "MBE_slope":
        return 0.25 * (v2 - 1.0) ** 2
    if family == "MBE_noslope":
        return -0.5 * np.log1p(v2)
    raise DomainError(f"not an MBE family: {family!r}")


def noslope_radial_derivative(v):
    """d/dv of the scalar no-slope force profile ``-v/(1+v^2)``: ``(v^2-1)/(1+v^2)^2``."""
    v = np.asarray(v, dtype=float)
    return (v**2 - 1.0) / (1.0 + v**2) ** 2


# -- stability constants -----------------------------------------------------


def lipschitz_bound(spec: ModelSpec) -> float:
    """``L = max f'`` for the model's nonlinearity; ``inf`` when unbounded."""
    if spec.family == "MBE_noslope":
        return NOSLOPE_L
    if spec.family == "MBE_slope":
        return math.inf
    return TRUNCATED_L if spec.potential == "truncated_quartic" else math.inf


def critical_stabilization(spec: ModelSpec) -> float:
    """Smallest ``S`` for which the stabilized scheme is provably energy stable."""
    return spec.gamma * lipschitz_bound(spec) / (2.0 * spec.epsilon)


# -- energy ------------------------------------------------------------------


def energy(grid: Grid, phi: np.ndarray, spec: ModelSpec) -> EnergyValue:
    """Discrete free energy.

    Derivative terms are Parseval sums over the spectrum (so they match the
    operators the steppers invert); bulk terms are grid means times area.
    AC and CH share ``eps/2 |grad phi|^2 + F(phi)/eps``; the MBE models use
    ``eps/2 |Lap phi|^2 + F(grad phi)/eps``.
    """
    eps = spec.epsilon
    Phi = spectral.forward_transform(grid, phi)
    if spec.is_mbe:
        grad = 0.5 * eps * grid.area * spectral.spectral_mean_square(grid, Phi, grid.k2)
        gx = spectral.inverse_transform(grid, grid.ikx * Phi)
        gy = spectral.inverse_transform(grid, grid.iky * Phi)
        bulk = grid.area * float(np.mean(mbe_bulk_F(gx, gy, spec.family))) / eps
    else:
        grad = 0.5 * eps * grid.area * spectral.spectral_mean_square(grid, Phi, np.sqrt(grid.k2))
        bulk = grid.area * float(np.mean(bulk_F(phi, spec.potential))) / eps
    return EnergyValue(grad + bulk, grad, bulk)


def stability_warnings(spec: ModelSpec) -> list[str]:
    """Messages for stabilized runs whose ``S`` is below the provable threshold."""
    if spec.splitting != "stabilized":
        return []
    s_star = critical_stabilization(spec)
    if spec.stabilization_S >= s_star:
        return []
    if math.isinf(s_star):
        return [f"{spec.family} with {spec.potential} potential has unbounded f'; "
                f"S={spec.stabilization_S} gives no energy-stability guarantee"]
    return [f"S={spec.stabilization_S} is below S*={s_star:.6g}; energy stability is not guaranteed"]
