"""L1 discretization of the Caputo derivative and its positivity machinery.

With uniform step ``tau`` the L1 scheme approximates the Caputo derivative
of order ``alpha`` at ``t_{k+1}`` by

    (1/tau) * sum_{j=0}^{k} b_j (u^{k+1-j} - u^{k-j}),
    b_j = tau^(1-alpha) / Gamma(2-alpha) * ((j+1)^(1-alpha) - j^(1-alpha)).

The ``btilde`` sequence holds the exact cell-averaged kernel integrals for a
piecewise-constant function, which gives the double-integral form
``A_alpha`` in closed form. ``kernel_form_certificate`` checks numerically
that the Toeplitz-plus-diagonal matrix built from ``b`` dominates ``s_n I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, HistoryLengthMismatch


def _check(alpha: float, tau: float, allow_one: bool) -> None:
    hi_ok = alpha <= 1 if allow_one else alpha < 1
    if not (0 < alpha and hi_ok):
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise DomainError(f"alpha must lie in {bound}, got {alpha}")
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")


def b_coeffs(alpha: float, tau: float, n: int) -> np.ndarray:
    """L1 weights ``b_0 .. b_{n-1}``. ``alpha = 1`` gives ``(1, 0, 0, ...)``."""
    _check(alpha, tau, allow_one=True)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if alpha == 1:
        b = np.zeros(n)
        b[0] = 1.0
        return b
    j = np.arange(n + 1, dtype=float)
    p = j ** (1 - alpha)
    return tau ** (1 - alpha) / math.gamma(2 - alpha) * np.diff(p)


def btilde_coeffs(alpha: float, tau: float, n: int) -> np.ndarray:
    """Exact kernel integrals ``btilde_0 .. btilde_{n-1}``.

    ``btilde_k = 1/(tau Gamma(1-alpha)) int_{k tau}^{(k+1)tau} int_0^tau |t-s|^-alpha ds dt``.
    """
    _check(alpha, tau, allow_one=False)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    c = tau ** (1 - alpha) / math.gamma(3 - alpha)
    k = np.arange(n, dtype=float)
    q = 2 - alpha
    bt = c * ((k + 1) ** q - 2 * k**q + np.abs(k - 1) ** q)
    bt[0] = 2 * c
    return bt


def s_lower_bound(alpha: float, tau: float, n: int) -> float:
    """The positive lower bound ``s_n`` on the L1 quadratic form."""
    _check(alpha, tau, allow_one=False)
    return ((n + 1) / 2) ** (-alpha) * tau ** (1 - alpha) / math.gamma(1 - alpha)


@dataclass(frozen=True)
class L1Kernel:
    """Immutable bundle of L1 coefficients for ``n_max`` steps."""

    alpha: float
    tau: float
    n_max: int
    b: np.ndarray = field(init=False, repr=False, compare=False)
    btilde: np.ndarray | None = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        b = b_coeffs(self.alpha, self.tau, self.n_max + 1)
        b.setflags(write=False)
        object.__setattr__(self, "b", b)
        bt = None
        if self.alpha < 1:
            bt = btilde_coeffs(self.alpha, self.tau, self.n_max + 1)
            bt.setflags(write=False)
        object.__setattr__(self, "btilde", bt)

    def s_lower(self, n: int) -> float:
        return s_lower_bound(self.alpha, self.tau, n)


class History:
    """Append-only store of time increments ``phi^{j+1} - phi^j``.

    Storage is a preallocated ``(capacity, nx, ny)`` buffer so the weighted
    sum in :func:`history_convolution` is a single matrix-vector product with
    a fixed reduction order.
    """

    def __init__(self, shape: tuple[int, int], capacity: int):
        self.shape = tuple(shape)
        self.capacity = int(capacity)
        self._buf = np.empty((self.capacity,) + self.shape)
        self.step_count = 0

    @property
    def nbytes(self) -> int:
        return self._buf.nbytes

    def __len__(self) -> int:
        return self.step_count

    def __getitem__(self, j: int) -> np.ndarray:
        if not -self.step_count <= j < self.step_count:
            raise IndexError(j)
        return self._buf[j % self.step_count]

    def append(self, increment: np.ndarray) -> None:
        if increment.shape != self.shape:
            raise ValueError(f"increment shape {increment.shape} != history shape {self.shape}")
        if self.step_count >= self.capacity:
            raise HistoryLengthMismatch(f"history capacity {self.capacity} exhausted")
        self._buf[self.step_count] = increment
        self.step_count += 1

    def stacked(self) -> np.ndarray:
        """Read-only view of the stored increments, oldest first."""
        v = self._buf[: self.step_count]
        v = v.view()
        v.setflags(write=False)
        return v


def history_convolution(h: History, kernel: L1Kernel, k: int, ops=None) -> np.ndarray:
    """Known part of the L1 sum at step ``k``: ``sum_{j=1}^{k} b_j dphi^{k+1-j}``.

    ``dphi^{i+1}`` is ``h[i]``, so weight ``b_j`` multiplies ``h[k-j]``.
    """
    if len(h) != k:
        raise HistoryLengthMismatch(f"history holds {len(h)} increments, expected {k}")
    if k == 0:
        return np.zeros(h.shape)
    if k >= len(kernel.b):
        raise HistoryLengthMismatch(f"kernel built for {kernel.n_max} steps, asked for {k}")
    if ops is not None:
        ops["madd"] += k
    # contiguous weights keep the product on the BLAS path
    w = np.ascontiguousarray(kernel.b[k:0:-1])
    flat = h.stacked().reshape(k, -1)
    return (w @ flat).reshape(h.shape)


def a_alpha_piecewise_constant(u, alpha: float, tau: float) -> float:
    """``A_alpha(u, u)`` for the step function equal to ``u[k]`` on cell ``k``.

    Evaluates ``(tau/2) sum_k sum_j btilde_{|k-j|} u_j u_k``, which is exact.
    """
    u = np.asarray(u, dtype=float)
    n = u.size
    if n == 0:
        return 0.0
    bt = btilde_coeffs(alpha, tau, n)
    # Toeplitz quadratic form via correlation: sum_d btilde_|d| * sum_k u_k u_{k+d}
    corr = np.correlate(u, u, mode="full")[n - 1 :]
    total = bt[0] * corr[0] + 2 * np.dot(bt[1:], corr[1:])
    return 0.5 * tau * float(total)


def kernel_form_matrix(alpha: float, tau: float, n: int) -> np.ndarray:
    """``M_kj = b_|k-j| + b_0 [k == j]``; ``u^T M u`` is the L1 form ``B``."""
    b = b_coeffs(alpha, tau, n)
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return b[idx] + b[0] * np.eye(n)


def kernel_form_certificate(alpha: float, tau: float, n: int) -> tuple[float, float, bool]:
    """Return ``(min_eigenvalue, s_n, certified)`` for the ``n x n`` L1 form."""
    if not 1 <= n <= 2048:
        raise DomainError(f"n must lie in [1, 2048] for a dense eigen-solve, got {n}")
    s_n = s_lower_bound(alpha, tau, n)
    lam = float(np.linalg.eigvalsh(kernel_form_matrix(alpha, tau, n))[0])
    return lam, s_n, lam >= s_n - 1e-12
