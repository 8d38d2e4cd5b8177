"""Shared numerical kernels: damped Newton, finite differences, quadrature, linear solves.

All residual norms are infinity norms and all finite differences are central.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NewtonError, RegularityError

Vector = np.ndarray

_COND_LIMIT_NEWTON = 1e14


@dataclass(frozen=True)
class StepperConfig:
    """Newton tolerances and iteration caps shared by all implicit steppers."""

    tol: float = 1e-10
    max_iter: int = 50
    damping_halvings: int = 6
    fd_epsilon: float = 1e-6

    def __post_init__(self):
        if not (self.tol >= 1e-14):
            raise ValueError(f"tol must be >= 1e-14, got {self.tol}")
        if self.max_iter <= 0:
            raise ValueError("max_iter must be positive")
        if self.damping_halvings < 0:
            raise ValueError("damping_halvings must be nonnegative")
        if self.fd_epsilon <= 0:
            raise ValueError("fd_epsilon must be positive")


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float


def fd_gradient(f: Callable[[Vector], float], x: Vector, eps: float) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += eps
        xm[i] -= eps
        g[i] = (f(xp) - f(xm)) / (2.0 * eps)
    return g


def fd_jacobian(F: Callable[[Vector], Vector], x: Vector, eps: float) -> np.ndarray:
    """Central-difference Jacobian of a vector function (rows: outputs, cols: inputs)."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += eps
        xm[i] -= eps
        cols.append((np.asarray(F(xp), dtype=float) - np.asarray(F(xm), dtype=float)) / (2.0 * eps))
    return np.column_stack(cols)


def newton_solve(
    F: Callable[[Vector], Vector],
    x0: Vector,
    cfg: StepperConfig,
    jacobian: Callable[[Vector], np.ndarray] | None = None,
) -> NewtonResult:
    """Damped Newton iteration for F(x) = 0.

    The step is halved up to ``cfg.damping_halvings`` times whenever the residual
    norm does not decrease; after exhausting the halvings the best candidate is
    accepted and iteration continues.  Raises :class:`NewtonError` when
    ``cfg.max_iter`` is exceeded and :class:`RegularityError` on a Jacobian with
    condition number above 1e14.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    r = np.atleast_1d(np.asarray(F(x), dtype=float))
    if not np.all(np.isfinite(r)):
        raise NewtonError("residual not finite at the initial guess",
                          residual=float("nan"), iterations=0)
    rnorm = float(np.max(np.abs(r)))
    stalls = 0
    for it in range(cfg.max_iter):
        if rnorm <= cfg.tol:
            return NewtonResult(x=x, iterations=it, residual=rnorm)
        J = jacobian(x) if jacobian is not None else fd_jacobian(F, x, cfg.fd_epsilon)
        J = np.atleast_2d(np.asarray(J, dtype=float))
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > _COND_LIMIT_NEWTON:
            raise RegularityError(
                f"singular Jacobian in Newton iteration (cond ~ {cond:.3e})", condition=cond)
        dx = np.linalg.solve(J, -r)
        step = 1.0
        best_x, best_r, best_rnorm = None, None, np.inf
        for _ in range(cfg.damping_halvings + 1):
            x_try = x + step * dx
            r_try = np.atleast_1d(np.asarray(F(x_try), dtype=float))
            rnorm_try = float(np.max(np.abs(r_try))) if np.all(np.isfinite(r_try)) else np.inf
            if rnorm_try < best_rnorm:
                best_x, best_r, best_rnorm = x_try, r_try, rnorm_try
            if rnorm_try < rnorm:
                break
            step *= 0.5
        # Residuals pinned at the rounding floor stall rather than shrink; two
        # stalled iterations in a row end the iteration.
        stalls = stalls + 1 if best_rnorm >= rnorm else 0
        x, r, rnorm = best_x, best_r, best_rnorm
        if stalls >= 2:
            break
    if rnorm <= cfg.tol:
        return NewtonResult(x=x, iterations=cfg.max_iter, residual=rnorm)
    raise NewtonError(
        f"Newton stalled at residual {rnorm:.3e} (tol {cfg.tol:.1e})" if stalls >= 2
        else f"Newton did not converge in {cfg.max_iter} iterations "
             f"(residual {rnorm:.3e})",
        residual=rnorm, iterations=cfg.max_iter)


def gauss_legendre(f: Callable[[float], float], a: float, b: float, order: int) -> float:
    """Gauss-Legendre quadrature of f over [a, b] at the given node count (1..10)."""
    if not (1 <= order <= 10):
        raise ValueError(f"quadrature order must be in 1..10, got {order}")
    if not a < b:
        raise ValueError(f"invalid interval [{a}, {b}]")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(sum(w * f(mid + half * t) for t, w in zip(nodes, weights)))


def solve_linear(A: np.ndarray, b: Vector, cond_limit: float = 1e12) -> np.ndarray:
    """Solve A x = b, raising :class:`RegularityError` when cond(A) exceeds the limit."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape == (1, 1):
        if A[0, 0] == 0.0:
            raise RegularityError("singular 1x1 system", condition=float("inf"))
        return np.atleast_1d(b / A[0, 0])
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > cond_limit:
        raise RegularityError(f"ill-conditioned linear system (cond ~ {cond:.3e})",
                              condition=cond)
    return np.linalg.solve(A, np.asarray(b, dtype=float))
