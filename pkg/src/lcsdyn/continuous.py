"""Continuous reference dynamics on a conformal atlas.

Two equivalent formulations are provided.  On the Hamiltonian side, with
phi = d sigma and A_ij = phi_i p_j - phi_j p_i,

    dq^i/dt = dH/dp_i,
    dp_i/dt = -dH/dq^i - A_ij dH/dp_j + H phi_i.

On the Lagrangian side the conformal Euler-Lagrange equations read

    d/dt (dL/dv^i) - dL/dq^i = (phi . v) dL/dv^i - phi_i L,

solved here for the acceleration.  Both collapse to the canonical equations when
sigma is constant.  A fixed-step classical RK4 integrator serves as reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .atlas import ConformalAtlas, a_matrix, lee_form
from .errors import IntegrationError, RegularityError
from .numerics import StepperConfig, newton_solve, solve_linear

Vector = np.ndarray


@dataclass(frozen=True)
class ContinuousLagrangian:
    """A Lagrangian L(q, v) with analytic first and second derivatives.

    ``hess_vq[i, j] = d^2 L / dv_i dq_j`` and ``hess_vv`` must be invertible
    wherever the dynamics are evaluated.  ``hess_qq`` is optional; it is only
    needed to assemble analytic mixed partials of quadrature-rule discrete
    Lagrangians.
    """

    n: int
    value: Callable[[Vector, Vector], float]
    grad_q: Callable[[Vector, Vector], Vector]
    grad_v: Callable[[Vector, Vector], Vector]
    hess_vv: Callable[[Vector, Vector], np.ndarray]
    hess_vq: Callable[[Vector, Vector], np.ndarray]
    hess_qq: Callable[[Vector, Vector], np.ndarray] | None = None


@dataclass(frozen=True)
class ContinuousHamiltonian:
    """A Hamiltonian H(q, p) with analytic gradients."""

    n: int
    value: Callable[[Vector, Vector], float]
    grad_q: Callable[[Vector, Vector], Vector]
    grad_p: Callable[[Vector, Vector], Vector]


@dataclass(frozen=True)
class PhaseState:
    """A point of phase space anchored to a chart."""

    chart: int
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0


def lcs_hamiltonian_field(H: ContinuousHamiltonian, atlas: ConformalAtlas,
                          chart: int, q: Vector, p: Vector
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side (dq/dt, dp/dt) of the conformal Hamilton equations."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    phi = lee_form(atlas, chart, q)
    qdot = np.atleast_1d(np.asarray(H.grad_p(q, p), dtype=float))
    pdot = -np.atleast_1d(np.asarray(H.grad_q(q, p), dtype=float)) \
        - a_matrix(phi, p) @ qdot + H.value(q, p) * phi
    return qdot, pdot


def lcel_acceleration(L: ContinuousLagrangian, atlas: ConformalAtlas,
                      chart: int, q: Vector, v: Vector) -> np.ndarray:
    """Acceleration solving the conformal Euler-Lagrange equations.

    Solves  hess_vv a = grad_q - hess_vq v + (phi.v) grad_v - L phi  by LU with
    partial pivoting; raises :class:`RegularityError` when the velocity Hessian
    has condition number above 1e12.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    phi = lee_form(atlas, chart, q)
    gv = np.atleast_1d(np.asarray(L.grad_v(q, v), dtype=float))
    rhs = np.atleast_1d(np.asarray(L.grad_q(q, v), dtype=float)) \
        - np.atleast_2d(L.hess_vq(q, v)) @ v \
        + float(phi @ v) * gv - L.value(q, v) * phi
    return solve_linear(L.hess_vv(q, v), rhs)


def energy(L: ContinuousLagrangian, atlas: ConformalAtlas, chart: int,
           q: Vector, v: Vector) -> float:
    """Energy v . dL/dv - L.

    The conformal factor plays no role here: rescaling L rescales both terms
    identically, so this is already the globally consistent energy.  The atlas
    and chart arguments are accepted for interface uniformity.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(v @ np.atleast_1d(L.grad_v(q, v))) - float(L.value(q, v))


def fiber_legendre(L: ContinuousLagrangian, q: Vector, v: Vector) -> np.ndarray:
    """Momentum p = dL/dv of the fiber Legendre map."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return np.atleast_1d(np.asarray(L.grad_v(q, v), dtype=float))


def fiber_legendre_inv(L: ContinuousLagrangian, q: Vector, p: Vector,
                       cfg: StepperConfig | None = None) -> np.ndarray:
    """Velocity v solving dL/dv (q, v) = p, by Newton on the fiber."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    cfg = cfg or StepperConfig(tol=1e-12)
    res = newton_solve(lambda v: fiber_legendre(L, q, v) - p, p, cfg,
                       jacobian=lambda v: L.hess_vv(q, v))
    return res.x


def rk4_integrate(field: Callable[[Vector], Vector], x0: Vector, h: float,
                  steps: int) -> np.ndarray:
    """Classical fixed-step 4th-order Runge-Kutta; returns (steps+1, dim) states."""
    if h <= 0:
        raise ValueError("h must be positive")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = np.atleast_1d(np.asarray(x0, dtype=float))
    out = np.empty((steps + 1, x.size))
    out[0] = x
    for k in range(steps):
        k1 = np.asarray(field(x))
        k2 = np.asarray(field(x + 0.5 * h * k1))
        k3 = np.asarray(field(x + 0.5 * h * k2))
        k4 = np.asarray(field(x + h * k3))
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at step {k + 1}",
                                   partial=out[:k + 1], index=k + 1)
        out[k + 1] = x
    return out


def divergence_numeric(field: Callable[[Vector], Vector], x: Vector,
                       eps: float) -> float:
    """Central-difference divergence (sum of diagonal partials) of a vector field."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = 0.0
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += eps
        xm[i] -= eps
        total += (float(np.atleast_1d(field(xp))[i]) -
                  float(np.atleast_1d(field(xm))[i])) / (2.0 * eps)
    return total


def make_lcshe_field(H: ContinuousHamiltonian, atlas: ConformalAtlas, chart: int
                     ) -> Callable[[Vector], np.ndarray]:
    """Flatten the conformal Hamilton equations to a field on x = (q, p).

    The chart is resolved once and the bounds check uses plain floats:
    reference integrations call this closure hundreds of thousands of times.
    """
    n = H.n
    ch = atlas.chart(chart)
    lo = [float(b) for b in ch.lower]
    hi = [float(b) for b in ch.upper]
    grad = ch.grad

    def field(x: Vector) -> np.ndarray:
        q, p = x[:n], x[n:]
        for i in range(n):
            if not lo[i] <= x[i] <= hi[i]:
                atlas.require_inside(chart, q)
        phi = grad(q)
        qdot = np.asarray(H.grad_p(q, p), dtype=float)
        pdot = -np.asarray(H.grad_q(q, p), dtype=float) \
            - (phi * float(p @ qdot) - p * float(phi @ qdot)) \
            + H.value(q, p) * phi
        return np.concatenate([qdot, pdot])

    return field


def make_lcel_field(L: ContinuousLagrangian, atlas: ConformalAtlas, chart: int
                    ) -> Callable[[Vector], np.ndarray]:
    """Flatten the conformal Euler-Lagrange equations to a field on x = (q, v)."""
    n = L.n
    ch = atlas.chart(chart)
    lo = [float(b) for b in ch.lower]
    hi = [float(b) for b in ch.upper]
    grad = ch.grad

    def field(x: Vector) -> np.ndarray:
        q, v = x[:n], x[n:]
        for i in range(n):
            if not lo[i] <= x[i] <= hi[i]:
                atlas.require_inside(chart, q)
        phi = grad(q)
        gv = np.asarray(L.grad_v(q, v), dtype=float)
        rhs = np.asarray(L.grad_q(q, v), dtype=float) - L.hess_vq(q, v) @ v \
            + float(phi @ v) * gv - L.value(q, v) * phi
        M = L.hess_vv(q, v)
        if n == 1:
            if M[0, 0] == 0.0:
                raise RegularityError("singular 1x1 velocity Hessian",
                                      condition=float("inf"))
            acc = rhs / M[0, 0]
        else:
            acc = solve_linear(M, rhs)
        return np.concatenate([v, acc])

    return field
