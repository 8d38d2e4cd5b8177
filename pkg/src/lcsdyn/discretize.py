"""Constructors for two-point (discrete) Lagrangians.

A discrete Lagrangian is a function Ld(q0, q1) approximating the action of one
time step h, together with its first partials d1, d2 and the mixed second
partial d1d2 = d^2 Ld / dq0 dq1.  The stored object is always the *global*
two-point function; consumers multiply by exp(-sigma(q0)) where the per-chart
local version is needed.

``midpoint_rule`` and ``trapezoidal_rule`` carry analytic chain-rule partials
and never consult the conformal factor.  Their conformal companions
``conformal_midpoint_rule`` / ``conformal_trapezoidal_rule`` instead apply the
quadrature rule to the chart-local Lagrangian exp(-sigma) L and re-express the
result globally, e.g.

    Ld(q0, q1) = exp(sigma(q0) - sigma((q0+q1)/2)) h L((q0+q1)/2, (q1-q0)/h).

The distinction matters for accuracy, not algebra: the conformal three-point
recursion weights the action sum with exp(-sigma(q0)), and only a rule whose
local form is a second-order quadrature of the local action keeps the
resulting integrator second order.  When sigma is constant on a chart the
conformal constructors return bitwise the plain rule's values.

``exact_discrete_lagrangian`` evaluates the action integral along the solution
of the continuous conformal Euler-Lagrange equations with prescribed endpoints
(single shooting on the initial velocity, then Gauss-Legendre quadrature);
its partials are finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .atlas import ConformalAtlas
from .continuous import ContinuousLagrangian, make_lcel_field, rk4_integrate
from .errors import (DomainError, IntegrationError, NewtonError,
                     RegularityError, ShootingError)
from .numerics import StepperConfig, fd_gradient, newton_solve

Vector = np.ndarray


@dataclass(frozen=True)
class DiscreteLagrangian:
    """A two-point generating function with first and mixed second partials.

    ``d1d2[i, j] = d^2 Ld / dq0_i dq1_j``; the dynamics are regular where this
    matrix is invertible.
    """

    n: int
    h: float
    value: Callable[[Vector, Vector], float]
    d1: Callable[[Vector, Vector], Vector]
    d2: Callable[[Vector, Vector], Vector]
    d1d2: Callable[[Vector, Vector], np.ndarray]


def _arr(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def midpoint_rule(L: ContinuousLagrangian, h: float) -> DiscreteLagrangian:
    """Ld(q0, q1) = h L((q0+q1)/2, (q1-q0)/h)."""
    if h <= 0:
        raise ValueError("h must be positive")
    n = L.n

    def value(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        return h * float(L.value(0.5 * (q0 + q1), (q1 - q0) / h))

    def d1(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        m, w = 0.5 * (q0 + q1), (q1 - q0) / h
        return 0.5 * h * _arr(L.grad_q(m, w)) - _arr(L.grad_v(m, w))

    def d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        m, w = 0.5 * (q0 + q1), (q1 - q0) / h
        return 0.5 * h * _arr(L.grad_q(m, w)) + _arr(L.grad_v(m, w))

    def d1d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        m, w = 0.5 * (q0 + q1), (q1 - q0) / h
        vq = np.atleast_2d(L.hess_vq(m, w))
        out = 0.5 * (vq.T - vq) - np.atleast_2d(L.hess_vv(m, w)) / h
        if L.hess_qq is not None:
            out = out + 0.25 * h * np.atleast_2d(L.hess_qq(m, w))
        else:
            out = out + 0.25 * h * _fd_qq(L, m, w)
        return out

    return DiscreteLagrangian(n=n, h=h, value=value, d1=d1, d2=d2, d1d2=d1d2)


def trapezoidal_rule(L: ContinuousLagrangian, h: float) -> DiscreteLagrangian:
    """Ld(q0, q1) = (h/2) [L(q0, w) + L(q1, w)] with w = (q1-q0)/h."""
    if h <= 0:
        raise ValueError("h must be positive")
    n = L.n

    def value(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w = (q1 - q0) / h
        return 0.5 * h * (float(L.value(q0, w)) + float(L.value(q1, w)))

    def d1(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w = (q1 - q0) / h
        return 0.5 * h * _arr(L.grad_q(q0, w)) \
            - 0.5 * (_arr(L.grad_v(q0, w)) + _arr(L.grad_v(q1, w)))

    def d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w = (q1 - q0) / h
        return 0.5 * h * _arr(L.grad_q(q1, w)) \
            + 0.5 * (_arr(L.grad_v(q0, w)) + _arr(L.grad_v(q1, w)))

    def d1d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w = (q1 - q0) / h
        vq0 = np.atleast_2d(L.hess_vq(q0, w))
        vq1 = np.atleast_2d(L.hess_vq(q1, w))
        vv = np.atleast_2d(L.hess_vv(q0, w)) + np.atleast_2d(L.hess_vv(q1, w))
        return 0.5 * (vq0.T - vq1) - vv / (2.0 * h)

    return DiscreteLagrangian(n=n, h=h, value=value, d1=d1, d2=d2, d1d2=d1d2)


def _fd_qq(L: ContinuousLagrangian, q: Vector, v: Vector, eps: float = 1e-6
           ) -> np.ndarray:
    cols = []
    for j in range(q.size):
        qp, qm = q.copy(), q.copy()
        qp[j] += eps
        qm[j] -= eps
        cols.append((_arr(L.grad_q(qp, v)) - _arr(L.grad_q(qm, v))) / (2 * eps))
    return np.column_stack(cols)


def conformal_midpoint_rule(L: ContinuousLagrangian, atlas: ConformalAtlas,
                            chart: int, h: float) -> DiscreteLagrangian:
    """Midpoint rule of the chart-local Lagrangian, expressed globally.

    Ld(q0, q1) = exp(sigma(q0) - sigma(m)) h L(m, w) with m the pair midpoint
    and w the divided difference.
    """
    base = midpoint_rule(L, h)
    ch = atlas.chart(chart)

    def _weights(q0, q1):
        mid = 0.5 * (q0 + q1)
        s0, sm = float(ch.sigma(q0)), float(ch.sigma(mid))
        a = ch.grad(q0) - 0.5 * ch.grad(mid)
        b = -0.5 * ch.grad(mid)
        trivial = s0 == sm and not np.any(a) and not np.any(b)
        return mid, np.exp(s0 - sm), a, b, trivial

    def value(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        _, E, _, _, trivial = _weights(q0, q1)
        base_val = base.value(q0, q1)
        return base_val if trivial else E * base_val

    def d1(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        _, E, a, _, trivial = _weights(q0, q1)
        if trivial:
            return base.d1(q0, q1)
        return E * (a * base.value(q0, q1) + base.d1(q0, q1))

    def d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        _, E, _, b, trivial = _weights(q0, q1)
        if trivial:
            return base.d2(q0, q1)
        return E * (b * base.value(q0, q1) + base.d2(q0, q1))

    def d1d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        mid, E, a, b, trivial = _weights(q0, q1)
        if trivial:
            return base.d1d2(q0, q1)
        val = base.value(q0, q1)
        bd1, bd2 = base.d1(q0, q1), base.d2(q0, q1)
        return E * (np.outer(a, b * val + bd2)
                    - 0.25 * val * ch.hess(mid).T
                    + np.outer(bd1, b)
                    + base.d1d2(q0, q1))

    return DiscreteLagrangian(n=L.n, h=h, value=value, d1=d1, d2=d2, d1d2=d1d2)


def conformal_trapezoidal_rule(L: ContinuousLagrangian, atlas: ConformalAtlas,
                               chart: int, h: float) -> DiscreteLagrangian:
    """Trapezoidal rule of the chart-local Lagrangian, expressed globally.

    Ld(q0, q1) = (h/2) [L(q0, w) + exp(sigma(q0) - sigma(q1)) L(q1, w)].
    """
    ch = atlas.chart(chart)
    n = L.n

    def _parts(q0, q1):
        w = (q1 - q0) / h
        s0, s1 = float(ch.sigma(q0)), float(ch.sigma(q1))
        phi0, phi1 = ch.grad(q0), ch.grad(q1)
        trivial = s0 == s1 and not np.any(phi0) and not np.any(phi1)
        return w, np.exp(s0 - s1), phi0, phi1, trivial

    plain = trapezoidal_rule(L, h)

    def value(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w, G, _, _, trivial = _parts(q0, q1)
        if trivial:
            return plain.value(q0, q1)
        return 0.5 * h * (float(L.value(q0, w)) + G * float(L.value(q1, w)))

    def d1(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w, G, phi0, _, trivial = _parts(q0, q1)
        if trivial:
            return plain.d1(q0, q1)
        U = 0.5 * h * float(L.value(q1, w))
        T1 = 0.5 * h * _arr(L.grad_q(q0, w)) - 0.5 * _arr(L.grad_v(q0, w))
        U1 = -0.5 * _arr(L.grad_v(q1, w))
        return T1 + G * (phi0 * U + U1)

    def d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w, G, _, phi1, trivial = _parts(q0, q1)
        if trivial:
            return plain.d2(q0, q1)
        U = 0.5 * h * float(L.value(q1, w))
        T2 = 0.5 * _arr(L.grad_v(q0, w))
        U2 = 0.5 * h * _arr(L.grad_q(q1, w)) + 0.5 * _arr(L.grad_v(q1, w))
        return T2 + G * (-phi1 * U + U2)

    def d1d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        w, G, phi0, phi1, trivial = _parts(q0, q1)
        if trivial:
            return plain.d1d2(q0, q1)
        U = 0.5 * h * float(L.value(q1, w))
        U1 = -0.5 * _arr(L.grad_v(q1, w))
        U2 = 0.5 * h * _arr(L.grad_q(q1, w)) + 0.5 * _arr(L.grad_v(q1, w))
        S = -phi1 * U + U2
        vq0 = np.atleast_2d(L.hess_vq(q0, w))
        vq1 = np.atleast_2d(L.hess_vq(q1, w))
        vv0 = np.atleast_2d(L.hess_vv(q0, w))
        vv1 = np.atleast_2d(L.hess_vv(q1, w))
        dT2 = 0.5 * vq0.T - vv0 / (2.0 * h)
        dU2 = -0.5 * vq1 - vv1 / (2.0 * h)
        dS = -np.outer(U1, phi1) + dU2
        return dT2 + G * (np.outer(phi0, S) + dS)

    return DiscreteLagrangian(n=n, h=h, value=value, d1=d1, d2=d2, d1d2=d1d2)


def exact_discrete_lagrangian(L: ContinuousLagrangian, atlas: ConformalAtlas,
                              chart: int, h: float, quad_order: int = 5,
                              bvp_tol: float = 1e-10, substeps: int = 64
                              ) -> DiscreteLagrangian:
    """The action integral along the boundary-value extremal, as a two-point function.

    For each (q0, q1) a single-shooting Newton iteration finds the initial
    velocity whose conformal Euler-Lagrange trajectory reaches q1 at time h
    (endpoint mismatch below ``bvp_tol``), and the Lagrangian is integrated
    along it with Gauss-Legendre quadrature of the given order.  Partials are
    central finite differences of the value; they are evaluated with a
    tightened shooting tolerance because differencing amplifies solver noise.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    n = L.n
    field = make_lcel_field(L, atlas, chart)
    nodes, weights = np.polynomial.legendre.leggauss(
        _checked_order(quad_order))

    def _shoot(q0: Vector, q1: Vector, tol: float) -> np.ndarray:
        def endpoint(v0):
            states = rk4_integrate(field, np.concatenate([q0, v0]), h / substeps,
                                   substeps)
            return states[-1][:n] - q1

        try:
            res = newton_solve(endpoint, (q1 - q0) / h,
                               StepperConfig(tol=max(tol, 1e-14), max_iter=30,
                                             fd_epsilon=1e-7))
        except NewtonError as e:
            raise ShootingError(
                f"boundary-value shooting failed for endpoints {q0} -> {q1}: {e}",
                residual=e.residual, iterations=e.iterations) from e
        except (IntegrationError, DomainError, RegularityError) as e:
            raise ShootingError(
                f"trajectory evaluation failed while shooting {q0} -> {q1}: {e}",
                residual=float("nan"), iterations=0) from e
        return res.x

    def _value_at(q0: Vector, q1: Vector, tol: float) -> float:
        v0 = _shoot(q0, q1, tol)
        x = np.concatenate([q0, v0])
        t_prev = 0.0
        total = 0.0
        for t_node, w_node in zip(0.5 * h * (nodes + 1.0), weights):
            gap = t_node - t_prev
            if gap > 1e-15:
                m = max(4, int(np.ceil(substeps * gap / h)))
                x = rk4_integrate(field, x, gap / m, m)[-1]
            total += w_node * float(L.value(x[:n], x[n:]))
            t_prev = t_node
        return 0.5 * h * total

    def value(q0, q1):
        return _value_at(_arr(q0), _arr(q1), bvp_tol)

    # Finite-difference steps below are tuned to the value's solver noise floor:
    # first partials at 1e-4, the mixed second partial at 1e-3 with a tightened
    # shooting tolerance.
    eps1, eps2, tight = 1e-4, 1e-3, 1e-12

    def d1(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        return fd_gradient(lambda x: _value_at(x, q1, tight), q0, eps1)

    def d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        return fd_gradient(lambda x: _value_at(q0, x, tight), q1, eps1)

    def d1d2(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                qpp, qpm = q0.copy(), q0.copy()
                qpp[i] += eps2
                qpm[i] -= eps2
                q1p, q1m = q1.copy(), q1.copy()
                q1p[j] += eps2
                q1m[j] -= eps2
                out[i, j] = (_value_at(qpp, q1p, tight) - _value_at(qpp, q1m, tight)
                             - _value_at(qpm, q1p, tight) + _value_at(qpm, q1m, tight)
                             ) / (4.0 * eps2 * eps2)
        return out

    return DiscreteLagrangian(n=n, h=h, value=value, d1=d1, d2=d2, d1d2=d1d2)


def _checked_order(order: int) -> int:
    if not (1 <= order <= 10):
        raise ValueError(f"quadrature order must be in 1..10, got {order}")
    return order
