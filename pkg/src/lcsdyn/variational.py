"""Lagrangian-side discrete dynamics.

The plain three-point recursion is

    d2 Ld(q_prev, q_curr) + d1 Ld(q_curr, q_next) = 0,

and its conformal generalization, with per-chart factor sigma and
phi = D sigma, reads

    exp(sigma(q_curr) - sigma(q_prev)) d2 Ld(q_prev, q_curr)
        = phi(q_curr) Ld(q_curr, q_next) - d1 Ld(q_curr, q_next).

Both are solved for q_next by damped Newton.  ``integrate`` marches a
trajectory, transporting the active two-point window across chart transitions
whenever a point leaves the core of its chart, and fills momenta afterwards.
The discrete action sum uses the local (conformally rescaled) Lagrangian

    S([q]) = sum_k exp(-sigma(q_k)) Ld(q_k, q_{k+1});

trajectories extremize it with fixed endpoints, which ``stationarity_residual``
verifies by finite differences.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .atlas import Chart, ConformalAtlas
from .discretize import DiscreteLagrangian
from .errors import DomainError, IntegrationError, NewtonError, RegularityError
from .numerics import StepperConfig, newton_solve
from .trajectory import DiscreteTrajectory, StepRecord, TrajectoryPoint

Vector = np.ndarray

DEFAULT_SWITCH_MARGIN = 0.1


def _arr(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _del_system(Ld: DiscreteLagrangian, q_prev: Vector, q_curr: Vector
                ) -> tuple[Callable, Callable]:
    lhs = _arr(Ld.d2(q_prev, q_curr))

    def F(x):
        return lhs + _arr(Ld.d1(q_curr, x))

    def J(x):
        return np.atleast_2d(Ld.d1d2(q_curr, x))

    return F, J


def _dlcel_system(Ld: DiscreteLagrangian, chart: Chart, q_prev: Vector,
                  q_curr: Vector) -> tuple[Callable, Callable]:
    scale = np.exp(float(chart.sigma(q_curr)) - float(chart.sigma(q_prev)))
    lhs = scale * _arr(Ld.d2(q_prev, q_curr))
    phi = chart.grad(q_curr)

    def F(x):
        return lhs - (phi * Ld.value(q_curr, x) - _arr(Ld.d1(q_curr, x)))

    def J(x):
        return np.atleast_2d(Ld.d1d2(q_curr, x)) - np.outer(phi, _arr(Ld.d2(q_curr, x)))

    return F, J


def del_step(Ld: DiscreteLagrangian, q_prev: Vector, q_curr: Vector,
             cfg: StepperConfig) -> np.ndarray:
    """Advance the plain three-point recursion; Newton seed is 2 q_curr - q_prev."""
    q_prev, q_curr = _arr(q_prev), _arr(q_curr)
    F, J = _del_system(Ld, q_prev, q_curr)
    return newton_solve(F, 2.0 * q_curr - q_prev, cfg, jacobian=J).x


def dlcel_step(Ld: DiscreteLagrangian, atlas: ConformalAtlas, chart: int,
               q_prev: Vector, q_curr: Vector, cfg: StepperConfig) -> np.ndarray:
    """Advance the conformal three-point recursion on a single chart."""
    q_prev, q_curr = _arr(q_prev), _arr(q_curr)
    atlas.require_inside(chart, q_prev)
    ch = atlas.require_inside(chart, q_curr)
    F, J = _dlcel_system(Ld, ch, q_prev, q_curr)
    return newton_solve(F, 2.0 * q_curr - q_prev, cfg, jacobian=J).x


def integrate(Ld: DiscreteLagrangian, atlas: ConformalAtlas, start_chart: int,
              q0: Vector, q1: Vector, N: int, cfg: StepperConfig,
              conformal: bool = True,
              switch_margin: float = DEFAULT_SWITCH_MARGIN) -> DiscreteTrajectory:
    """March N steps from the seed pair (q0, q1) and fill momenta.

    A chart switch is triggered when a new point leaves the current chart's
    core (the domain shrunk by ``switch_margin`` of its width on each side);
    the active pair is transported jointly so each step is posed in a single
    chart.  With ``conformal=False`` the plain recursion is used and sigma is
    ignored throughout (including momenta).
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    q0, q1 = _arr(q0), _arr(q1)
    atlas.require_inside(start_chart, q0)
    atlas.require_inside(start_chart, q1)
    traj = DiscreteTrajectory(h=Ld.h)
    traj.points.append(TrajectoryPoint(k=0, chart=start_chart, q=q0))
    traj.points.append(TrajectoryPoint(k=1, chart=start_chart, q=q1))

    chart_id = start_chart
    q_prev, q_curr = q0, q1
    for k in range(1, N):
        ch = atlas.chart(chart_id)
        if conformal:
            F, J = _dlcel_system(Ld, ch, q_prev, q_curr)
        else:
            F, J = _del_system(Ld, q_prev, q_curr)
        try:
            res = newton_solve(F, 2.0 * q_curr - q_prev, cfg, jacobian=J)
        except (NewtonError, RegularityError) as e:
            raise IntegrationError(f"step to lattice point {k + 1} failed: {e}",
                                   partial=traj, index=k + 1) from e
        q_next = res.x
        switched = False
        if not ch.contains(q_next, margin=switch_margin):
            t = _find_switch(atlas, chart_id, q_curr, q_next, switch_margin)
            if t is not None:
                q_curr = _arr(t.forward(q_curr))
                q_next = _arr(t.forward(q_next))
                chart_id = t.to_chart
                switched = True
            elif not ch.contains(q_next):
                raise IntegrationError(
                    f"lattice point {k + 1} left chart {chart_id} with no usable "
                    f"transition", partial=traj, index=k + 1)
        traj.points.append(TrajectoryPoint(k=k + 1, chart=chart_id, q=q_next))
        traj.steps.append(StepRecord(k=k + 1, iterations=res.iterations,
                                     residual=res.residual, switched=switched))
        q_prev, q_curr = q_curr, q_next

    from .hamiltonian_discrete import momenta_along_trajectory
    momenta_along_trajectory(Ld, atlas, traj, tol=max(10.0 * cfg.tol, 1e-13),
                             conformal=conformal)
    return traj


def _find_switch(atlas: ConformalAtlas, chart_id: int, q_curr: Vector,
                 q_next: Vector, margin: float):
    """A transition carrying both active points into a chart whose core holds q_next."""
    for t in atlas.transitions:
        if t.from_chart != chart_id or not (t.contains(q_next) and t.contains(q_curr)):
            continue
        if atlas.chart(t.to_chart).contains(_arr(t.forward(q_next)), margin=margin):
            return t
    return None


def _normalize_charts(chart_assignment, length: int) -> list[int]:
    if isinstance(chart_assignment, (int, np.integer)):
        return [int(chart_assignment)] * length
    charts = [int(c) for c in chart_assignment]
    if len(charts) != length:
        raise ValueError(f"chart assignment has length {len(charts)}, "
                         f"expected {length}")
    return charts


def _into_chart(atlas: ConformalAtlas, q: Vector, from_chart: int, to_chart: int
                ) -> np.ndarray:
    if from_chart == to_chart:
        return q
    t = atlas.find_transition(from_chart, to_chart, q)
    if t is None:
        raise DomainError(f"no transition carries {q} from chart {from_chart} "
                          f"to chart {to_chart}")
    return _arr(t.forward(q))


def action_sum(Ld: DiscreteLagrangian, atlas: ConformalAtlas, chart_assignment,
               qs: Sequence[Vector]) -> float:
    """Discrete action sum of the local Lagrangian, sum_k e^{-sigma(q_k)} Ld(q_k, q_{k+1})."""
    qs = [_arr(q) for q in qs]
    if len(qs) < 2:
        raise ValueError("action sum needs at least two lattice points")
    charts = _normalize_charts(chart_assignment, len(qs))
    total = 0.0
    for k in range(len(qs) - 1):
        ck = charts[k]
        qb = _into_chart(atlas, qs[k + 1], charts[k + 1], ck)
        sigma = float(atlas.chart(ck).sigma(qs[k]))
        total += np.exp(-sigma) * float(Ld.value(qs[k], qb))
    return total


def stationarity_residual(Ld: DiscreteLagrangian, atlas: ConformalAtlas,
                          points, chart: int | None = None,
                          eps: float = 1e-6) -> float:
    """Max over interior points of the action-sum gradient magnitude (central FD).

    ``points`` is a :class:`DiscreteTrajectory` or a sequence of lattice points
    with a single ``chart`` id.
    """
    if isinstance(points, DiscreteTrajectory):
        qs = [pt.q for pt in points.points]
        charts = [pt.chart for pt in points.points]
    else:
        if chart is None:
            raise ValueError("a chart id is required for a bare point sequence")
        qs = [_arr(q) for q in points]
        charts = [chart] * len(qs)
    if len(qs) < 3:
        raise ValueError("stationarity needs at least one interior point")

    worst = 0.0
    for k in range(1, len(qs) - 1):
        ca, ck = charts[k - 1], charts[k]
        qa = qs[k - 1]
        qb = _into_chart(atlas, qs[k + 1], charts[k + 1], ck)
        sig_a = float(atlas.chart(ca).sigma(qa))
        cha = atlas.chart(ck)

        def local_action(x):
            x_in_a = _into_chart(atlas, x, ck, ca)
            return (np.exp(-sig_a) * float(Ld.value(qa, x_in_a))
                    + np.exp(-float(cha.sigma(x))) * float(Ld.value(x, qb)))

        for i in range(qs[k].size):
            xp, xm = qs[k].copy(), qs[k].copy()
            xp[i] += eps
            xm[i] -= eps
            worst = max(worst, abs(local_action(xp) - local_action(xm)) / (2 * eps))
    return worst
