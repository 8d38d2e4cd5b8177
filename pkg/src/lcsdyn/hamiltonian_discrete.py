"""Hamiltonian-side discrete dynamics.

Momenta come in two coordinate systems: local momenta r matching each chart's
own symplectic coordinates, and global momenta p = exp(sigma(q)) r.  The
two-point Legendre data of a discrete Lagrangian Ld on a chart with factor
sigma and phi = D sigma are

    p+ (q0, q1) = d2 Ld(q0, q1),
    p- (q0, q1) = phi(q0) Ld(q0, q1) - d1 Ld(q0, q1),
    r+- = exp(-sigma(q0)) p+-.

Along a conformal trajectory the single-point momenta are

    p_k = exp(sigma(q_k) - sigma(q_{k-1})) p+(q_{k-1}, q_k) = p-(q_k, q_{k+1}),
    r_k = exp(-sigma(q_k)) p_k,

and the agreement of the two p_k expressions is precisely the conformal
three-point recursion.

The right discrete Hamiltonian eliminates q1 from

    H+(q0, P) = exp(sigma(q0) - sigma(q1)) P . q1 - Ld(q0, q1),
    where  P = exp(sigma(q1) - sigma(q0)) d2 Ld(q0, q1)

(Newton inversion), and the left one eliminates q0 from

    H-(q1, P) = exp(sigma(q1) - sigma(q0)) (-P . q0 - Ld(q0, q1)),
    where  P = phi(q0) Ld(q0, q1) - d1 Ld(q0, q1).

Their ``d1``/``d2`` are true partials of the eliminated two-argument functions
(implicit-function differentiation; exact when sigma is constant).  The plain
steppers ``rd_step``/``ld_step`` use these partials directly.  The conformal
steppers solve the generating relations of the Hamiltonian's underlying
Lagrangian: that coupled system is what the conformal Hamilton equations
assert once the eliminated argument is held fixed under differentiation, and
it is exactly conjugate to the conformal Lagrangian recursion, so the
Lagrangian and Hamiltonian marches commute through the Legendre transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .atlas import Chart, ConformalAtlas, transition_apply
from .discretize import DiscreteLagrangian
from .errors import (ConsistencyError, IntegrationError, NewtonError,
                     RegularityError)
from .numerics import StepperConfig, newton_solve
from .trajectory import DiscreteTrajectory, StepRecord, TrajectoryPoint

Vector = np.ndarray

_INVERT_CFG = StepperConfig(tol=1e-13, max_iter=60)


def _arr(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MomentumPair:
    """Local and global momenta anchored at a lattice point; r = exp(-sigma(q)) p."""

    r: np.ndarray
    p: np.ndarray
    chart: int
    q: np.ndarray

    def relation_defect(self, atlas: ConformalAtlas) -> float:
        """Max componentwise violation of r = exp(-sigma(q)) p."""
        sigma = float(atlas.chart(self.chart).sigma(self.q))
        return float(np.max(np.abs(self.r - np.exp(-sigma) * self.p)))


class LegendreMomenta(NamedTuple):
    r_plus: np.ndarray
    r_minus: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray


def discrete_legendre(Ld: DiscreteLagrangian, atlas: ConformalAtlas, chart: int,
                      q0: Vector, q1: Vector) -> LegendreMomenta:
    """Right/left momenta of the two-point Legendre transform at (q0, q1)."""
    q0, q1 = _arr(q0), _arr(q1)
    ch = atlas.require_inside(chart, q0)
    atlas.require_inside(chart, q1)
    sigma0 = float(ch.sigma(q0))
    p_plus = _arr(Ld.d2(q0, q1))
    p_minus = ch.grad(q0) * float(Ld.value(q0, q1)) - _arr(Ld.d1(q0, q1))
    scale = np.exp(-sigma0)
    return LegendreMomenta(r_plus=scale * p_plus, r_minus=scale * p_minus,
                           p_plus=p_plus, p_minus=p_minus)


def _pair_momentum_forward(Ld, ch: Chart, qa: Vector, qb: Vector, conformal: bool
                           ) -> np.ndarray:
    """p-(qa, qb): the global momentum anchored at qa."""
    if not conformal:
        return -_arr(Ld.d1(qa, qb))
    return ch.grad(qa) * float(Ld.value(qa, qb)) - _arr(Ld.d1(qa, qb))


def _pair_momentum_backward(Ld, ch: Chart, qa: Vector, qb: Vector, conformal: bool
                            ) -> np.ndarray:
    """exp(sigma(qb) - sigma(qa)) p+(qa, qb): the global momentum anchored at qb."""
    p_plus = _arr(Ld.d2(qa, qb))
    if not conformal:
        return p_plus
    return np.exp(float(ch.sigma(qb)) - float(ch.sigma(qa))) * p_plus


def momenta_along_trajectory(Ld: DiscreteLagrangian, atlas: ConformalAtlas,
                             traj: DiscreteTrajectory, tol: float = 1e-8,
                             conformal: bool = True) -> DiscreteTrajectory:
    """Fill per-point momenta (r, p) of a conformal-recursion trajectory in place.

    At interior points the forward and backward expressions for p_k must agree
    to ``tol`` (their difference is the step residual); a larger disagreement
    raises :class:`ConsistencyError` naming the lattice index.  Endpoints use
    the single available expression.
    """
    pts = traj.points
    if len(pts) < 2:
        raise ValueError("momenta need at least two lattice points")
    last = len(pts) - 1
    for k, pt in enumerate(pts):
        ch = atlas.chart(pt.chart)
        p_fwd = p_bwd = None
        if k < last:
            nxt = pts[k + 1]
            qb = nxt.q if nxt.chart == pt.chart else _transport_point(
                atlas, nxt.q, nxt.chart, pt.chart)
            p_fwd = _pair_momentum_forward(Ld, ch, pt.q, qb, conformal)
        if k > 0:
            prv = pts[k - 1]
            cha = atlas.chart(prv.chart)
            qk_in_a = pt.q if pt.chart == prv.chart else _transport_point(
                atlas, pt.q, pt.chart, prv.chart)
            p_bwd = _pair_momentum_backward(Ld, cha, prv.q, qk_in_a, conformal)
            if pt.chart != prv.chart:
                _, p_bwd = transition_apply(atlas, prv.chart, pt.chart,
                                            qk_in_a, p_bwd, "p")
        if p_fwd is not None and p_bwd is not None:
            gap = float(np.max(np.abs(p_fwd - p_bwd)))
            if gap > tol:
                raise ConsistencyError(
                    f"momentum expressions disagree by {gap:.3e} (tol {tol:.1e}) "
                    f"at lattice point {k}", index=k)
        p = p_fwd if p_fwd is not None else p_bwd
        r = np.exp(-float(ch.sigma(pt.q))) * p if conformal else p.copy()
        pt.p, pt.r = p, r
    return traj


def _transport_point(atlas: ConformalAtlas, q: Vector, from_chart: int,
                     to_chart: int) -> np.ndarray:
    t = atlas.find_transition(from_chart, to_chart, q)
    if t is None:
        raise ConsistencyError(
            f"no transition carries {q} from chart {from_chart} to {to_chart}",
            index=-1)
    return _arr(t.forward(q))


@dataclass(frozen=True)
class LagrangianSource:
    """The generating data behind a Lagrangian-derived discrete Hamiltonian."""

    Ld: DiscreteLagrangian
    atlas: ConformalAtlas
    chart: int

    def invert_right(self, q0: Vector, P: Vector, seed: Vector | None = None,
                     cfg: StepperConfig = _INVERT_CFG) -> np.ndarray:
        """q1 solving P = exp(sigma(q1) - sigma(q0)) d2 Ld(q0, q1)."""
        ch = self.atlas.chart(self.chart)
        s0 = float(ch.sigma(q0))

        def g(x):
            return np.exp(float(ch.sigma(x)) - s0) * _arr(self.Ld.d2(q0, x)) - P

        x0 = seed if seed is not None else q0 + self.Ld.h * P
        return newton_solve(g, x0, cfg).x

    def invert_left(self, q1: Vector, P: Vector, seed: Vector | None = None,
                    cfg: StepperConfig = _INVERT_CFG) -> np.ndarray:
        """q0 solving P = phi(q0) Ld(q0, q1) - d1 Ld(q0, q1)."""
        ch = self.atlas.chart(self.chart)

        def g(x):
            return ch.grad(x) * float(self.Ld.value(x, q1)) \
                - _arr(self.Ld.d1(x, q1)) - P

        x0 = seed if seed is not None else q1 - self.Ld.h * P
        return newton_solve(g, x0, cfg).x


@dataclass(frozen=True)
class DiscreteHamiltonian:
    """One-step generating Hamiltonian; right side takes (q_k, p_{k+1}), left (q_{k+1}, p_k).

    ``d1``/``d2`` are partials of ``value`` with respect to its two arguments
    (finite-difference consistent).  ``source`` carries the generating
    Lagrangian data when ``provenance == "from_lagrangian"``; the conformal
    steppers require it.
    """

    n: int
    h: float
    side: str
    value: Callable[[Vector, Vector], float]
    d1: Callable[[Vector, Vector], Vector]
    d2: Callable[[Vector, Vector], Vector]
    provenance: str = "analytic"
    source: LagrangianSource | None = None

    def __post_init__(self):
        if self.side not in ("right", "left"):
            raise ValueError(f"side must be 'right' or 'left', got {self.side!r}")
        if self.provenance not in ("analytic", "from_lagrangian"):
            raise ValueError(f"unknown provenance {self.provenance!r}")


def _fd_d2_in_second(Ld: DiscreteLagrangian, q0: Vector, q1: Vector,
                     eps: float = 1e-6) -> np.ndarray:
    """d/dq1 of d2 Ld (the second-slot Hessian), by central differences."""
    cols = []
    for j in range(q1.size):
        xp, xm = q1.copy(), q1.copy()
        xp[j] += eps
        xm[j] -= eps
        cols.append((_arr(Ld.d2(q0, xp)) - _arr(Ld.d2(q0, xm))) / (2 * eps))
    return np.column_stack(cols)


def build_right_hamiltonian(Ld: DiscreteLagrangian, atlas: ConformalAtlas,
                            chart: int, cfg: StepperConfig = _INVERT_CFG
                            ) -> DiscreteHamiltonian:
    """Right discrete Hamiltonian H+(q_k, p_{k+1}) generated by Ld on a chart.

    The value Newton-inverts the forward momentum relation for q_{k+1}; the
    partials come from implicit-function differentiation, reducing to
    d1 = -d1 Ld and d2 = q_{k+1} when sigma is constant.
    """
    ch = atlas.chart(chart)
    source = LagrangianSource(Ld=Ld, atlas=atlas, chart=chart)

    def _core(q0: Vector, P: Vector):
        q0, P = _arr(q0), _arr(P)
        q1 = source.invert_right(q0, P, cfg=cfg)
        em = np.exp(float(ch.sigma(q0)) - float(ch.sigma(q1)))
        return q0, P, q1, em

    def value(q0, P):
        q0, P, q1, em = _core(q0, P)
        return em * float(P @ q1) - float(Ld.value(q0, q1))

    def d1(q0, P):
        q0, P, q1, em = _core(q0, P)
        phi0, phi1 = ch.grad(q0), ch.grad(q1)
        coupling = em * float(P @ q1)
        base = phi0 * coupling - _arr(Ld.d1(q0, q1))
        corr = -phi1 * coupling
        if not np.any(corr):
            return base
        d2v = _arr(Ld.d2(q0, q1))
        J_star = (1.0 / em) * (np.outer(d2v, phi1) + _fd_d2_in_second(Ld, q0, q1))
        dgdq = (1.0 / em) * (np.atleast_2d(Ld.d1d2(q0, q1)).T - np.outer(d2v, phi0))
        dq1_dq0 = -np.linalg.solve(np.atleast_2d(J_star), dgdq)
        return base + np.atleast_2d(dq1_dq0).T @ corr

    def d2(q0, P):
        q0, P, q1, em = _core(q0, P)
        phi1 = ch.grad(q1)
        base = em * q1
        corr = -phi1 * em * float(P @ q1)
        if not np.any(corr):
            return base
        d2v = _arr(Ld.d2(q0, q1))
        J_star = (1.0 / em) * (np.outer(d2v, phi1) + _fd_d2_in_second(Ld, q0, q1))
        dq1_dP = np.linalg.inv(np.atleast_2d(J_star))
        return base + dq1_dP.T @ corr

    return DiscreteHamiltonian(n=Ld.n, h=Ld.h, side="right", value=value,
                               d1=d1, d2=d2, provenance="from_lagrangian",
                               source=source)


def build_left_hamiltonian(Ld: DiscreteLagrangian, atlas: ConformalAtlas,
                           chart: int, cfg: StepperConfig = _INVERT_CFG
                           ) -> DiscreteHamiltonian:
    """Left discrete Hamiltonian H-(q_{k+1}, p_k); mirror of the right builder."""
    ch = atlas.chart(chart)
    source = LagrangianSource(Ld=Ld, atlas=atlas, chart=chart)

    def _core(q1: Vector, P: Vector):
        q1, P = _arr(q1), _arr(P)
        q0 = source.invert_left(q1, P, cfg=cfg)
        E = np.exp(float(ch.sigma(q1)) - float(ch.sigma(q0)))
        return q1, P, q0, E

    def value(q1, P):
        q1, P, q0, E = _core(q1, P)
        return E * (-float(P @ q0) - float(Ld.value(q0, q1)))

    def _g_jacobian(q0: Vector, q1: Vector, eps: float = 1e-6) -> np.ndarray:
        # d/dq0 of [phi(q0) Ld(q0,q1) - d1 Ld(q0,q1)]; needs the sigma Hessian,
        # so it is differenced.
        cols = []
        for j in range(q0.size):
            xp, xm = q0.copy(), q0.copy()
            xp[j] += eps
            xm[j] -= eps
            gp = ch.grad(xp) * float(Ld.value(xp, q1)) - _arr(Ld.d1(xp, q1))
            gm = ch.grad(xm) * float(Ld.value(xm, q1)) - _arr(Ld.d1(xm, q1))
            cols.append((gp - gm) / (2 * eps))
        return np.column_stack(cols)

    def d1(q1, P):
        q1, P, q0, E = _core(q1, P)
        phi1, phi0 = ch.grad(q1), ch.grad(q0)
        H = E * (-float(P @ q0) - float(Ld.value(q0, q1)))
        base = phi1 * H - E * _arr(Ld.d2(q0, q1))
        corr = phi0 * (E * float(P @ q0))
        if not np.any(corr):
            return base
        dgdq1 = np.outer(phi0, _arr(Ld.d2(q0, q1))) - np.atleast_2d(Ld.d1d2(q0, q1))
        dgdq0 = _g_jacobian(q0, q1)
        dq0_dq1 = -np.linalg.solve(dgdq0, dgdq1)
        return base + np.atleast_2d(dq0_dq1).T @ corr

    def d2(q1, P):
        q1, P, q0, E = _core(q1, P)
        phi0 = ch.grad(q0)
        base = -E * q0
        corr = phi0 * (E * float(P @ q0))
        if not np.any(corr):
            return base
        dq0_dP = np.linalg.inv(np.atleast_2d(_g_jacobian(q0, q1)))
        return base + dq0_dP.T @ corr

    return DiscreteHamiltonian(n=Ld.n, h=Ld.h, side="left", value=value,
                               d1=d1, d2=d2, provenance="from_lagrangian",
                               source=source)


def _rd_core(Hd: DiscreteHamiltonian, q_curr: Vector, p_curr: Vector,
             cfg: StepperConfig):
    def F(P):
        return _arr(Hd.d1(q_curr, P)) - p_curr

    res = newton_solve(F, p_curr, cfg)
    return _arr(Hd.d2(q_curr, res.x)), res.x, res


def rd_step(Hd: DiscreteHamiltonian, q_curr: Vector, p_curr: Vector,
            cfg: StepperConfig) -> tuple[np.ndarray, np.ndarray]:
    """Plain right step: solve p_k = d1 H+(q_k, p_{k+1}), then q_{k+1} = d2 H+."""
    if Hd.side != "right":
        raise ValueError("rd_step needs a right-side discrete Hamiltonian")
    q_next, p_next, _ = _rd_core(Hd, _arr(q_curr), _arr(p_curr), cfg)
    return q_next, p_next


def _ld_core(Hd: DiscreteHamiltonian, q_curr: Vector, p_curr: Vector,
             cfg: StepperConfig):
    def F(x):
        return _arr(Hd.d2(x, p_curr)) + q_curr

    res = newton_solve(F, q_curr + Hd.h * p_curr, cfg)
    return res.x, -_arr(Hd.d1(res.x, p_curr)), res


def ld_step(Hd: DiscreteHamiltonian, q_curr: Vector, p_curr: Vector,
            cfg: StepperConfig) -> tuple[np.ndarray, np.ndarray]:
    """Plain left step: solve q_k = -d2 H-(q_{k+1}, p_k), then p_{k+1} = -d1 H-."""
    if Hd.side != "left":
        raise ValueError("ld_step needs a left-side discrete Hamiltonian")
    q_next, p_next, _ = _ld_core(Hd, _arr(q_curr), _arr(p_curr), cfg)
    return q_next, p_next


def _conformal_pair_step(Hd: DiscreteHamiltonian, atlas: ConformalAtlas,
                         chart: int, q_curr: Vector, p_curr: Vector,
                         cfg: StepperConfig):
    """Coupled 2n Newton solve of the conformal generating relations.

    Unknowns (q_next, p_next) satisfy

        p_curr = phi(q_curr) Ld(q_curr, q_next) - d1 Ld(q_curr, q_next),
        p_next = exp(sigma(q_next) - sigma(q_curr)) d2 Ld(q_curr, q_next).

    The Jacobian is finite-differenced; q_next sits inside the exponential of
    the second relation, which is why the system is solved simultaneously.
    """
    if Hd.source is None:
        raise ValueError(
            "conformal stepping needs a Lagrangian-generated discrete Hamiltonian "
            "(build one with build_right_hamiltonian/build_left_hamiltonian)")
    if Hd.source.chart != chart:
        raise ValueError(f"discrete Hamiltonian was built on chart "
                         f"{Hd.source.chart}, stepped on chart {chart}")
    Ld = Hd.source.Ld
    ch = atlas.require_inside(chart, q_curr)
    q_curr, p_curr = _arr(q_curr), _arr(p_curr)
    n = Hd.n
    s_curr = float(ch.sigma(q_curr))
    phi_curr = ch.grad(q_curr)

    def F(z):
        qn, pn = z[:n], z[n:]
        r1 = p_curr - (phi_curr * float(Ld.value(q_curr, qn)) - _arr(Ld.d1(q_curr, qn)))
        r2 = pn - np.exp(float(ch.sigma(qn)) - s_curr) * _arr(Ld.d2(q_curr, qn))
        return np.concatenate([r1, r2])

    z0 = np.concatenate([q_curr + Hd.h * p_curr, p_curr])
    res = newton_solve(F, z0, cfg)
    return res.x[:n], res.x[n:], res


def rdlch_step(Hd: DiscreteHamiltonian, atlas: ConformalAtlas, chart: int,
               q_curr: Vector, p_curr: Vector, cfg: StepperConfig
               ) -> tuple[np.ndarray, np.ndarray]:
    """Conformal right step in global momenta; reduces to rd_step for constant sigma.

    The right and left conformal systems generate the same two-point map (as in
    the plain case); this entry point validates the right-side Hamiltonian.
    """
    if Hd.side != "right":
        raise ValueError("rdlch_step needs a right-side discrete Hamiltonian")
    q_next, p_next, _ = _conformal_pair_step(Hd, atlas, chart, q_curr, p_curr, cfg)
    return q_next, p_next


def ldlch_step(Hd: DiscreteHamiltonian, atlas: ConformalAtlas, chart: int,
               q_curr: Vector, p_curr: Vector, cfg: StepperConfig
               ) -> tuple[np.ndarray, np.ndarray]:
    """Conformal left step in global momenta; reduces to ld_step for constant sigma."""
    if Hd.side != "left":
        raise ValueError("ldlch_step needs a left-side discrete Hamiltonian")
    q_next, p_next, _ = _conformal_pair_step(Hd, atlas, chart, q_curr, p_curr, cfg)
    return q_next, p_next


def integrate_hamiltonian(Hd: DiscreteHamiltonian, atlas: ConformalAtlas,
                          chart: int, q0: Vector, p0: Vector, N: int,
                          cfg: StepperConfig, conformal: bool = True
                          ) -> DiscreteTrajectory:
    """March N steps of the (plain or conformal) Hamiltonian recursion on one chart.

    Fills p and r at every point.  For Lagrangian-generated Hamiltonians the
    sign of det d1d2 along consecutive pairs is monitored; a flip means the
    momentum inversion jumped to a different branch and the march aborts with
    the partial trajectory.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    q, p = _arr(q0), _arr(p0)
    ch = atlas.require_inside(chart, q)
    traj = DiscreteTrajectory(h=Hd.h)

    def push(k, q, p):
        r = np.exp(-float(ch.sigma(q))) * p if conformal else p.copy()
        traj.points.append(TrajectoryPoint(k=k, chart=chart, q=q, p=p, r=r))

    push(0, q, p)
    branch_sign = None
    for k in range(N):
        try:
            if conformal:
                q_next, p_next, res = _conformal_pair_step(Hd, atlas, chart, q, p, cfg)
            elif Hd.side == "right":
                q_next, p_next, res = _rd_core(Hd, q, p, cfg)
            else:
                q_next, p_next, res = _ld_core(Hd, q, p, cfg)
        except (NewtonError, RegularityError) as e:
            raise IntegrationError(f"Hamiltonian step to point {k + 1} failed: {e}",
                                   partial=traj, index=k + 1) from e
        if Hd.source is not None:
            sign = float(np.sign(np.linalg.det(
                np.atleast_2d(Hd.source.Ld.d1d2(q, q_next)))))
            if branch_sign is not None and sign != 0 and sign != branch_sign:
                raise IntegrationError(
                    f"discrete Legendre branch jump at step {k + 1}",
                    partial=traj, index=k + 1)
            branch_sign = sign if sign != 0 else branch_sign
        if not ch.contains(q_next):
            raise IntegrationError(
                f"point {k + 1} left chart {chart}; Hamiltonian marching is "
                f"single-chart", partial=traj, index=k + 1)
        push(k + 1, q_next, p_next)
        traj.steps.append(StepRecord(k=k + 1, iterations=res.iterations,
                                     residual=res.residual))
        q, p = q_next, p_next
    return traj
