"""Charts, conformal factors, transitions, and the pointwise conformal-symplectic data.

A configuration space is covered by box charts, each carrying a scalar conformal
factor sigma(q).  On chart overlaps the conformal factors may only differ by a
constant (the cocycle condition); this is what lets per-chart data glue into
global objects.  The Lee one-form is the gradient of sigma, and the conformal
two-form in Darboux coordinates (q, p) is

    dq^i /\ dp_i + (1/2) A_ij dq^i /\ dq^j,   A_ij = phi_i p_j - phi_j p_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError
from .numerics import fd_gradient

Vector = np.ndarray

COCYCLE_TOL = 1e-10
_FD_SIGMA_EPS = 1e-6


def _as_array(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Chart:
    """A box (or angular-interval) chart with a conformal factor.

    ``sigma_grad`` and ``sigma_hess`` may be omitted; central finite-difference
    fallbacks are used.  ``periodic`` flags angular coordinates (the
    identification itself is handled by transitions).
    """

    id: int
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    sigma: Callable[[Vector], float]
    sigma_grad: Callable[[Vector], Vector] | None = None
    sigma_hess: Callable[[Vector], np.ndarray] | None = None
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lower", _as_array(self.lower))
        object.__setattr__(self, "upper", _as_array(self.upper))
        if self.lower.size != self.dim or self.upper.size != self.dim:
            raise ValueError(f"chart {self.id}: bounds must have length {self.dim}")
        if not np.all(self.lower < self.upper):
            raise ValueError(f"chart {self.id}: empty domain (need lower < upper)")
        if not self.periodic:
            object.__setattr__(self, "periodic", tuple(False for _ in range(self.dim)))

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, q: Vector, margin: float = 0.0) -> bool:
        """True if q lies in the domain shrunk on each side by margin*width."""
        q = _as_array(q)
        pad = margin * self.width
        return bool(np.all(q >= self.lower + pad) and np.all(q <= self.upper - pad))

    def grad(self, q: Vector) -> np.ndarray:
        if self.sigma_grad is not None:
            return _as_array(self.sigma_grad(_as_array(q)))
        return fd_gradient(self.sigma, _as_array(q), _FD_SIGMA_EPS)

    def hess(self, q: Vector) -> np.ndarray:
        if self.sigma_hess is not None:
            return np.atleast_2d(np.asarray(self.sigma_hess(_as_array(q)), dtype=float))
        q = _as_array(q)
        cols = []
        for j in range(self.dim):
            qp, qm = q.copy(), q.copy()
            qp[j] += _FD_SIGMA_EPS
            qm[j] -= _FD_SIGMA_EPS
            cols.append((self.grad(qp) - self.grad(qm)) / (2 * _FD_SIGMA_EPS))
        return np.column_stack(cols)


@dataclass(frozen=True)
class TransitionMap:
    """Coordinate change between two overlapping charts.

    ``overlap_lower/upper`` delimit the overlap box in from-chart coordinates,
    ``forward`` maps from-chart coordinates to to-chart coordinates and
    ``jacobian`` is its derivative matrix.
    """

    from_chart: int
    to_chart: int
    overlap_lower: np.ndarray
    overlap_upper: np.ndarray
    forward: Callable[[Vector], Vector]
    jacobian: Callable[[Vector], np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "overlap_lower", _as_array(self.overlap_lower))
        object.__setattr__(self, "overlap_upper", _as_array(self.overlap_upper))
        if not np.all(self.overlap_lower < self.overlap_upper):
            raise ValueError("transition: empty overlap box")

    def contains(self, q: Vector) -> bool:
        q = _as_array(q)
        return bool(np.all(q >= self.overlap_lower) and np.all(q <= self.overlap_upper))


@dataclass(frozen=True)
class LeeForm:
    """The closed one-form phi with per-chart components phi_i = d sigma / d q^i."""

    atlas: "ConformalAtlas"

    def components(self, chart: int, q: Vector) -> np.ndarray:
        return lee_form(self.atlas, chart, q)


@dataclass(frozen=True)
class ConformalAtlas:
    """An immutable collection of charts plus declared transitions."""

    charts: tuple[Chart, ...]
    transitions: tuple[TransitionMap, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "charts", tuple(self.charts))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        ids = [c.id for c in self.charts]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate chart ids")
        for t in self.transitions:
            if t.from_chart not in ids or t.to_chart not in ids:
                raise ValueError(f"transition references unknown chart "
                                 f"{t.from_chart}->{t.to_chart}")

    @property
    def dim(self) -> int:
        return self.charts[0].dim

    def chart(self, chart_id: int) -> Chart:
        for c in self.charts:
            if c.id == chart_id:
                return c
        raise KeyError(f"unknown chart id {chart_id}")

    def require_inside(self, chart_id: int, q: Vector) -> Chart:
        c = self.chart(chart_id)
        q = _as_array(q)
        for i in range(c.dim):
            if not (c.lower[i] <= q[i] <= c.upper[i]):
                raise DomainError(
                    f"coordinate q[{i}]={q[i]} outside chart {chart_id} domain "
                    f"[{c.lower[i]}, {c.upper[i]}]")
        return c

    def find_transition(self, from_chart: int, to_chart: int | None, q: Vector
                        ) -> TransitionMap | None:
        for t in self.transitions:
            if t.from_chart != from_chart:
                continue
            if to_chart is not None and t.to_chart != to_chart:
                continue
            if t.contains(q):
                return t
        return None

    def lee(self) -> LeeForm:
        return LeeForm(self)


def lee_form(atlas: ConformalAtlas, chart: int, q: Vector) -> np.ndarray:
    """Components phi_i = d sigma / d q^i of the Lee one-form on the given chart."""
    c = atlas.require_inside(chart, q)
    return c.grad(q)


def a_matrix(phi: Vector, p: Vector) -> np.ndarray:
    """Antisymmetric pairing A_ij = phi_i p_j - phi_j p_i of a one-form and a momentum."""
    phi = _as_array(phi)
    p = _as_array(p)
    if phi.size != p.size:
        raise ValueError(f"length mismatch: phi has {phi.size}, p has {p.size}")
    return np.outer(phi, p) - np.outer(p, phi)


def lcs_two_form_matrix(atlas: ConformalAtlas, chart: int, q: Vector, p: Vector
                        ) -> np.ndarray:
    """Matrix of the conformal two-form in the ordered basis (dq^1..dq^n, dp_1..dp_n).

    Block form [[A, I], [-I, 0]]; its determinant is 1 for every A.
    """
    phi = lee_form(atlas, chart, q)
    n = phi.size
    A = a_matrix(phi, p)
    out = np.zeros((2 * n, 2 * n))
    out[:n, :n] = A
    out[:n, n:] = np.eye(n)
    out[n:, :n] = -np.eye(n)
    return out


def transition_apply(atlas: ConformalAtlas, from_chart: int, to_chart: int,
                     q: Vector, momentum: Vector, momentum_kind: str
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Carry a point and a covector across a declared chart transition.

    Covectors transport through the inverse-transpose Jacobian.  Local momenta
    (kind ``"r"``) are additionally rescaled by exp(sigma_from(q) - sigma_to(q'))
    so that the corresponding global momentum p = exp(sigma) r is continuous.
    """
    if momentum_kind not in ("r", "p"):
        raise ValueError(f"momentum_kind must be 'r' or 'p', got {momentum_kind!r}")
    q = _as_array(q)
    t = atlas.find_transition(from_chart, to_chart, q)
    if t is None:
        raise DomainError(
            f"point {q} is not in a declared overlap from chart {from_chart} "
            f"to chart {to_chart}")
    q_new = _as_array(t.forward(q))
    J = np.atleast_2d(np.asarray(t.jacobian(q), dtype=float))
    p_new = np.linalg.solve(J.T, _as_array(momentum))
    if momentum_kind == "r":
        s_from = atlas.chart(from_chart).sigma(q)
        s_to = atlas.chart(to_chart).sigma(q_new)
        p_new = p_new * np.exp(s_from - s_to)
    return q_new, p_new


@dataclass(frozen=True)
class OverlapCocycle:
    from_chart: int
    to_chart: int
    n_samples: int
    mean_offset: float
    deviation: float

    @property
    def passed(self) -> bool:
        return self.deviation <= COCYCLE_TOL


@dataclass(frozen=True)
class CocycleReport:
    entries: tuple[OverlapCocycle, ...] = field(default_factory=tuple)

    @property
    def max_deviation(self) -> float:
        return max((e.deviation for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "overlaps": [
                {"from": e.from_chart, "to": e.to_chart, "samples": e.n_samples,
                 "mean_offset": e.mean_offset, "deviation": e.deviation,
                 "passed": e.passed}
                for e in self.entries
            ],
        }


def cocycle_check(atlas: ConformalAtlas, samples: int = 16, seed: int = 0
                  ) -> CocycleReport:
    """Check that sigma_from - sigma_to(forward(q)) is constant on each overlap.

    Samples at least eight points per overlap and reports the maximum deviation
    from the per-overlap mean; an overlap passes when the deviation is <= 1e-10.
    """
    samples = max(8, samples)
    rng = np.random.default_rng(seed)
    entries = []
    for t in atlas.transitions:
        lo, hi = t.overlap_lower, t.overlap_upper
        pts = lo + (hi - lo) * rng.random((samples - 1, lo.size))
        pts = np.vstack([pts, 0.5 * (lo + hi)])
        s_from = atlas.chart(t.from_chart).sigma
        s_to = atlas.chart(t.to_chart).sigma
        offsets = np.array([s_from(q) - s_to(_as_array(t.forward(q))) for q in pts])
        mean = float(np.mean(offsets))
        entries.append(OverlapCocycle(
            from_chart=t.from_chart, to_chart=t.to_chart, n_samples=samples,
            mean_offset=mean, deviation=float(np.max(np.abs(offsets - mean)))))
    return CocycleReport(entries=tuple(entries))
