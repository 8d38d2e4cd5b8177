r"""Two-point Poincare-Cartan forms and the conformal two-form condition.

On the doubled space with coordinates (q0, q1) the one-forms are
theta+ = d2 Ld dq1 and theta- = -d1 Ld dq0; both have the same negative
exterior derivative, the two-form with (q0, q1) block -d1d2 Ld.  Its conformal
companion adds the rank-one coupling phi(q0) (x) d2 Ld.  The conformal
condition  d omega = phi /\ omega  is verified numerically: all independent
three-form components of d omega are finite-differenced and compared against
the combinatorially assembled wedge product.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from .atlas import ConformalAtlas
from .discretize import DiscreteLagrangian

Vector = np.ndarray


def _arr(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class TwoFormField:
    """A two-form on the doubled space, coordinates ordered (q0, q1).

    ``components(q0, q1)`` returns the antisymmetric coefficient matrix in that
    basis.
    """

    dim: int
    components: Callable[[Vector, Vector], np.ndarray]

    def matrix(self, x: Vector) -> np.ndarray:
        x = _arr(x)
        n = self.dim // 2
        return self.components(x[:n], x[n:])


def _block(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    out = np.zeros((2 * n, 2 * n))
    out[:n, n:] = M
    out[n:, :n] = -M.T
    return out


def pc_one_forms(Ld: DiscreteLagrangian, q0: Vector, q1: Vector
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (theta_plus on dq1, theta_minus on dq0) at (q0, q1)."""
    q0, q1 = _arr(q0), _arr(q1)
    return _arr(Ld.d2(q0, q1)), -_arr(Ld.d1(q0, q1))


def pc_two_form(Ld: DiscreteLagrangian) -> TwoFormField:
    """The two-form with (q0, q1) block -d1d2 Ld."""

    def components(q0, q1):
        return _block(-np.atleast_2d(Ld.d1d2(_arr(q0), _arr(q1))))

    return TwoFormField(dim=2 * Ld.n, components=components)


@dataclass(frozen=True)
class RegularityReport:
    det: float
    condition: float
    threshold: float

    @property
    def passed(self) -> bool:
        return abs(self.det) > self.threshold

    def to_dict(self) -> dict:
        return {"det": self.det, "condition": self.condition,
                "threshold": self.threshold, "passed": self.passed}


def regularity_check(Ld: DiscreteLagrangian, q0: Vector, q1: Vector,
                     threshold: float = 1e-10) -> RegularityReport:
    """Invertibility of the mixed second partial at (q0, q1)."""
    B = np.atleast_2d(Ld.d1d2(_arr(q0), _arr(q1)))
    return RegularityReport(det=float(np.linalg.det(B)),
                            condition=float(np.linalg.cond(B)),
                            threshold=threshold)


def lc_pc_two_form(Ld: DiscreteLagrangian, atlas: ConformalAtlas, chart: int
                   ) -> TwoFormField:
    """Conformal two-form: (q0, q1) block -d1d2 Ld + phi(q0) (x) d2 Ld.

    The (q1, q1) block vanishes by symmetry of second partials, so the matrix
    keeps the same off-diagonal block structure as the plain form.
    """
    ch = atlas.chart(chart)

    def components(q0, q1):
        q0, q1 = _arr(q0), _arr(q1)
        M = -np.atleast_2d(Ld.d1d2(q0, q1)) + np.outer(ch.grad(q0), _arr(Ld.d2(q0, q1)))
        return _block(M)

    return TwoFormField(dim=2 * Ld.n, components=components)


@dataclass(frozen=True)
class LcsConditionReport:
    passed: bool
    max_deviation: float
    tolerance: float
    deviations: tuple[float, ...] = ()
    note: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_deviation": self.max_deviation,
                "tolerance": self.tolerance, "deviations": list(self.deviations),
                "note": self.note}


def lcs_condition_check(form: TwoFormField, lee: Callable[[Vector], Vector],
                        sample_points: Sequence[Vector], eps: float = 1e-4,
                        tol_factor: float = 1e-4) -> LcsConditionReport:
    """Check d omega = phi /\\ omega at the sample points by finite differences.

    ``lee`` maps q0 to the one-form components on the q0 block (zero on the q1
    block).  Three-forms are handled on strictly increasing coordinate triples.
    For dim < 4 every three-form vanishes identically and the check passes
    trivially.
    """
    dim = form.dim
    if dim < 4:
        return LcsConditionReport(
            passed=True, max_deviation=0.0, tolerance=0.0,
            note="dim < 4: all three-forms vanish identically; trivial pass")
    n = dim // 2
    triples = list(combinations(range(dim), 3))
    deviations = []
    tol = 0.0
    for x in sample_points:
        x = _arr(x)
        omega = form.matrix(x)
        partials = []
        for kcoord in range(dim):
            xp, xm = x.copy(), x.copy()
            xp[kcoord] += eps
            xm[kcoord] -= eps
            partials.append((form.matrix(xp) - form.matrix(xm)) / (2 * eps))
        psi = np.concatenate([_arr(lee(x[:n])), np.zeros(n)])
        worst = 0.0
        for a, b, c in triples:
            d_omega = partials[a][b, c] + partials[b][c, a] + partials[c][a, b]
            wedge = psi[a] * omega[b, c] - psi[b] * omega[a, c] + psi[c] * omega[a, b]
            worst = max(worst, abs(d_omega - wedge))
        deviations.append(worst)
        tol = max(tol, tol_factor * max(1.0, float(np.max(np.abs(omega)))))
    max_dev = max(deviations)
    return LcsConditionReport(passed=max_dev <= tol, max_deviation=max_dev,
                              tolerance=tol, deviations=tuple(deviations))
