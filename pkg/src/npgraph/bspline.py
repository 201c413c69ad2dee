"""Clamped cubic B-spline bases on [0, 1] and their coefficient constraints.

A transformation is ``f(x) = sum_j theta_j B_j(x)``.  Identifiability pins
``f(1/2) = 0`` and ``f(3/4) - f(1/4) = 1``; monotonicity requires strictly
increasing coefficients.  Two "pivot" coefficients are eliminated through the
linear constraints so the remaining ``J - 2`` coordinates are free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateBasisError, DomainError, InvalidArgument

ORDER = 4  # cubic
EDGE_CLAMP = 1e-10
PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class BasisSpec:
    J: int
    degree: int = ORDER
    knots: NDArray[np.float64] = field(repr=False, default=None)

    @property
    def interior_knots(self) -> NDArray[np.float64]:
        return self.knots[self.degree:-self.degree]

    def greville(self) -> NDArray[np.float64]:
        """Knot averages; coefficients equal to these reproduce f(x) = x."""
        p = self.degree - 1
        t = self.knots
        return np.array([t[j + 1:j + 1 + p].mean() for j in range(self.J)])


def build_basis(J: int) -> BasisSpec:
    if int(J) != J or J < ORDER:
        raise InvalidArgument(f"need an integer J >= {ORDER}, got {J!r}")
    J = int(J)
    interior = np.linspace(0.0, 1.0, J - ORDER + 2)[1:-1]
    knots = np.concatenate([np.zeros(ORDER), interior, np.ones(ORDER)])
    knots.setflags(write=False)
    return BasisSpec(J=J, degree=ORDER, knots=knots)


def eval_basis(spec: BasisSpec, x: ArrayLike) -> NDArray[np.float64]:
    """Evaluate all J basis functions at ``x``.

    Scalar input gives a length-J vector, array input of shape (n,) gives an
    (n, J) matrix.  Inputs are clamped to ``[1e-10, 1 - 1e-10]``; anything
    outside ``[0, 1]`` (or NaN) is rejected.
    """
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa).ravel()
    if not np.all((xa >= 0.0) & (xa <= 1.0)):
        bad = xa[~((xa >= 0.0) & (xa <= 1.0))][0]
        raise DomainError(f"basis argument {bad!r} outside [0, 1]")
    xa = np.clip(xa, EDGE_CLAMP, 1.0 - EDGE_CLAMP)

    t = spec.knots
    deg = spec.degree - 1
    J = spec.J
    span = np.clip(np.searchsorted(t, xa, side="right") - 1, deg, J - 1)

    # de Boor's triangular scheme, vectorised over points
    n = xa.size
    N = np.zeros((n, deg + 1))
    N[:, 0] = 1.0
    left = np.zeros((n, deg + 1))
    right = np.zeros((n, deg + 1))
    for j in range(1, deg + 1):
        left[:, j] = xa - t[span + 1 - j]
        right[:, j] = t[span + j] - xa
        saved = np.zeros(n)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved

    out = np.zeros((n, J))
    rows = np.arange(n)[:, None]
    cols = span[:, None] - deg + np.arange(deg + 1)[None, :]
    out[rows, cols] = N
    return out[0] if scalar else out


def spline_values(spec: BasisSpec, theta: ArrayLike, x: ArrayLike) -> NDArray[np.float64]:
    return eval_basis(spec, x) @ np.asarray(theta, dtype=float)


def difference_matrix(J: int) -> NDArray[np.float64]:
    F = np.zeros((J - 1, J))
    idx = np.arange(J - 1)
    F[idx, idx] = -1.0
    F[idx, idx + 1] = 1.0
    return F


@dataclass(frozen=True)
class ConstraintSystem:
    """Identifiability and monotonicity constraints, full and reduced.

    ``theta = embed @ theta_bar + offset`` maps reduced vectors back to full
    coefficient vectors; the pivot rows of ``embed``/``offset`` carry ``W`` and
    ``q``.  In reduced form monotonicity reads ``Fbar @ theta_bar + gbar > 0``.
    """

    basis: BasisSpec
    A: NDArray[np.float64]
    c: NDArray[np.float64]
    F: NDArray[np.float64]
    pivots: tuple[int, int]
    free: NDArray[np.intp]
    W: NDArray[np.float64]
    q: NDArray[np.float64]
    embed: NDArray[np.float64]
    offset: NDArray[np.float64]
    Fbar: NDArray[np.float64]
    gbar: NDArray[np.float64]

    @property
    def J(self) -> int:
        return self.basis.J

    def reconstitute(self, theta_bar: ArrayLike) -> NDArray[np.float64]:
        tb = np.asarray(theta_bar, dtype=float)
        return tb @ self.embed.T + self.offset

    def reduce(self, theta: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(theta, dtype=float)[..., self.free]


def _first_nonzero(row: NDArray[np.float64], exclude: int | None = None) -> int:
    for j, a in enumerate(row):
        if j != exclude and abs(a) > PIVOT_TOL:
            return j
    raise DegenerateBasisError("constraint row has no usable nonzero entry")


def constraint_system(spec: BasisSpec) -> ConstraintSystem:
    J = spec.J
    B = eval_basis(spec, np.array([0.25, 0.5, 0.75]))
    A = np.vstack([B[1], B[2] - B[0]])
    c = np.array([0.0, 1.0])
    F = difference_matrix(J)

    p1 = _first_nonzero(A[0])
    p2 = _first_nonzero(A[1], exclude=p1)
    piv = [p1, p2]
    A_piv = A[:, piv]
    if abs(np.linalg.det(A_piv)) < PIVOT_TOL:
        raise DegenerateBasisError(f"pivot columns {piv} give a singular 2x2 system")
    free = np.array([j for j in range(J) if j not in piv], dtype=np.intp)

    W = -np.linalg.solve(A_piv, A[:, free])
    q = np.linalg.solve(A_piv, c)

    embed = np.zeros((J, J - 2))
    embed[free, np.arange(J - 2)] = 1.0
    embed[piv, :] = W
    offset = np.zeros(J)
    offset[piv] = q

    for arr in (A, c, F, W, q, embed, offset, free):
        arr.setflags(write=False)
    Fbar = F @ embed
    gbar = F @ offset
    Fbar.setflags(write=False)
    gbar.setflags(write=False)
    return ConstraintSystem(
        basis=spec, A=A, c=c, F=F, pivots=(p1, p2), free=free, W=W, q=q,
        embed=embed, offset=offset, Fbar=Fbar, gbar=gbar,
    )


def linear_coeffs(spec: BasisSpec) -> NDArray[np.float64]:
    """Coefficients of f(x) = 2x - 1, which meets both identifiability constraints.

    Greville abscissae are strictly increasing for a clamped basis, so this is a
    strictly feasible point for the monotonicity cone.
    """
    return 2.0 * spec.greville() - 1.0
