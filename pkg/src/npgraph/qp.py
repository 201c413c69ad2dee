"""Primal active-set solver for strictly convex quadratic programs.

    minimize   0.5 x'Hx + f'x
    subject to A_eq x = b_eq,  G x >= h

Requires a feasible starting point; the monotone-spline problems always have
one (see ``bspline.linear_coeffs``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from .errors import ConstraintSystemError, ConvergenceError


@dataclass
class QPResult:
    x: NDArray[np.float64]
    eq_multipliers: NDArray[np.float64]
    ineq_multipliers: NDArray[np.float64]
    active: list[int]
    iterations: int
    objective: float
    kkt_residual: float


def _kkt_solve(H, C, rhs):
    k = C.shape[0]
    n = H.shape[0]
    K = np.zeros((n + k, n + k))
    K[:n, :n] = H
    K[:n, n:] = C.T
    K[n:, :n] = C
    b = np.concatenate([rhs, np.zeros(k)])
    try:
        sol = linalg.solve(K, b, assume_a="sym", check_finite=False)
    except (linalg.LinAlgError, ValueError):
        sol = linalg.lstsq(K, b, check_finite=False)[0]
    return sol[:n], sol[n:]


def kkt_residual(H, f, A_eq, b_eq, G, h, x, nu, lam) -> float:
    """Largest violation among stationarity, feasibility, sign and complementarity.

    Stationarity is measured relative to the size of the gradient terms.
    """
    grad = H @ x + f
    stat = grad - A_eq.T @ nu - G.T @ lam
    scale = max(1.0, np.abs(grad).max(initial=0.0), np.abs(G.T @ lam).max(initial=0.0))
    slack = G @ x - h
    parts = [
        np.abs(stat).max(initial=0.0) / scale,
        np.abs(A_eq @ x - b_eq).max(initial=0.0),
        max(0.0, -slack.min(initial=0.0)),
        max(0.0, -lam.min(initial=0.0)),
        np.abs(lam * slack).max(initial=0.0) / scale,
    ]
    return float(max(parts))


def solve_qp(H, f, A_eq, b_eq, G, h, x0, tol: float = 1e-11, max_iter: int | None = None) -> QPResult:
    H = np.asarray(H, dtype=float)
    f = np.asarray(f, dtype=float)
    A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.asarray(b_eq, dtype=float)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float)
    x = np.array(x0, dtype=float)
    n_eq, m = A_eq.shape[0], G.shape[0]

    feas_tol = 1e-9 * max(1.0, np.abs(h).max(initial=0.0))
    if np.abs(A_eq @ x - b_eq).max(initial=0.0) > 1e-8 or np.any(G @ x - h < -feas_tol):
        raise ConstraintSystemError("starting point is not feasible")

    max_iter = max_iter or 20 * (m + x.size) + 100
    working = [i for i in range(m) if G[i] @ x - h[i] <= feas_tol]
    # keep the initial working set linearly independent of the equalities
    if working:
        C = np.vstack([A_eq, G[working]])
        if np.linalg.matrix_rank(C) < C.shape[0]:
            working = []

    # after an unblocked full step x already minimises over the working set;
    # re-solving would only return round-off, which cycles on ill-conditioned H
    at_subspace_min = False
    for it in range(1, max_iter + 1):
        C = np.vstack([A_eq, G[working]]) if working else A_eq
        grad = H @ x + f
        p, neg_mult = _kkt_solve(H, C, -grad)
        mult = -neg_mult
        if at_subspace_min or np.abs(p).max() <= tol * max(1.0, np.abs(x).max()):
            at_subspace_min = False
            lam_w = mult[n_eq:]
            if not working or lam_w.min() >= -tol * max(1.0, np.abs(grad).max()):
                lam = np.zeros(m)
                if working:
                    lam[working] = np.maximum(lam_w, 0.0)
                nu = mult[:n_eq]
                x_final = x
                obj = float(0.5 * x_final @ H @ x_final + f @ x_final)
                res = kkt_residual(H, f, A_eq, b_eq, G, h, x_final, nu, lam)
                return QPResult(x_final, nu, lam, sorted(working), it, obj, res)
            working.pop(int(np.argmin(lam_w)))
            continue
        Gp = G @ p
        alpha = 1.0
        block = -1
        cand = [i for i in range(m) if i not in working and Gp[i] < 0]
        if cand:
            cand = np.asarray(cand)
            ratios = (h[cand] - G[cand] @ x) / Gp[cand]
            ratios = np.maximum(ratios, 0.0)
            k = int(np.argmin(ratios))
            if ratios[k] < 1.0:
                alpha = float(ratios[k])
                block = int(cand[k])
        x = x + alpha * p
        if block >= 0:
            working.append(block)
        else:
            at_subspace_min = True

    grad = H @ x + f
    raise ConvergenceError(f"active-set QP did not converge in {max_iter} iterations",
                           float(np.abs(grad).max()))
