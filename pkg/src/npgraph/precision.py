"""Gibbs updates for a sparse precision matrix under a Student-t spike-and-slab prior.

Off-diagonal entries are ``N(0, v^2)`` with ``v^2 = tau2`` (slab, edge present)
or ``c0 * tau2`` (spike, edge absent); ``tau2 ~ IG(b0, b1)`` makes each
component Student-t.  Diagonals are ``Exp(lam / 2)``, edge indicators are
Bernoulli(pi) and ``pi ~ Beta(1, 10)``.  Columns are updated one at a time via
the block reparameterisation ``(u, v) = (omega_12, omega_22 - u' Omega_11^-1 u)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import cho_solve, solve_triangular

from .errors import InvalidArgument, NumericalFailure

PI_PRIOR = (1.0, 10.0)


@dataclass(frozen=True)
class Hyper:
    c0: float = 0.02
    b0: float = 1.0
    b1: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not (self.c0 > 0 and self.b0 > 0 and self.b1 > 0 and self.lam > 0):
            raise InvalidArgument(f"hyperparameters must be positive: {self}")


@dataclass
class PrecisionState:
    omega: NDArray[np.float64]
    edges: NDArray[np.int8]
    tau2: NDArray[np.float64]
    pi_edge: float
    hyper: Hyper = field(default_factory=Hyper)

    @property
    def p(self) -> int:
        return self.omega.shape[0]

    def slab_var(self) -> NDArray[np.float64]:
        """``v^2`` for every pair, zero on the diagonal."""
        v2 = np.where(self.edges == 1, self.tau2, self.hyper.c0 * self.tau2)
        np.fill_diagonal(v2, 0.0)
        return v2

    def copy(self) -> "PrecisionState":
        return PrecisionState(self.omega.copy(), self.edges.copy(), self.tau2.copy(),
                              self.pi_edge, self.hyper)


def init_state(omega: NDArray[np.float64], hyper: Hyper, pi_edge: float | None = None) -> PrecisionState:
    """State around a starting precision matrix: unit slab variances, edges set
    where the inclusion probability at ``omega`` exceeds one half."""
    omega = 0.5 * (np.asarray(omega, dtype=float) + np.asarray(omega, dtype=float).T)
    p = omega.shape[0]
    pi_edge = PI_PRIOR[0] / sum(PI_PRIOR) if pi_edge is None else pi_edge
    tau2 = np.ones((p, p))
    prob = edge_inclusion_prob(omega, tau2, hyper.c0, pi_edge)
    edges = (prob > 0.5).astype(np.int8)
    np.fill_diagonal(edges, 0)
    return PrecisionState(omega, edges, tau2, pi_edge, hyper)


def edge_inclusion_prob(omega, tau2, c0: float, pi_edge: float):
    """P(l = 1 | omega, tau2, pi) for the spike/slab mixture."""
    omega = np.asarray(omega, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    # log of spike density over slab density
    log_ratio = -0.5 * np.log(c0) - 0.5 * omega**2 / tau2 * (1.0 / c0 - 1.0)
    ratio = np.exp(log_ratio)
    return pi_edge / (pi_edge + (1.0 - pi_edge) * ratio)


def tau2_posterior_params(omega, edges, hyper: Hyper):
    """Inverse-gamma (shape, rate) of each slab variance."""
    omega = np.asarray(omega, dtype=float)
    edges = np.asarray(edges)
    shape = hyper.b0 + 0.5
    rate = hyper.b1 + 0.5 * omega**2 * (edges + (1 - edges) / hyper.c0)
    return shape, rate


def pi_posterior_params(edges) -> tuple[float, float]:
    iu = np.triu_indices(np.asarray(edges).shape[0], 1)
    e = np.asarray(edges)[iu]
    n1 = int(np.sum(e == 1))
    return PI_PRIOR[0] + n1, PI_PRIOR[1] + (e.size - n1)


def update_precision_column(
    state: PrecisionState, S: NDArray[np.float64], n: int, d: int, rng: np.random.Generator
) -> PrecisionState:
    """Redraw column/row ``d`` of omega from its full conditional (in place)."""
    p = state.p
    lam = state.hyper.lam
    s22 = S[d, d]
    shape = n / 2.0 + 1.0
    v = rng.gamma(shape, 2.0 / (s22 + lam))
    if p == 1:
        state.omega[0, 0] = v
        return state

    idx = np.r_[0:d, d + 1:p]
    omega11 = state.omega[np.ix_(idx, idx)]
    try:
        L11 = np.linalg.cholesky(omega11)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Omega_11 not positive definite while updating column {d}") from exc
    omega11_inv = cho_solve((L11, True), np.eye(p - 1))

    v12 = state.slab_var()[idx, d]
    c_inv = (s22 + lam) * omega11_inv + np.diag(1.0 / v12)
    c_inv = 0.5 * (c_inv + c_inv.T)
    try:
        Lc = np.linalg.cholesky(c_inv)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"conditional precision singular for column {d}") from exc
    mean = -cho_solve((Lc, True), S[idx, d])
    u = mean + solve_triangular(Lc, rng.standard_normal(p - 1), lower=True, trans="T")

    state.omega[idx, d] = u
    state.omega[d, idx] = u
    state.omega[d, d] = v + u @ omega11_inv @ u
    return state


def update_edges(state: PrecisionState, rng: np.random.Generator) -> PrecisionState:
    p = state.p
    iu = np.triu_indices(p, 1)
    prob = edge_inclusion_prob(state.omega[iu], state.tau2[iu], state.hyper.c0, state.pi_edge)
    draw = (rng.random(prob.size) < prob).astype(np.int8)
    state.edges[iu] = draw
    state.edges.T[iu] = draw
    return state


def update_tau2(state: PrecisionState, rng: np.random.Generator) -> PrecisionState:
    p = state.p
    iu = np.triu_indices(p, 1)
    shape, rate = tau2_posterior_params(state.omega[iu], state.edges[iu], state.hyper)
    draw = rate / rng.gamma(shape, 1.0, size=rate.size)
    state.tau2[iu] = draw
    state.tau2.T[iu] = draw
    return state


def update_pi(state: PrecisionState, rng: np.random.Generator) -> PrecisionState:
    a, b = pi_posterior_params(state.edges)
    state.pi_edge = float(rng.beta(a, b))
    return state


def precision_sweep(state: PrecisionState, S: NDArray[np.float64], n: int,
                    rng: np.random.Generator) -> PrecisionState:
    """All columns in order, then edges, slab variances and edge probability."""
    for d in range(state.p):
        update_precision_column(state, S, n, d, rng)
    update_edges(state, rng)
    update_tau2(state, rng)
    update_pi(state, rng)
    return state
