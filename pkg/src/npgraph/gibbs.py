"""Full Gibbs sampler for the nonparanormal graphical model.

One sweep:

1. for each variable, one exact-HMC move of its reduced spline coefficients
   given the other transformed columns, the mean and the precision matrix;
2. recompute the transformed data ``Y``, draw ``mu`` and centre ``Z = Y - mu``;
3. one pass of the spike-and-slab precision updates with ``S = Z'Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solve_triangular

from . import bspline, precision
from .errors import ChainError, InvalidArgument, NPGraphError, StateCorruption
from .precision import Hyper, PrecisionState
from .tmvn import DEFAULT_TRAVEL_TIME, TruncatedGaussian, hmc_step
from .transform import TransformPrior, init_coeffs_quadrature

SINGULAR_JITTER = 1e-6


@dataclass(frozen=True)
class ChainConfig:
    n_burn: int = 5000
    n_keep: int = 10000
    seed: int = 0
    hmc_travel_time: float = DEFAULT_TRAVEL_TIME
    hyper: Hyper = field(default_factory=Hyper)
    thinning: int = 1
    hmc_steps: int = 1
    keep_samples: bool = False

    def __post_init__(self):
        if self.n_burn < 0 or self.n_keep < 1 or self.thinning < 1 or self.hmc_steps < 1:
            raise InvalidArgument(f"invalid chain configuration: {self}")

    @property
    def n_sweeps(self) -> int:
        return self.n_burn + self.n_keep


@dataclass
class ChainOutput:
    edge_mean: NDArray[np.float64]
    omega_mean: NDArray[np.float64]
    z_bar: NDArray[np.float64]
    theta_mean: list[NDArray[np.float64]]
    mu_mean: NDArray[np.float64]
    pi_trace: NDArray[np.float64]
    edge_count_trace: NDArray[np.int64]
    n_kept: int
    samples: dict | None = None


@dataclass
class _Column:
    """Per-variable quantities fixed for the whole chain."""

    prior: TransformPrior
    B: NDArray[np.float64]  # n x J basis values
    D: NDArray[np.float64]  # n x (J-2) reduced design
    o: NDArray[np.float64]  # offset from the pivot constants
    DtD: NDArray[np.float64]


def _column(prior: TransformPrior, x: NDArray[np.float64]) -> _Column:
    B = bspline.eval_basis(prior.basis, x).reshape(-1, prior.J)
    D = B @ prior.system.embed
    o = B @ prior.system.offset
    return _Column(prior, B, D, o, D.T @ D)


def conditional_means(Y, mu, omega, d: int) -> NDArray[np.float64]:
    """Mean of column ``d`` of Y given the other columns (one value per row)."""
    w = omega[d] / omega[d, d]
    resid = Y - mu
    return mu[d] - (resid @ w - resid[:, d] * w[d])


def _theta_target(col: _Column, delta, omega_dd: float) -> TruncatedGaussian:
    prior = col.prior
    prec = omega_dd * col.DtD + prior.gamma_bar_inv
    lin = prior.gamma_bar_inv @ prior.xi_bar + omega_dd * (col.D.T @ (delta - col.o))
    return TruncatedGaussian.from_canonical(0.5 * (prec + prec.T), lin,
                                            prior.system.Fbar, prior.system.gbar)


def theta_conditional(
    d: int,
    Y: NDArray[np.float64],
    mu: NDArray[np.float64],
    omega: NDArray[np.float64],
    basis_values: NDArray[np.float64],
    prior: TransformPrior,
) -> TruncatedGaussian:
    """Full conditional of the reduced coefficients of variable ``d``.

    ``basis_values`` is the n x J matrix of basis functions at the observed
    column.  The result is a Gaussian in canonical form truncated to the
    reduced monotonicity region.
    """
    if not omega[d, d] > 0:
        raise StateCorruption(f"omega[{d},{d}] = {omega[d, d]} is not positive")
    B = np.asarray(basis_values, dtype=float).reshape(-1, prior.J)
    D = B @ prior.system.embed
    col = _Column(prior, B, D, B @ prior.system.offset, D.T @ D)
    delta = conditional_means(Y, mu, omega, d) if Y.shape[0] else np.zeros(0)
    return _theta_target(col, delta, float(omega[d, d]))


def sample_mu(Y: NDArray[np.float64], omega: NDArray[np.float64], rng) -> NDArray[np.float64]:
    """One draw from ``N(mean(Y), omega^-1 / n)``."""
    n = Y.shape[0]
    if n < 1:
        raise InvalidArgument("sample_mu needs at least one row")
    L = np.linalg.cholesky(omega)
    z = rng.standard_normal(omega.shape[0])
    return Y.mean(axis=0) + solve_triangular(L, z, lower=True, trans="T") / math.sqrt(n)


def median_probability_edges(edge_mean: NDArray[np.float64]) -> NDArray[np.int8]:
    em = np.asarray(edge_mean, dtype=float)
    iu = np.triu_indices(em.shape[0], 1)
    out = np.zeros(em.shape, dtype=np.int8)
    out[iu] = em[iu] > 0.5
    return out | out.T


def initial_state(Y: NDArray[np.float64], hyper: Hyper) -> tuple[NDArray, PrecisionState]:
    n, p = Y.shape
    if n >= 2:
        mu = Y.mean(axis=0)
        sigma = np.atleast_2d(np.cov(Y, rowvar=False))
        if n <= p or np.linalg.matrix_rank(sigma) < p:
            sigma = sigma + SINGULAR_JITTER * np.eye(p)
    else:
        mu = np.zeros(p)
        sigma = np.eye(p)
    omega = np.linalg.inv(sigma)
    return mu, precision.init_state(omega, hyper)


def run_chain(
    X: NDArray[np.float64],
    config: ChainConfig,
    priors: list[TransformPrior],
    init_theta: list[NDArray[np.float64]] | None = None,
) -> ChainOutput:
    """Run ``n_burn + n_keep`` sweeps and return running-mean summaries.

    ``X`` is n x p with entries in [0, 1]; ``priors[d]`` carries the basis and
    constraint system of variable ``d``.  With ``n = 0`` the chain samples the
    prior (mu stays at zero).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidArgument("X must be a 2-d array")
    n, p = X.shape
    if len(priors) != p:
        raise InvalidArgument(f"need {p} priors, got {len(priors)}")
    rng = np.random.default_rng(config.seed)
    cols = [_column(priors[d], X[:, d]) for d in range(p)]

    if init_theta is None:
        init_theta = [init_coeffs_quadrature(pr.basis, pr.system) for pr in priors]
    theta_bar = [priors[d].system.reduce(init_theta[d]) for d in range(p)]
    theta = [priors[d].system.reconstitute(theta_bar[d]) for d in range(p)]
    Y = np.column_stack([cols[d].B @ theta[d] for d in range(p)]) if n else np.zeros((0, p))
    mu, state = initial_state(Y, config.hyper)

    edge_sum = np.zeros((p, p))
    omega_sum = np.zeros((p, p))
    z_sum = np.zeros((n, p))
    mu_sum = np.zeros(p)
    theta_sum = [np.zeros(pr.J) for pr in priors]
    pi_trace = np.empty(config.n_sweeps)
    edge_trace = np.empty(config.n_sweeps, dtype=np.int64)
    samples = {"theta": [], "omega": [], "edges": [], "Y": []} if config.keep_samples else None
    n_kept = 0

    for sweep in range(config.n_sweeps):
        step, var = "theta", None
        try:
            omega = state.omega
            for d in range(p):
                var = d
                if not omega[d, d] > 0:
                    raise StateCorruption(f"omega[{d},{d}] = {omega[d, d]}")
                delta = conditional_means(Y, mu, omega, d) if n else np.zeros(0)
                target = _theta_target(cols[d], delta, float(omega[d, d]))
                tb = theta_bar[d]
                for _ in range(config.hmc_steps):
                    tb = hmc_step(target, tb, rng, config.hmc_travel_time)
                theta_bar[d] = tb
                theta[d] = priors[d].system.reconstitute(tb)
                if n:
                    Y[:, d] = cols[d].B @ theta[d]
            var = None
            step = "mu"
            if n:
                mu = sample_mu(Y, state.omega, rng)
            Z = Y - mu
            step = "precision"
            S = Z.T @ Z
            precision.precision_sweep(state, S, n, rng)
        except NPGraphError as exc:
            raise ChainError(sweep, step, var, exc) from exc
        except np.linalg.LinAlgError as exc:
            raise ChainError(sweep, step, var, exc) from exc

        pi_trace[sweep] = state.pi_edge
        edge_trace[sweep] = int(state.edges.sum() // 2)
        kept = sweep - config.n_burn
        if kept >= 0 and kept % config.thinning == 0:
            n_kept += 1
            edge_sum += state.edges
            omega_sum += state.omega
            z_sum += Z
            mu_sum += mu
            for d in range(p):
                theta_sum[d] += theta[d]
            if samples is not None:
                samples["theta"].append([t.copy() for t in theta])
                samples["omega"].append(state.omega.copy())
                samples["edges"].append(state.edges.copy())
                samples["Y"].append(Y.copy())

    return ChainOutput(
        edge_mean=edge_sum / n_kept,
        omega_mean=omega_sum / n_kept,
        z_bar=z_sum / n_kept,
        theta_mean=[t / n_kept for t in theta_sum],
        mu_mean=mu_sum / n_kept,
        pi_trace=pi_trace,
        edge_count_trace=edge_trace,
        n_kept=n_kept,
        samples=samples,
    )
