"""BIC choice of the spike-and-slab hyperparameters.

After each chain, the median-probability graph fixes a zero pattern and the
Gaussian likelihood is maximised over precision matrices with that pattern
(covariance selection).  The configuration with the smallest BIC wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .errors import ConvergenceError, InfeasibleMLE, InvalidArgument, NPGraphError
from .gibbs import ChainConfig, ChainOutput, median_probability_edges, run_chain
from .parallel import map_jobs
from .precision import Hyper

MLE_MAX_ITER = 10_000
MLE_TOL = 1e-12
STATIONARITY_TOL = 1e-6

# c0 in {0.02, 0.005} crossed with (b0, b1) in {(1, 1), (10, 30)}
PAPER_GRID = (
    Hyper(0.02, 1.0, 1.0),
    Hyper(0.02, 10.0, 30.0),
    Hyper(0.005, 1.0, 1.0),
    Hyper(0.005, 10.0, 30.0),
)


@dataclass
class PatternMLE:
    omega_hat: NDArray[np.float64]
    pattern: NDArray[np.int8]
    loglik: float
    iterations: int
    stationarity: float


def _as_pattern(pattern, p: int) -> NDArray[np.int8]:
    pat = (np.asarray(pattern) != 0).astype(np.int8)
    if pat.shape != (p, p) or not np.array_equal(pat, pat.T):
        raise InvalidArgument("pattern must be a symmetric p x p matrix")
    np.fill_diagonal(pat, 1)
    return pat


def stationarity_residual(omega, S, n: int, pattern) -> float:
    """max over free entries of |(omega^-1)_{dk} - S_{dk}/n|."""
    resid = np.linalg.inv(omega) - S / n
    return float(np.abs(resid[np.asarray(pattern) != 0]).max())


def constrained_gaussian_mle(S, n: int, pattern, max_iter: int = MLE_MAX_ITER,
                             tol: float = MLE_TOL) -> PatternMLE:
    """Maximise ``n log det(Omega) - tr(Omega S)`` with Omega zero off ``pattern``.

    Column-wise regressions on the free neighbours of each node (the
    covariance-selection algorithm of Hastie, Tibshirani and Friedman): the
    working covariance W matches ``S / n`` on every free entry at convergence.
    """
    S = np.asarray(S, dtype=float)
    p = S.shape[0]
    if S.shape != (p, p) or n < 1:
        raise InvalidArgument("S must be square and n positive")
    pat = _as_pattern(pattern, p)
    target = S / n
    if np.any(np.diag(target) <= 0):
        raise InfeasibleMLE("S has a non-positive diagonal entry")

    W = target.copy()
    betas: list[NDArray[np.float64]] = [np.zeros(0)] * p
    nbrs = [np.flatnonzero((pat[j] == 1) & (np.arange(p) != j)) for j in range(p)]
    it = 0
    for it in range(1, max_iter + 1):
        change = 0.0
        for j in range(p):
            nz = nbrs[j]
            if nz.size == 0:
                betas[j] = np.zeros(0)
                continue
            try:
                L = np.linalg.cholesky(W[np.ix_(nz, nz)])
            except np.linalg.LinAlgError as exc:
                raise InfeasibleMLE(f"no positive-definite completion (node {j})") from exc
            beta = np.linalg.solve(L.T, np.linalg.solve(L, target[nz, j]))
            betas[j] = beta
            idx = np.r_[0:j, j + 1:p]
            w12 = W[np.ix_(idx, nz)] @ beta
            change = max(change, float(np.abs(W[idx, j] - w12).max()))
            W[idx, j] = w12
            W[j, idx] = w12
        if change < tol * max(1.0, float(np.abs(target).max())):
            break
    else:
        omega = _omega_from_betas(target, W, betas, nbrs)
        grad = _free_gradient(omega, S, n, pat)
        raise ConvergenceError(f"covariance selection did not converge in {max_iter} sweeps", grad)

    omega = _omega_from_betas(target, W, betas, nbrs)
    try:
        np.linalg.cholesky(omega)
    except np.linalg.LinAlgError as exc:
        raise InfeasibleMLE("fitted precision matrix is not positive definite") from exc
    _, logdet = np.linalg.slogdet(omega)
    loglik = float(n * logdet - np.sum(omega * S))
    return PatternMLE(omega, pat, loglik, it, stationarity_residual(omega, S, n, pat))


def _omega_from_betas(target, W, betas, nbrs):
    p = target.shape[0]
    omega = np.zeros((p, p))
    for j in range(p):
        nz = nbrs[j]
        beta = betas[j]
        w12 = W[nz, j]
        theta22 = 1.0 / (target[j, j] - w12 @ beta) if nz.size else 1.0 / target[j, j]
        omega[j, j] = theta22
        omega[nz, j] = -beta * theta22
    return 0.5 * (omega + omega.T)


def _free_gradient(omega, S, n, pattern) -> float:
    """Norm of the objective gradient over the free entries."""
    try:
        G = S - n * np.linalg.inv(omega)
    except np.linalg.LinAlgError:
        return math.inf
    return float(np.linalg.norm(G[np.asarray(pattern) != 0]))


def free_gradient_norm(mle: PatternMLE, S, n: int) -> float:
    return _free_gradient(mle.omega_hat, S, n, mle.pattern)


def bic_terms(mle: PatternMLE, S, n: int) -> tuple[int, float, float]:
    """(k, deviance, bic) with k = p + number of free off-diagonal pairs."""
    p = mle.pattern.shape[0]
    k = p + int(np.triu(mle.pattern, 1).sum())
    _, logdet = np.linalg.slogdet(mle.omega_hat)
    deviance = 2.0 * (-n * logdet + float(np.sum(mle.omega_hat * np.asarray(S))))
    return k, deviance, deviance + k * math.log(n)


def bic_score(mle: PatternMLE, S, n: int) -> float:
    return bic_terms(mle, S, n)[2]


@dataclass
class BICRow:
    c0: float
    b0: float
    b1: float
    k: int
    deviance: float
    bic: float
    selected: bool = False
    error: str = ""

    @property
    def hyper(self) -> Hyper:
        return Hyper(self.c0, self.b0, self.b1)


@dataclass
class SelectionResult:
    best: Hyper
    table: list[BICRow]
    outputs: dict[Hyper, ChainOutput] = field(repr=False, default_factory=dict)

    @property
    def best_output(self) -> ChainOutput:
        return self.outputs[self.best]


def score_chain(out: ChainOutput) -> tuple[int, float, float]:
    z = out.z_bar
    n = z.shape[0]
    S = z.T @ z
    pattern = median_probability_edges(out.edge_mean)
    mle = constrained_gaussian_mle(S, n, pattern)
    return bic_terms(mle, S, n)


def _run_config(job):
    X, config, priors, init_theta = job
    try:
        out = run_chain(X, config, priors, init_theta)
        k, dev, bic = score_chain(out)
        return out, k, dev, bic, ""
    except NPGraphError as exc:
        return None, 0, math.inf, math.inf, str(exc)


def select_hyperparameters(
    X,
    configs,
    base_config: ChainConfig,
    priors,
    init_theta=None,
    workers: int | None = None,
) -> SelectionResult:
    """Run one chain per hyperparameter triple and keep the smallest BIC.

    All chains share ``base_config.seed``.  Ties go to the smaller ``c0`` and
    then the smaller ``b0``; failed chains score +inf and are reported.
    """
    configs = [c if isinstance(c, Hyper) else Hyper(*c) for c in configs]
    if not configs:
        raise InvalidArgument("need at least one hyperparameter configuration")
    jobs = [
        (X, replace(base_config, hyper=h), priors, init_theta)
        for h in configs
    ]
    results = map_jobs(_run_config, jobs, workers)
    table, outputs = [], {}
    for h, (out, k, dev, bic, err) in zip(configs, results):
        table.append(BICRow(h.c0, h.b0, h.b1, k, dev, bic, error=err))
        if out is not None:
            outputs[h] = out
    if not outputs:
        raise NPGraphError("every hyperparameter configuration failed: "
                           + "; ".join(r.error for r in table))
    best_row = min(table, key=lambda r: (r.bic, r.c0, r.b0, r.b1))
    best_row.selected = True
    return SelectionResult(best_row.hyper, table, outputs)
