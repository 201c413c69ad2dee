"""Priors and point fits for monotone spline transformations.

The prior on a variable's coefficients starts as ``N(zeta, sigma2 I)`` with
``zeta`` an approximation of normal order-statistic means, is conditioned on the
identifiability constraints and restricted to the reduced coordinates.
Quadratic programs provide starting values (fit of the normal quantile
function) and the per-variable AIC choice of the number of basis functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import norm

from . import bspline
from .bspline import BasisSpec, ConstraintSystem
from .errors import (
    ConstraintSystemError,
    DegenerateBasisError,
    InitializationError,
    InvalidArgument,
    NPGraphError,
    SelectionError,
)
from .qp import QPResult, solve_qp

MONOTONE_MARGIN = 1e-4
RIDGE = 1e-10
J_MIN, J_MAX = 4, 100
AIC_PATIENCE = 10

# prior settings used throughout the simulations
DEFAULT_NU = 1.0
DEFAULT_TAU = 0.5
DEFAULT_SIGMA2 = 1.0


@dataclass(frozen=True)
class TransformPrior:
    nu: float
    tau: float
    sigma2: float
    zeta: NDArray[np.float64]
    xi: NDArray[np.float64]
    gamma: NDArray[np.float64]
    xi_bar: NDArray[np.float64]
    gamma_bar: NDArray[np.float64]
    system: ConstraintSystem = field(repr=False)
    gamma_bar_inv: NDArray[np.float64] = field(repr=False)

    @property
    def basis(self) -> BasisSpec:
        return self.system.basis

    @property
    def J(self) -> int:
        return self.system.J


def prior_mean_zeta(J: int, nu: float = 0.0, tau: float = 1.0) -> NDArray[np.float64]:
    if J < J_MIN:
        raise InvalidArgument(f"J must be >= {J_MIN}")
    if tau <= 0:
        raise InvalidArgument("tau must be positive")
    j = np.arange(1, J + 1)
    return nu + tau * norm.ppf((j - 0.375) / (J - 0.75 + 1))


def condition_prior(
    zeta: ArrayLike,
    sigma2: float,
    system: ConstraintSystem,
    nu: float = np.nan,
    tau: float = np.nan,
) -> TransformPrior:
    """Condition ``N(zeta, sigma2 I)`` on ``A theta = c`` and reduce to free coordinates.

    Under the conditioned law the pivot coordinates are affine in the free
    ones, so the reduced Gaussian is just the free-coordinate marginal of
    ``N(xi, Gamma)``.
    """
    zeta = np.asarray(zeta, dtype=float)
    A, c = system.A, system.c
    AAt = A @ A.T
    if abs(np.linalg.det(AAt)) < 1e-14:
        raise DegenerateBasisError("A A' is singular")
    proj = A.T @ np.linalg.solve(AAt, A)
    xi = zeta + A.T @ np.linalg.solve(AAt, c - A @ zeta)
    gamma = sigma2 * (np.eye(zeta.size) - proj)
    gamma = 0.5 * (gamma + gamma.T)
    free = system.free
    xi_bar = xi[free]
    gamma_bar = gamma[np.ix_(free, free)]
    try:
        gamma_bar_inv = cho_solve(cho_factor(gamma_bar), np.eye(free.size))
    except np.linalg.LinAlgError as exc:
        raise DegenerateBasisError("reduced prior covariance is not positive definite") from exc
    gamma_bar_inv = 0.5 * (gamma_bar_inv + gamma_bar_inv.T)
    return TransformPrior(
        nu=nu, tau=tau, sigma2=sigma2, zeta=zeta, xi=xi, gamma=gamma,
        xi_bar=xi_bar, gamma_bar=gamma_bar, system=system, gamma_bar_inv=gamma_bar_inv,
    )


def make_prior(
    J: int,
    nu: float = DEFAULT_NU,
    tau: float = DEFAULT_TAU,
    sigma2: float = DEFAULT_SIGMA2,
) -> TransformPrior:
    system = bspline.constraint_system(bspline.build_basis(J))
    return condition_prior(prior_mean_zeta(J, nu, tau), sigma2, system, nu=nu, tau=tau)


def _monotone_qp(H, f, system: ConstraintSystem) -> QPResult:
    J = system.J
    H = H + RIDGE * np.eye(J)
    x0 = bspline.linear_coeffs(system.basis)
    return solve_qp(H, f, system.A, system.c, system.F,
                    np.full(J - 1, MONOTONE_MARGIN), x0)


def quadrature_moments(spec: BasisSpec, n_nodes: int = 20) -> tuple[NDArray, NDArray]:
    """Gauss-Hermite estimates of ``b_k = E[B_k(Phi(Z)) Z]`` and ``E_jk = E[B_j B_k]``."""
    u, w = np.polynomial.hermite.hermgauss(n_nodes)
    z = np.sqrt(2.0) * u
    w = w / np.sqrt(np.pi)
    B = bspline.eval_basis(spec, norm.cdf(z))
    b = B.T @ (w * z)
    E = (B * w[:, None]).T @ B
    return b, E


def init_coeffs_quadrature(
    spec: BasisSpec, system: ConstraintSystem, n_nodes: int = 20
) -> NDArray[np.float64]:
    """Starting coefficients: least-squares spline fit of the normal quantile function."""
    if n_nodes < 10:
        raise InvalidArgument("need at least 10 quadrature nodes")
    b, E = quadrature_moments(spec, n_nodes)
    try:
        res = _monotone_qp(E.T @ E, -(E.T @ b), system)
    except NPGraphError as exc:
        raise InitializationError(f"quadrature initialisation failed for J={spec.J}: {exc}") from exc
    return res.x


def centered_design(spec: BasisSpec, x: ArrayLike) -> NDArray[np.float64]:
    B = bspline.eval_basis(spec, np.asarray(x, dtype=float))
    return B - B.mean(axis=0)


def fit_monotone_spline_qp(design: ArrayLike, system: ConstraintSystem) -> NDArray[np.float64]:
    """Minimise the sample variance of the transformed column over the constraint set."""
    Z = np.asarray(design, dtype=float).reshape(-1, system.J)
    if Z.shape[0] == 0:
        return bspline.linear_coeffs(system.basis)
    try:
        res = _monotone_qp(Z.T @ Z, np.zeros(system.J), system)
    except NPGraphError as exc:
        raise ConstraintSystemError(f"monotone fit failed for J={system.J}: {exc}") from exc
    return res.x


@dataclass
class AICSelection:
    J: int
    table: list[tuple[int, float]]

    @property
    def aic(self) -> dict[int, float]:
        return dict(self.table)


def aic_value(x_column: ArrayLike, J: int) -> tuple[float, NDArray[np.float64]]:
    spec = bspline.build_basis(J)
    system = bspline.constraint_system(spec)
    Z = centered_design(spec, x_column)
    theta = fit_monotone_spline_qp(Z, system)
    rss = float(np.sum((Z @ theta) ** 2))
    return Z.shape[0] * np.log(rss) + 2 * J, theta


def aic_select_J(
    x_column: ArrayLike,
    J_grid: range | None = None,
    patience: int = AIC_PATIENCE,
) -> AICSelection:
    """Ascending search over J; stop once ``patience`` successive values exceed the best."""
    x = np.asarray(x_column, dtype=float)
    if x.size < 10:
        raise InvalidArgument("AIC selection needs at least 10 observations")
    grid = list(J_grid if J_grid is not None else range(J_MIN, J_MAX + 1))
    table: list[tuple[int, float]] = []
    best_J, best_val, since_best = None, np.inf, 0
    for J in grid:
        try:
            val, _ = aic_value(x, J)
        except NPGraphError:
            val = np.nan
        table.append((J, val))
        if np.isfinite(val) and val < best_val:
            best_J, best_val, since_best = J, val, 0
        elif best_J is not None:
            since_best += 1
            if since_best >= patience:
                break
    if best_J is None:
        raise SelectionError("every monotone spline fit failed")
    return AICSelection(best_J, table)
