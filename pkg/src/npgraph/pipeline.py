"""Fit pipeline shared by the CLI, the study harness and the scripts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from . import bspline
from .errors import InvalidArgument
from .gibbs import ChainConfig, ChainOutput, median_probability_edges
from .precision import Hyper
from .selection import PAPER_GRID, SelectionResult, select_hyperparameters
from .transform import (
    DEFAULT_NU, DEFAULT_SIGMA2, DEFAULT_TAU, AICSelection, TransformPrior, aic_select_J,
    init_coeffs_quadrature, make_prior,
)

GRID_POINTS = 101


@dataclass
class FitResult:
    J: list[int]
    aic: list[AICSelection | None]
    priors: list[TransformPrior]
    selection: SelectionResult
    config: ChainConfig

    @property
    def output(self) -> ChainOutput:
        return self.selection.best_output

    @property
    def edges(self) -> NDArray[np.int8]:
        return median_probability_edges(self.output.edge_mean)

    def transform_grid(self, n_points: int = GRID_POINTS) -> tuple[NDArray, NDArray]:
        """Posterior-mean transforms evaluated on an equally spaced grid of [0, 1]."""
        x = np.linspace(0.0, 1.0, n_points)
        vals = np.column_stack([
            bspline.spline_values(pr.basis, th, x)
            for pr, th in zip(self.priors, self.output.theta_mean)
        ])
        return x, vals


def choose_J(X: NDArray[np.float64], J=None) -> tuple[list[int], list[AICSelection | None]]:
    p = X.shape[1]
    if J is None:
        sel = [aic_select_J(X[:, d]) for d in range(p)]
        return [s.J for s in sel], sel
    Js = [int(J)] * p if np.isscalar(J) else [int(j) for j in J]
    if len(Js) != p:
        raise InvalidArgument(f"need {p} basis sizes, got {len(Js)}")
    return Js, [None] * p


def fit_npn(
    X,
    seed: int,
    n_burn: int = 5000,
    n_keep: int = 10000,
    grid=None,
    J=None,
    workers: int | None = None,
    nu: float = DEFAULT_NU,
    tau: float = DEFAULT_TAU,
    sigma2: float = DEFAULT_SIGMA2,
) -> FitResult:
    """AIC basis sizes, quadrature starts, then one chain per grid point.

    The winning configuration's chain is the final chain: every grid chain
    already uses the same seed and settings, so rerunning it would reproduce
    the same draws.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise InvalidArgument("X must be an n x p matrix")
    Js, aic = choose_J(X, J)
    priors = [make_prior(j, nu, tau, sigma2) for j in Js]
    init = [init_coeffs_quadrature(pr.basis, pr.system) for pr in priors]
    config = ChainConfig(n_burn=n_burn, n_keep=n_keep, seed=seed)
    grid = [g if isinstance(g, Hyper) else Hyper(*g) for g in (grid or PAPER_GRID)]
    selection = select_hyperparameters(X, grid, config, priors, init, workers)
    return FitResult(Js, aic, priors, selection, config)
