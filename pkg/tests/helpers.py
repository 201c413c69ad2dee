"""Shared Monte Carlo utilities for the test-suite."""

import numpy as np


def batch_means_se(x, n_batches: int = 50):
    """Standard error of the mean of a correlated series (columnwise)."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0] // n_batches
    b = x[: m * n_batches].reshape(n_batches, m, *x.shape[1:]).mean(axis=1)
    return b.std(axis=0, ddof=1) / np.sqrt(n_batches)


def iid_se(x):
    x = np.asarray(x, dtype=float)
    return x.std(axis=0, ddof=1) / np.sqrt(x.shape[0])


def random_truncated_problem(rng, k, m):
    """Random Gaussian with ``m`` random walls; the origin is strictly feasible."""
    from npgraph.tmvn import TruncatedGaussian

    A = rng.normal(size=(k, k))
    precision = A @ A.T + k * np.eye(k)
    mean = rng.normal(scale=0.5, size=k)
    F = rng.normal(size=(m, k))
    g = 0.2 + 0.3 * np.abs(rng.normal(size=m))
    return TruncatedGaussian.create(mean, precision, F, g), np.zeros(k)
