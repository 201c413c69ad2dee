"""Truncated multivariate normal sampling on polyhedra ``{x : F x + g > 0}``.

The main sampler is exact Hamiltonian Monte Carlo: after whitening, the
Gaussian dynamics are harmonic, ``s(t) = b cos t + a sin t``, so wall hits
can be found in closed form and handled by elastic reflection.  There is no
integration error and therefore no accept/reject step.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import numpy as np
from numpy.typing import ArrayLike, NDArray
from numba import njit
from scipy.linalg import cho_solve, solve_triangular

from .errors import NumericalFailure, OracleInfeasible, PreconditionError

TWO_PI = 2.0 * np.pi
DEFAULT_TRAVEL_TIME = np.pi / 2
MERGE_TOL = 1e-10
MAX_BOUNCES = 10_000
REFRESH = 32


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class TruncatedGaussian:
    """N(mean, precision^-1) restricted to ``F @ x + g > 0``."""

    mean: NDArray[np.float64]
    precision: NDArray[np.float64]
    F: NDArray[np.float64]
    g: NDArray[np.float64]

    def __post_init__(self):
        k = self.mean.shape[0]
        if self.precision.shape != (k, k):
            raise PreconditionError(f"precision must be {k}x{k}")
        if self.F.ndim != 2 or self.F.shape[1] != k or self.g.shape != (self.F.shape[0],):
            raise PreconditionError("constraint shapes do not conform")

    @classmethod
    def from_canonical(cls, precision, linear, F=None, g=None) -> "TruncatedGaussian":
        """Build from the density ``exp(-x'Px/2 + h'x)``."""
        precision = np.asarray(precision, dtype=float)
        linear = np.asarray(linear, dtype=float)
        k = linear.shape[0]
        chol = _cholesky(precision)
        mean = cho_solve((chol, True), linear)
        F = np.zeros((0, k)) if F is None else np.asarray(F, dtype=float)
        g = np.zeros(F.shape[0]) if g is None else np.asarray(g, dtype=float)
        obj = cls(mean, precision, F, g)
        obj.__dict__["chol"] = chol
        return obj

    @classmethod
    def create(cls, mean, precision, F=None, g=None) -> "TruncatedGaussian":
        mean = np.asarray(mean, dtype=float)
        k = mean.shape[0]
        F = np.zeros((0, k)) if F is None else np.atleast_2d(np.asarray(F, dtype=float))
        g = np.zeros(F.shape[0]) if g is None else np.atleast_1d(np.asarray(g, dtype=float))
        return cls(mean, np.atleast_2d(np.asarray(precision, dtype=float)), F, g)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @cached_property
    def chol(self) -> NDArray[np.float64]:
        """Lower Cholesky factor L of the precision, P = L L'."""
        return _cholesky(self.precision)

    @cached_property
    def whitened_constraints(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        # x = mean + L^{-T} s  =>  F x + g = (F L^{-T}) s + (F mean + g)
        Fw = solve_triangular(self.chol, self.F.T, lower=True).T
        gw = self.F @ self.mean + self.g
        return Fw, gw

    def slack(self, x: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(x, dtype=float) @ self.F.T + self.g

    def is_feasible(self, x: ArrayLike) -> bool:
        return bool(np.all(self.slack(x) > 0))

    def whiten(self, x: ArrayLike) -> NDArray[np.float64]:
        return (np.asarray(x, dtype=float) - self.mean) @ self.chol

    def unwhiten(self, s: ArrayLike) -> NDArray[np.float64]:
        s = np.asarray(s, dtype=float)
        return self.mean + solve_triangular(self.chol, s.T, lower=True, trans="T").T


def _cholesky(P: NDArray[np.float64]) -> NDArray[np.float64]:
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise PreconditionError("precision matrix is not positive definite") from exc


@njit(cache=True)
def _trajectory_kernel(Fw, gw, s, v, travel_time, max_bounces, record):
    """Closed-form reflected dynamics.

    Wall projections ``Fw s`` and ``Fw v`` are advanced with the rotation and
    with the Gram matrix of the walls at each reflection, so a bounce costs
    O(m + k); they are recomputed exactly every ``REFRESH`` bounces.
    ``record`` (shape (r, 2, k)) receives segment start states when r > 0.
    Returns (s, n_bounces, status) with status 0 = ok, 1 = too many bounces.
    """
    m = Fw.shape[0]
    k = s.shape[0]
    gram = Fw @ Fw.T
    fs = Fw @ s
    fv = Fw @ v
    remaining = travel_time
    n_rec = record.shape[0]
    for bounce in range(max_bounces + 1):
        if bounce < n_rec:
            for i in range(k):
                record[bounce, 0, i] = s[i]
                record[bounce, 1, i] = v[i]
        if bounce > 0 and bounce % REFRESH == 0:
            fs = Fw @ s
            fv = Fw @ v
        t_hit = np.inf
        j = -1
        for i in range(m):
            amp = np.sqrt(fv[i] * fv[i] + fs[i] * fs[i])
            if amp <= abs(gw[i]):
                continue
            t = np.arctan2(fv[i], fs[i]) + np.arccos(-gw[i] / amp)
            t = t - TWO_PI * np.floor(t / TWO_PI)
            # a crossing at t ~ 0 (or just behind us, t ~ 2 pi) is the wall we
            # sit on or a corner partner: reflect now only if heading outwards
            if t < MERGE_TOL or t > TWO_PI - MERGE_TOL:
                if fv[i] < 0:
                    t = 0.0
                else:
                    continue
            if t < t_hit:
                t_hit = t
                j = i
        dt = min(t_hit, remaining)
        c = np.cos(dt)
        sn = np.sin(dt)
        for i in range(k):
            si = s[i]
            s[i] = si * c + v[i] * sn
            v[i] = v[i] * c - si * sn
        if t_hit >= remaining:
            return s, bounce, 0
        for i in range(m):
            fsi = fs[i]
            fs[i] = fsi * c + fv[i] * sn
            fv[i] = fv[i] * c - fsi * sn
        remaining -= dt
        # elastic reflection about wall j
        coef = 2.0 * fv[j] / gram[j, j]
        for i in range(k):
            v[i] -= coef * Fw[j, i]
        for i in range(m):
            fv[i] -= coef * gram[i, j]
    return s, max_bounces, 1


_NO_RECORD = np.zeros((0, 2, 1))


def hmc_trajectory(
    Fw: NDArray[np.float64],
    gw: NDArray[np.float64],
    s0: NDArray[np.float64],
    v0: NDArray[np.float64],
    travel_time: float = DEFAULT_TRAVEL_TIME,
    max_bounces: int = MAX_BOUNCES,
    record: int = 0,
):
    """Run whitened dynamics for ``travel_time`` with reflecting walls.

    Returns ``(s_end, n_bounces)``; with ``record > 0`` also an array of the
    (position, velocity) pairs at the start of the first ``record`` wall-free
    segments.
    """
    s = np.array(s0, dtype=float)
    v = np.array(v0, dtype=float)
    Fw = np.ascontiguousarray(Fw, dtype=float).reshape(-1, s.size)
    gw = np.ascontiguousarray(gw, dtype=float)
    rec = np.zeros((record, 2, s.size)) if record else _NO_RECORD
    s, n_bounce, status = _trajectory_kernel(Fw, gw, s, v, float(travel_time), max_bounces, rec)
    if status:
        raise NumericalFailure(
            f"exact HMC exceeded {max_bounces} reflections "
            f"(dim {s.size}, walls {Fw.shape[0]}, min |gw| {np.abs(gw).min(initial=np.inf):.3e})"
        )
    if record:
        return s, n_bounce, rec[: min(record, n_bounce + 1)]
    return s, n_bounce


def hmc_step(
    target: TruncatedGaussian,
    x: NDArray[np.float64],
    rng: np.random.Generator,
    travel_time: float = DEFAULT_TRAVEL_TIME,
) -> NDArray[np.float64]:
    """One exact-HMC transition from a strictly feasible point."""
    Fw, gw = target.whitened_constraints
    s0 = target.whiten(x)
    v0 = rng.standard_normal(target.dim)
    s1, _ = hmc_trajectory(Fw, gw, s0, v0, travel_time)
    x1 = target.unwhiten(s1)
    # whitened slack can be positive while the raw one rounds to <= 0; staying
    # put is the safe move and happens only at the last ulp
    if target.F.shape[0] and not target.is_feasible(x1):
        return np.array(x, dtype=float)
    return x1


def sample_exact_hmc(
    target: TruncatedGaussian,
    init: ArrayLike,
    n_samples: int,
    travel_time: float = DEFAULT_TRAVEL_TIME,
    rng_seed=None,
) -> NDArray[np.float64]:
    """Draw ``n_samples`` successive exact-HMC states, shape (n_samples, k)."""
    x = np.asarray(init, dtype=float)
    if x.shape != (target.dim,):
        raise PreconditionError(f"init must have shape ({target.dim},)")
    if not target.is_feasible(x):
        raise PreconditionError("initial point is not strictly feasible")
    rng = as_rng(rng_seed)
    out = np.empty((n_samples, target.dim))
    for i in range(n_samples):
        x = hmc_step(target, x, rng, travel_time)
        out[i] = x
    return out


def sample_rejection_oracle(
    target: TruncatedGaussian,
    n_samples: int,
    rng_seed=None,
    max_attempts: int = 1000,
) -> NDArray[np.float64]:
    """I.i.d. draws by proposing from the untruncated Gaussian."""
    rng = as_rng(rng_seed)
    k = target.dim
    kept: list[NDArray[np.float64]] = []
    n_kept = 0
    tried = 0
    budget = n_samples * max_attempts
    batch = max(1024, n_samples)
    while n_kept < n_samples:
        if tried >= budget:
            raise OracleInfeasible(
                f"acceptance rate {n_kept / max(tried, 1):.2e} below 1/{max_attempts}"
            )
        x = target.unwhiten(rng.standard_normal((batch, k)))
        tried += batch
        if target.F.shape[0]:
            x = x[np.all(target.slack(x) > 0, axis=1)]
        kept.append(x)
        n_kept += x.shape[0]
    return np.concatenate(kept)[:n_samples]
