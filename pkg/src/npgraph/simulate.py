"""Synthetic nonparanormal data, graph scoring and replication studies."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .errors import InvalidArgument, NPGraphError

STRUCTURES = ("ar1", "circle", "percent")
TRANSFORMS = ("normal-cdf", "logistic-cdf", "gumbel-cdf", "power")
OPEN_EPS = 1e-10


@dataclass(frozen=True)
class Structure:
    kind: str
    fraction: float | None = None

    def __post_init__(self):
        if self.kind not in STRUCTURES:
            raise InvalidArgument(
                f"unknown structure {self.kind!r}; valid: ar1, circle, percent:<fraction>"
            )
        if self.kind == "percent" and not (self.fraction is not None and 0 < self.fraction < 1):
            raise InvalidArgument("percent structure needs a fraction in (0, 1)")

    @classmethod
    def parse(cls, text: str) -> "Structure":
        """'ar1', 'circle' or 'percent:0.1'."""
        kind, _, arg = text.strip().lower().partition(":")
        if kind == "percent":
            try:
                return cls("percent", float(arg))
            except ValueError:
                raise InvalidArgument(f"bad sparsity fraction in {text!r}") from None
        return cls(kind)

    def __str__(self) -> str:
        return f"percent:{self.fraction:g}" if self.kind == "percent" else self.kind


@dataclass(frozen=True)
class Transform:
    family: str
    power: int = 1

    def __post_init__(self):
        if self.family not in TRANSFORMS:
            raise InvalidArgument(f"unknown transform {self.family!r}; valid: {', '.join(TRANSFORMS)}")
        if self.family == "power" and not (1 <= self.power <= 5):
            raise InvalidArgument("power exponent m must be an integer in [1, 5]")

    @classmethod
    def parse(cls, text: str) -> "Transform":
        """'normal-cdf', 'logistic-cdf', 'gumbel-cdf' or 'power:<m>'."""
        fam, _, arg = text.strip().lower().partition(":")
        if fam == "power":
            return cls("power", int(arg or 1))
        return cls(fam)

    def __str__(self) -> str:
        return f"power:{self.power}" if self.family == "power" else self.family


@dataclass(frozen=True)
class Scenario:
    p: int
    n: int
    structure: Structure
    transforms: tuple[Transform, ...] = (Transform("power", 1),)
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.p < 2 or self.n < 1:
            raise InvalidArgument("scenario needs p >= 2 and n >= 1")
        if not self.transforms:
            raise InvalidArgument("scenario needs at least one transform")

    @property
    def label(self) -> str:
        return self.name or f"{self.structure}-p{self.p}-n{self.n}"

    def transform_for(self, d: int) -> Transform:
        # families cycle over columns
        return self.transforms[d % len(self.transforms)]

    def to_dict(self) -> dict:
        return {
            "name": self.label, "p": self.p, "n": self.n, "structure": str(self.structure),
            "transforms": [str(t) for t in self.transforms], "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        tr = d.get("transforms", ["power:1"])
        if isinstance(tr, str):
            tr = [tr]
        return cls(
            p=int(d["p"]), n=int(d["n"]), structure=Structure.parse(d["structure"]),
            transforms=tuple(Transform.parse(t) for t in tr), seed=int(d.get("seed", 0)),
            name=d.get("name", ""),
        )


def gen_precision(structure: Structure | str, p: int, seed=None) -> NDArray[np.float64]:
    if isinstance(structure, str):
        structure = Structure.parse(structure)
    if p < 2:
        raise InvalidArgument("p must be at least 2")
    i = np.arange(p)
    omega = np.zeros((p, p))
    if structure.kind == "circle":
        if p < 3:
            raise InvalidArgument("circle structure needs p >= 3")
        omega[i, i] = 2.0
        omega[i[1:], i[1:] - 1] = omega[i[1:] - 1, i[1:]] = 1.0
        omega[0, p - 1] = omega[p - 1, 0] = 0.9
    elif structure.kind == "ar1":
        omega[i, i] = 2.9216
        omega[0, 0] = omega[p - 1, p - 1] = 1.9608
        omega[i[1:], i[1:] - 1] = omega[i[1:] - 1, i[1:]] = -1.3725
    else:
        rng = np.random.default_rng(seed)
        T = np.diag(rng.normal(1.0, 0.1, size=p))
        rows, cols = np.tril_indices(p, -1)
        n_nz = math.ceil(structure.fraction * rows.size)
        pick = rng.choice(rows.size, size=n_nz, replace=False)
        T[rows[pick], cols[pick]] = rng.normal(0.0, 1.0, size=n_nz)
        omega = T @ T.T
    return omega


def support(omega: NDArray[np.float64], tol: float = 0.0) -> NDArray[np.int8]:
    e = (np.abs(omega) > tol).astype(np.int8)
    np.fill_diagonal(e, 0)
    return e


def fit_transform_params(tr: Transform, y: NDArray[np.float64]) -> dict:
    """Moment-matched location/scale for the c.d.f. families."""
    m, s = float(np.mean(y)), float(np.std(y))
    if tr.family in ("normal-cdf", "power"):
        return {"loc": m, "scale": s}
    if tr.family == "logistic-cdf":
        return {"loc": m, "scale": s * math.sqrt(3.0) / math.pi}
    # largest-extreme-value (Gumbel): mean = loc + gamma*scale, sd = pi*scale/sqrt(6)
    scale = s * math.sqrt(6.0) / math.pi
    return {"loc": m - np.euler_gamma * scale, "scale": scale}


def apply_transform(tr: Transform, y: NDArray[np.float64], params: dict) -> NDArray[np.float64]:
    z = (y - params["loc"]) / params["scale"]
    if tr.family == "normal-cdf":
        x = stats.norm.cdf(z)
    elif tr.family == "logistic-cdf":
        x = stats.logistic.cdf(z)
    elif tr.family == "gumbel-cdf":
        x = stats.gumbel_r.cdf(z)
    else:
        x = stats.norm.cdf(z) ** (1.0 / tr.power)
    return np.clip(x, OPEN_EPS, 1.0 - OPEN_EPS)


@dataclass
class Dataset:
    X: NDArray[np.float64]
    truth: NDArray[np.int8]
    Y: NDArray[np.float64]
    omega: NDArray[np.float64]
    mu: NDArray[np.float64]
    transform_params: list[dict]


def gen_dataset(scenario: Scenario) -> Dataset:
    rng = np.random.default_rng(scenario.seed)
    omega = gen_precision(scenario.structure, scenario.p, rng)
    mu = np.linspace(1.0, 2.0, scenario.p)
    L = np.linalg.cholesky(omega)
    eps = rng.standard_normal((scenario.n, scenario.p))
    # rows ~ N(mu, omega^-1)
    Y = mu + np.linalg.solve(L.T, eps.T).T
    X = np.empty_like(Y)
    params = []
    for d in range(scenario.p):
        tr = scenario.transform_for(d)
        par = fit_transform_params(tr, Y[:, d])
        X[:, d] = apply_transform(tr, Y[:, d], par)
        params.append({"transform": str(tr), **par})
    return Dataset(X, support(omega), Y, omega, mu, params)


@dataclass(frozen=True)
class ConfusionMetrics:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def specificity(self) -> float:
        d = self.tn + self.fp
        return self.tn / d if d else math.nan

    @property
    def sensitivity(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else math.nan

    @property
    def mcc(self) -> float:
        """NaN when any margin of the confusion table is empty."""
        margins = ((self.tp + self.fp), (self.tp + self.fn), (self.tn + self.fp), (self.tn + self.fn))
        if any(m == 0 for m in margins):
            return math.nan
        return (self.tp * self.tn - self.fp * self.fn) / math.sqrt(math.prod(margins))


def score_graph(estimate, truth) -> ConfusionMetrics:
    est = np.asarray(estimate)
    tru = np.asarray(truth)
    if est.shape != tru.shape or est.ndim != 2 or est.shape[0] != est.shape[1]:
        raise InvalidArgument(f"shape mismatch: {est.shape} vs {tru.shape}")
    iu = np.triu_indices(est.shape[0], 1)
    e = est[iu] != 0
    t = tru[iu] != 0
    return ConfusionMetrics(
        tp=int(np.sum(e & t)), tn=int(np.sum(~e & ~t)),
        fp=int(np.sum(e & ~t)), fn=int(np.sum(~e & t)),
    )


@dataclass(frozen=True)
class StudySettings:
    n_burn: int = 1000
    n_keep: int = 2000
    grid: tuple = ()
    J: int | None = None
    workers: int | None = None


@dataclass
class StudyReport:
    rows: list[dict]
    summary: dict
    failures: list[dict] = field(default_factory=list)

    @property
    def n_success(self) -> int:
        return len(self.rows)


METRICS = ("specificity", "sensitivity", "mcc")


def _replicate(job) -> dict:
    from .pipeline import fit_npn

    scenario, rep, seed, settings = job
    t0 = time.perf_counter()
    sc = replace(scenario, seed=seed)
    row = {"scenario": scenario.label, "replication": rep, "seed": seed}
    try:
        data = gen_dataset(sc)
        fit = fit_npn(data.X, seed=seed, n_burn=settings.n_burn, n_keep=settings.n_keep,
                      grid=settings.grid or None, J=settings.J, workers=1)
        m = score_graph(fit.edges, data.truth)
    except NPGraphError as exc:
        return {**row, "error": str(exc)}
    best = fit.selection.best
    row.update({
        "c0": best.c0, "b0": best.b0, "b1": best.b1,
        "tp": m.tp, "tn": m.tn, "fp": m.fp, "fn": m.fn,
        "specificity": m.specificity, "sensitivity": m.sensitivity, "mcc": m.mcc,
        "wall_time": time.perf_counter() - t0,
    })
    return row


def replication_seeds(master_seed: int, n_scenarios: int, replications: int) -> list[list[int]]:
    ss = np.random.SeedSequence(master_seed)
    return [
        [int(c.generate_state(1)[0]) for c in child.spawn(replications)]
        for child in ss.spawn(n_scenarios)
    ]


def summarize(rows: list[dict], scenarios: list[str]) -> dict:
    out = {}
    for name in scenarios:
        sub = [r for r in rows if r["scenario"] == name]
        entry = {"replications": len(sub)}
        for metric in METRICS:
            vals = np.array([r[metric] for r in sub], dtype=float)
            vals = vals[np.isfinite(vals)]
            if vals.size:
                q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
                entry[metric] = dict(zip(("min", "q1", "median", "q3", "max"), map(float, q)))
                entry[metric]["n"] = int(vals.size)
            else:
                entry[metric] = {"n": 0}
        out[name] = entry
    return out


def run_study(scenarios: list[Scenario], replications: int, master_seed: int,
              settings: StudySettings = StudySettings()) -> StudyReport:
    """Generate, fit and score every scenario x replication.

    Each replication gets its own seed spawned from ``master_seed``; failed
    replications are listed separately and left out of the summary.
    """
    if replications < 1:
        raise InvalidArgument("replications must be >= 1")
    if not scenarios:
        raise InvalidArgument("need at least one scenario")
    from .parallel import map_jobs

    seeds = replication_seeds(master_seed, len(scenarios), replications)
    jobs = [(sc, r, seeds[i][r], settings)
            for i, sc in enumerate(scenarios) for r in range(replications)]
    results = map_jobs(_replicate, jobs, settings.workers)
    rows = [r for r in results if "error" not in r]
    failures = [r for r in results if "error" in r]
    summary = summarize(rows, [sc.label for sc in scenarios])
    summary["_failures"] = len(failures)
    return StudyReport(rows, summary, failures)


__all__ = [
    "Structure", "Transform", "Scenario", "Dataset", "ConfusionMetrics", "StudySettings",
    "StudyReport", "gen_precision", "gen_dataset", "score_graph", "run_study", "support",
]
