"""Command-line interface: simulate, fit, study, select-basis.

Every subcommand takes ``--config PATH`` (a JSON object whose keys mirror the
long flag names, e.g. ``{"seed": 1, "burn": 500, "grid": "0.02,1,1"}``);
flags given on the command line override the file.

Exit codes: 0 success, 1 runtime failure, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataValidationError, InvalidArgument, NPGraphError
from .precision import Hyper
from .selection import PAPER_GRID

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

DESK_PRESET = [
    {"name": "ar1-p10-n500", "p": 10, "n": 500, "structure": "ar1", "transforms": ["power:1"]},
    {"name": "circle-p10-n300", "p": 10, "n": 300, "structure": "circle", "transforms": ["power:3"]},
]
# paper-scale sizes; replications and chain lengths still come from flags
PAPER_SIZES = [(25, 50), (50, 150), (100, 500)]

DEFAULTS = {
    "simulate": {"structure": "ar1", "p": 10, "n": 200, "transforms": "power:1"},
    "fit": {"burn": 5000, "keep": 10000, "rescale": False},
    "study": {"burn": 1000, "keep": 2000, "replications": 3},
    "select-basis": {"rescale": False},
}


class UsageError(Exception):
    pass


# -- formatting ---------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NA"
        if math.isinf(x):
            return "Inf" if x > 0 else "-Inf"
        return "%.17g" % x
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_matrix(path: Path, M, names) -> None:
    M = np.asarray(M)
    write_csv(path, names, (M if M.dtype.kind == "f" else M.astype(int)).tolist())


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


# -- input --------------------------------------------------------------------

def read_data(path: Path) -> tuple[np.ndarray, list[str]]:
    """Numeric CSV with an optional header row.  Errors name the row and column."""
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataValidationError(f"{path}: no data")
    names, first_line = None, 1
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        names, rows, first_line = [c.strip() for c in rows[0]], rows[1:], 2
    if not rows:
        raise DataValidationError(f"{path}: header but no data rows")
    p = len(rows[0])
    names = names or [f"V{j + 1}" for j in range(p)]
    if len(names) != p:
        raise DataValidationError(f"{path}: header has {len(names)} fields, data has {p}")
    X = np.empty((len(rows), p))
    for i, row in enumerate(rows):
        line = i + first_line
        if len(row) != p:
            raise DataValidationError(f"{path}: row {line} has {len(row)} fields, expected {p}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataValidationError(
                    f"{path}: non-numeric value {cell!r} at row {line}, column {names[j]}") from None
            if not math.isfinite(v):
                raise DataValidationError(f"{path}: non-finite value at row {line}, column {names[j]}")
            X[i, j] = v
    return X, names


def prepare_data(X: np.ndarray, names: list[str], rescale: bool) -> np.ndarray:
    lo, hi = X.min(axis=0), X.max(axis=0)
    for j in np.flatnonzero(hi == lo):
        raise DataValidationError(f"column {names[j]} is constant")
    if rescale:
        X = (X - lo) / (hi - lo)
    bad = np.argwhere((X < 0.0) | (X > 1.0))
    if bad.size:
        i, j = bad[0]
        raise DataValidationError(
            f"value {X[i, j]!r} at data row {i + 1}, column {names[j]} is outside [0, 1] "
            "(use --rescale)")
    return X


def parse_grid(spec) -> list[Hyper]:
    """'c0,b0,b1;c0,b0,b1' or a JSON list of triples."""
    if spec is None:
        return list(PAPER_GRID)
    items = spec if isinstance(spec, list) else [s for s in str(spec).split(";") if s.strip()]
    out = []
    for item in items:
        parts = item if isinstance(item, (list, tuple)) else item.split(",")
        try:
            vals = [float(v) for v in parts]
        except (TypeError, ValueError):
            raise UsageError(f"bad grid entry {item!r}; expected c0,b0,b1") from None
        if len(vals) != 3:
            raise UsageError(f"bad grid entry {item!r}; expected c0,b0,b1")
        out.append(Hyper(*vals))
    if not out:
        raise UsageError("empty hyperparameter grid")
    return out


def grid_to_list(grid: list[Hyper]) -> list[list[float]]:
    return [[h.c0, h.b0, h.b1] for h in grid]


def resolve(args: argparse.Namespace, command: str) -> dict:
    cfg = dict(DEFAULTS.get(command, {}))
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(loaded, dict):
            raise UsageError(f"{path}: top level must be an object")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in ("config", "command", "handler") or val is None:
            continue
        if key == "rescale" and val is False:
            continue
        cfg[key] = val
    return cfg


def require_seed(cfg: dict) -> int:
    if cfg.get("seed") is None:
        raise UsageError("a seed is required (--seed or \"seed\" in the config)")
    try:
        return int(cfg["seed"])
    except (TypeError, ValueError):
        raise UsageError(f"seed must be an integer, got {cfg['seed']!r}") from None


def out_dir(cfg: dict) -> Path:
    if not cfg.get("out"):
        raise UsageError("an output directory is required (--out)")
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


# -- subcommands ----------------------------------------------------------------

def cmd_simulate(cfg: dict) -> int:
    from .simulate import Scenario, gen_dataset

    seed = require_seed(cfg)
    tr = cfg["transforms"]
    sc_dict = {"p": cfg["p"], "n": cfg["n"], "structure": cfg["structure"],
               "transforms": tr.split(",") if isinstance(tr, str) else tr, "seed": seed}
    try:
        scenario = Scenario.from_dict(sc_dict)
    except (InvalidArgument, ValueError) as exc:
        raise UsageError(str(exc)) from None
    out = out_dir(cfg)
    data = gen_dataset(scenario)
    names = [f"V{j + 1}" for j in range(scenario.p)]
    write_matrix(out / "X.csv", data.X, names)
    write_matrix(out / "truth.csv", data.truth, names)
    write_matrix(out / "latent.csv", data.Y, names)
    write_json(out / "provenance.json", {
        "software": {"name": "npgraph", "version": __version__},
        "seed": seed,
        "scenario": scenario.to_dict(),
        "mu": data.mu,
        "omega": data.omega,
        "transform_params": data.transform_params,
    })
    print(f"wrote {scenario.n} x {scenario.p} dataset to {out}")
    return EXIT_OK


def _load_input(cfg: dict) -> tuple[Path, np.ndarray, list[str]]:
    if not cfg.get("input"):
        raise UsageError("an input CSV is required")
    path = Path(cfg["input"])
    X, names = read_data(path)
    return path, prepare_data(X, names, bool(cfg.get("rescale"))), names


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_fit(cfg: dict) -> int:
    from .pipeline import fit_npn

    seed = require_seed(cfg)
    grid = parse_grid(cfg.get("grid"))
    path, X, names = _load_input(cfg)
    out = out_dir(cfg)
    fit = fit_npn(X, seed=seed, n_burn=int(cfg["burn"]), n_keep=int(cfg["keep"]), grid=grid,
                  J=cfg.get("J"), workers=cfg.get("workers"))
    res = fit.output
    write_matrix(out / "edge_mean.csv", res.edge_mean, names)
    write_matrix(out / "edges.csv", fit.edges, names)
    write_matrix(out / "omega_mean.csv", res.omega_mean, names)
    x, vals = fit.transform_grid()
    write_csv(out / "transforms.csv", ["x", *names], np.column_stack([x, vals]).tolist())
    write_csv(out / "bic_table.csv", ["c0", "b0", "b1", "k", "deviance", "bic", "selected"],
              [[r.c0, r.b0, r.b1, r.k, r.deviance, r.bic, r.selected] for r in fit.selection.table])
    best = fit.selection.best
    write_json(out / "manifest.json", {
        "software": {"name": "npgraph", "version": __version__},
        "command": "fit",
        "input": {"path": str(path), "sha256": _sha256(path), "rows": X.shape[0], "columns": names},
        "config": {
            "seed": seed, "burn": fit.config.n_burn, "keep": fit.config.n_keep,
            "rescale": bool(cfg.get("rescale")), "grid": grid_to_list(grid),
            "J": cfg.get("J"), "hmc_travel_time": fit.config.hmc_travel_time,
        },
        "basis_sizes": fit.J,
        "selected": {"c0": best.c0, "b0": best.b0, "b1": best.b1},
        "bic": [{"c0": r.c0, "b0": r.b0, "b1": r.b1, "bic": _finite_or_none(r.bic), "error": r.error}
                for r in fit.selection.table],
        "n_kept": res.n_kept,
    })
    print(f"selected c0={best.c0:g} b0={best.b0:g} b1={best.b1:g}; "
          f"{int(np.triu(fit.edges, 1).sum())} edges; results in {out}")
    return EXIT_OK


def _scenarios(cfg: dict) -> list:
    from .simulate import Scenario

    if "scenarios" in cfg:
        raw = cfg["scenarios"]
    elif cfg.get("preset") == "paper":
        raw = [{"p": p, "n": n, "structure": s, "transforms": ["normal-cdf", "logistic-cdf", "gumbel-cdf", "power:2"]}
               for p, n in PAPER_SIZES for s in ("ar1", "circle", "percent:0.1")]
    else:
        raw = DESK_PRESET
    if not raw:
        raise UsageError("the scenario list is empty")
    try:
        return [Scenario.from_dict(d) for d in raw]
    except (InvalidArgument, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad scenario definition: {exc}") from None


def cmd_study(cfg: dict) -> int:
    from .simulate import METRICS, StudySettings, run_study

    seed = require_seed(cfg)
    scenarios = _scenarios(cfg)
    grid = parse_grid(cfg.get("grid"))
    reps = int(cfg["replications"])
    if reps < 1:
        raise UsageError("replications must be at least 1")
    out = out_dir(cfg)
    settings = StudySettings(n_burn=int(cfg["burn"]), n_keep=int(cfg["keep"]),
                             grid=tuple((h.c0, h.b0, h.b1) for h in grid), J=cfg.get("J"),
                             workers=cfg.get("workers"))
    report = run_study(scenarios, reps, seed, settings)
    cols = ["scenario", "replication", "seed", "c0", "b0", "b1", "tp", "tn", "fp", "fn",
            "specificity", "sensitivity", "mcc", "wall_time"]
    write_csv(out / "replications.csv", cols, [[r[c] for c in cols] for r in report.rows])
    write_csv(out / "long.csv", ["metric", "scenario", "value"],
              [[m, r["scenario"], r[m]] for m in METRICS for r in report.rows])
    summary = {
        "software": {"name": "npgraph", "version": __version__},
        "master_seed": seed,
        "replications": reps,
        "settings": {"burn": settings.n_burn, "keep": settings.n_keep, "grid": grid_to_list(grid)},
        "scenarios": [sc.to_dict() for sc in scenarios],
        "summary": {k: v for k, v in report.summary.items() if not k.startswith("_")},
        "failures": [{"scenario": f["scenario"], "replication": f["replication"],
                      "seed": f["seed"], "error": f["error"]} for f in report.failures],
        "n_failed": len(report.failures),
        "n_succeeded": report.n_success,
    }
    write_json(out / "summary.json", summary)
    print(f"{report.n_success} replications succeeded, {len(report.failures)} failed; results in {out}")
    return EXIT_OK if report.n_success else EXIT_RUNTIME


def cmd_select_basis(cfg: dict) -> int:
    from .transform import aic_select_J

    _, X, names = _load_input(cfg)
    out = out_dir(cfg)
    rows, chosen = [], []
    for j, name in enumerate(names):
        sel = aic_select_J(X[:, j])
        chosen.append([name, sel.J])
        rows.extend([name, J, val] for J, val in sel.table)
    write_csv(out / "aic.csv", ["variable", "J", "aic"], rows)
    write_csv(out / "selected_J.csv", ["variable", "J"], chosen)
    for name, J in chosen:
        print(f"{name}: J={J}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="npgraph", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"npgraph {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON config; flags override its fields")
        if seed:
            p.add_argument("--seed", type=int, help="master RNG seed (required)")
        p.add_argument("--out", help="output directory")

    def chain_flags(p):
        p.add_argument("--burn", type=int, help="burn-in sweeps")
        p.add_argument("--keep", type=int, help="retained sweeps")
        p.add_argument("--grid", help='hyperparameter grid "c0,b0,b1;c0,b0,b1"')
        p.add_argument("--J", type=int, help="fixed basis size for every variable (skips AIC)")
        p.add_argument("--workers", type=int, help="parallel chains (also capped by NPGRAPH_THREADS)")

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--structure", help="ar1, circle or percent:<fraction>")
    p.add_argument("--p", type=int, help="dimension")
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--transforms", help="comma list, assigned round-robin: normal-cdf, "
                   "logistic-cdf, gumbel-cdf, power:<m>")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("fit", help="fit the graphical model to a CSV of data in [0, 1]")
    common(p)
    p.add_argument("input", nargs="?", help="data CSV (rows = observations)")
    p.add_argument("--rescale", action="store_true", default=None,
                   help="min-max rescale each column to [0, 1] first")
    chain_flags(p)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("study", help="replicated simulation study")
    common(p)
    p.add_argument("--replications", type=int, help="replications per scenario")
    p.add_argument("--preset", choices=("desk", "paper"), help="built-in scenario list")
    chain_flags(p)
    p.set_defaults(handler=cmd_study)

    p = sub.add_parser("select-basis", help="AIC basis-size diagnostics only")
    common(p, seed=False)
    p.add_argument("input", nargs="?", help="data CSV")
    p.add_argument("--rescale", action="store_true", default=None)
    p.set_defaults(handler=cmd_select_basis)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args, args.command)
        return args.handler(cfg)
    except (UsageError, DataValidationError, InvalidArgument) as exc:
        print(f"npgraph {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NPGraphError, OSError) as exc:
        print(f"npgraph {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
