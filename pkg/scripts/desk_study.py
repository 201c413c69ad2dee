"""Desk-scale simulation study: AR(1) and circle graphs at p = 10.

    python3 scripts/desk_study.py --replications 5 --seed 7 --out desk.json
"""

import argparse
import json

from npgraph.selection import PAPER_GRID
from npgraph.simulate import Scenario, StudySettings, Structure, Transform, run_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replications", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--burn", type=int, default=1000)
    ap.add_argument("--keep", type=int, default=2000)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    settings = StudySettings(n_burn=args.burn, n_keep=args.keep, workers=args.workers,
                             grid=tuple((h.c0, h.b0, h.b1) for h in PAPER_GRID))
    scenarios = [
        Scenario(10, 500, Structure("ar1"), (Transform("power", 1),), name="ar1"),
        Scenario(10, 300, Structure("circle"), (Transform("power", 3),), name="circle"),
    ]
    report = run_study(scenarios, args.replications, master_seed=args.seed, settings=settings)
    for name in ("ar1", "circle"):
        s = report.summary[name]
        print(name, {m: round(s[m].get("median", float("nan")), 3)
                     for m in ("sensitivity", "specificity", "mcc")})
    if report.failures:
        print(f"{len(report.failures)} failed replications")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"rows": report.rows, "summary": report.summary}, fh, indent=2, default=str)


if __name__ == "__main__":
    main()
