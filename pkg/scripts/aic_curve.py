"""Print the AIC curve over basis sizes for one margin.

    python3 scripts/aic_curve.py --n 500 --power 1 --seed 3
"""

import argparse

import numpy as np
from scipy import stats

from npgraph.transform import aic_select_J


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--power", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--patience", type=int, default=10)
    args = ap.parse_args()

    z = np.random.default_rng(args.seed).normal(size=args.n)
    x = stats.norm.cdf(z) ** (1.0 / args.power)
    sel = aic_select_J(x, patience=args.patience)
    best = sel.aic[sel.J]
    for J, val in sel.table:
        print(f"{J:4d} {val:14.4f} {val - best:10.4f}{'  <- selected' if J == sel.J else ''}")


if __name__ == "__main__":
    main()
