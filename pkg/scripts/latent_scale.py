"""Fit one simulated dataset and compare the latent scale with the truth.

Reports the standard deviation of the posterior-mean latent columns, the
fitted and true correlations on the true edges, and the graph metrics.

    python3 scripts/latent_scale.py --structure circle --power 3 --n 300
"""

import argparse

import numpy as np

from npgraph.pipeline import fit_npn
from npgraph.simulate import Scenario, Structure, Transform, gen_dataset, score_graph


def corr_from_precision(omega):
    cov = np.linalg.inv(omega)
    s = np.sqrt(np.diag(cov))
    return cov / np.outer(s, s)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--structure", default="circle")
    ap.add_argument("--power", type=int, default=3)
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--burn", type=int, default=1000)
    ap.add_argument("--keep", type=int, default=2000)
    ap.add_argument("--J", type=int, default=None)
    args = ap.parse_args()

    sc = Scenario(args.p, args.n, Structure.parse(args.structure),
                  (Transform("power", args.power),), seed=args.seed)
    data = gen_dataset(sc)
    fit = fit_npn(data.X, seed=args.seed, n_burn=args.burn, n_keep=args.keep, J=args.J)
    out = fit.output
    print("basis sizes", fit.J)
    print("latent sd", np.round(out.z_bar.std(axis=0), 3))
    iu = np.triu_indices(args.p, 1)
    on = data.truth[iu] != 0
    fitted = corr_from_precision(out.omega_mean)[iu][on]
    true = corr_from_precision(data.omega)[iu][on]
    for a, b in zip(true, fitted):
        print(f"true corr {a:+.3f}  fitted {b:+.3f}")
    print(score_graph(fit.edges, data.truth))


if __name__ == "__main__":
    main()
