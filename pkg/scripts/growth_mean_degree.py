"""Mean degree of the edges + pref-attach growth model across sizes.

    python scripts/growth_mean_degree.py --sims 12
"""

import argparse
import time

import numpy as np

from lolog import ModelSpec, OrderSpec, make_term
from lolog.sampler import draw_graph, replicate_rng

SIZES = (2000, 4000, 8000, 16000)
THETAS = ((0.0, 1.0), (-4.0, 0.5), (3.0, 1.5))


def mean_degree(theta, n, sims, seed):
    m = ModelSpec((make_term("edges"), make_term("pref-attach")), theta, OrderSpec.vertex_entry(), n)
    deg = [2 * draw_graph(m, replicate_rng(seed, i)).edges.shape[0] / n for i in range(sims)]
    return np.mean(deg), np.std(deg, ddof=1) / np.sqrt(sims)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sims", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'theta':>12}" + "".join(f"{n:>14}" for n in SIZES))
    t0 = time.perf_counter()
    for theta in THETAS:
        cells = [mean_degree(theta, n, args.sims, args.seed + n) for n in SIZES]
        print(f"{str(theta):>12}" + "".join(f"{m:8.2f} ({s:.2f})" for m, s in cells))
    print(f"{time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
