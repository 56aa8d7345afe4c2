"""Fit a growth model to a simulated network and print its goodness of fit.

    python scripts/gof_example.py --n 300 --out gof_out
"""

import argparse

import numpy as np

from lolog import ModelSpec, OrderSpec, make_term
from lolog.estimate import FitConfig, MomentSpec, gmm_fit
from lolog.gof import gof_run, write_reports
from lolog.sampler import draw_graph, replicate_rng


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--sims", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default=None, help="directory for TSV/JSON reports")
    args = ap.parse_args()

    m = ModelSpec((make_term("edges"), make_term("pref-attach")), (0.0, 1.0), OrderSpec.vertex_entry(), args.n)
    y = draw_graph(m, replicate_rng(args.seed, 0)).graph
    h = MomentSpec((make_term("edges"), make_term("two-stars"), make_term("degree", k=1)))
    res = gmm_fit(y, m, h, FitConfig(r=200, master_seed=args.seed))
    print(res.table())
    print()
    reports = gof_run(res, m, y, r=args.sims, seed=args.seed)
    for rep in reports:
        inside = rep.inside_envelope()
        print(f"{rep.name}: {int(inside.sum())}/{inside.size} bins inside the 5-95% envelope")
        print(rep.to_tsv())
    if args.out:
        write_reports(reports, args.out)


if __name__ == "__main__":
    main()
