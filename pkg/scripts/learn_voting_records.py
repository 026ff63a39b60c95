#!/usr/bin/env python3
"""Fit a sparse network to a binary voting table (rows = legislators, columns = votes).

Missing votes are read as 0. Settings follow the 279 x 100 roll-call run:
lambda 0.1, alpha 0.4, q 5000, 100 iterations. The strongest edges are printed.

    python3 scripts/learn_voting_records.py votes.csv --out votes_model.json
"""

import argparse

import numpy as np

from spgmrf.io import load_binary_csv, save_model, write_trace
from spgmrf.optimizer import SpgConfig, run_spg


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv")
    ap.add_argument("--strategy", default="tay")
    ap.add_argument("--tau-max", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--top", type=int, default=15)
    ap.add_argument("--out", default="voting_model.json")
    ap.add_argument("--trace", default="voting_trace.csv")
    args = ap.parse_args()

    data = load_binary_csv(args.csv, impute_missing_as_zero=True)
    cfg = SpgConfig(alpha=0.4, lam=0.1, q=5000, strategy=args.strategy, tau_max=args.tau_max,
                    max_iters=100, master_seed=args.seed)
    res = run_spg(data, cfg, callback=lambda r: print(f"iter {r.k:3d} tau {r.tau_used:3d} |G| {r.gnorm:.4f}"))
    save_model(args.out, res.theta)
    write_trace(args.trace, res.history)

    idx = res.theta.indexer
    off = idx.offdiagonal
    order = off[np.argsort(-np.abs(res.theta.theta[off]))][: args.top]
    print(f"{np.count_nonzero(res.theta.theta[off])} nonzero edges; strongest:")
    for k in order:
        i, j = idx.to_pair(k)
        print(f"  {i:3d} -- {j:3d}  {res.theta.theta[k]:+.3f}")


if __name__ == "__main__":
    main()
