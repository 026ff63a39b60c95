#!/usr/bin/env python3
"""10- or 20-node synthetic benchmark: every strategy on every seed, one trace per run.

    python3 scripts/paper_synthetic.py --p 10 --seeds 0 1 2 3 4 --out runs/p10
"""

import argparse
import json
import logging
from pathlib import Path

import numpy as np

from spgmrf.experiments import SyntheticSetup, run_paper_synthetic


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--max-iters", type=int, default=300)
    ap.add_argument("--strategies", default="spg1,spg30,spginc,tay",
                    help="subset of spg1, spg<long tau>, spginc, tay")
    ap.add_argument("--out", default="runs/paper_synthetic")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    setup = SyntheticSetup(p=args.p, seeds=tuple(args.seeds), max_iters=args.max_iters)
    roster = {k: v for k, v in setup.strategies().items() if k in args.strategies.split(",")}
    out = Path(args.out)
    runs = run_paper_synthetic(setup, out, strategies=roster)

    print(f"{'strategy':<8} {'mean AUC':>9} {'median tau':>11} {'settle ms':>10} {'total ms':>10}")
    for name in roster:
        rows = [r.summary for r in runs if r.name == name]
        print(f"{name:<8} {np.mean([r['final_auc'] for r in rows]):9.4f} "
              f"{np.median([r['median_tau'] for r in rows]):11.1f} "
              f"{np.mean([r['settle_time_ms'] for r in rows]):10.0f} "
              f"{np.mean([r['total_time_ms'] for r in rows]):10.0f}")
    (out / "summary.json").write_text(json.dumps([r.summary for r in runs], indent=1) + "\n")


if __name__ == "__main__":
    main()
