#!/usr/bin/env python3
"""How much AUC is there to gain over tau = 1 on the 10-node benchmark?

Solves each seed's problem with exact gradients (full proximal gradient, many
iterations) and compares its structure AUC with SPG at tau = 1 and with TAY.
The exact solution is the best any sampling strategy can aim for at this lambda.
"""

import argparse

import numpy as np

from spgmrf import exact
from spgmrf.evaluation import generate_ground_truth, sample_dataset, structure_auc
from spgmrf.model import ModelParams, soft_threshold
from spgmrf.optimizer import SpgConfig, run_spg


def proximal_solution(data, lam, alpha, iters):
    theta = np.zeros(data.indexer.m)
    for _ in range(iters):
        g = exact.exact_gradient(ModelParams(data.indexer, theta), data)
        theta = soft_threshold(theta - alpha * g, alpha * lam)
    return ModelParams(data.indexer, theta)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--exact-iters", type=int, default=3000)
    ap.add_argument("--max-iters", type=int, default=300)
    args = ap.parse_args()

    print(f"{'seed':>4} {'exact':>7} {'tau=1':>7} {'TAY':>7} {'|TAY-exact|':>12} {'|tau1-exact|':>13}")
    rows = []
    for seed in args.seeds:
        truth = generate_ground_truth(10, seed=seed)
        data = sample_dataset(truth, 1000, 1000, seed=seed)
        best = proximal_solution(data, 0.025, 0.4, args.exact_iters)
        fits = {s: run_spg(data, SpgConfig(strategy=s, max_iters=args.max_iters, master_seed=seed, timing=False)).theta
                for s in ("fixed:1", "tay")}
        row = [structure_auc(best, truth), structure_auc(fits["fixed:1"], truth), structure_auc(fits["tay"], truth)]
        d_tay = np.linalg.norm(fits["tay"].theta - best.theta)
        d_one = np.linalg.norm(fits["fixed:1"].theta - best.theta)
        rows.append(row)
        print(f"{seed:4d} {row[0]:7.4f} {row[1]:7.4f} {row[2]:7.4f} {d_tay:12.3f} {d_one:13.3f}")
    mean = np.mean(rows, axis=0)
    print(f"mean {mean[0]:7.4f} {mean[1]:7.4f} {mean[2]:7.4f}")


if __name__ == "__main__":
    main()
