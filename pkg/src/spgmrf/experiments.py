"""Synthetic structure-learning benchmark: generate, sample, learn, score."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .evaluation import auc_trace, generate_ground_truth, sample_dataset, time_to_settle
from .optimizer import SpgConfig, run_spg

log = logging.getLogger(__name__)


@dataclass
class SyntheticSetup:
    p: int = 10
    n: int | None = None
    edge_prob: float = 0.3
    burn_in: int = 1000
    seeds: tuple = (0, 1, 2, 3, 4)
    lam: float | None = None
    alpha: float = 0.4
    q: int | None = None
    long_tau: int | None = None
    max_iters: int = 300
    tau_max: int = 500

    def resolved(self) -> "SyntheticSetup":
        # 20-node settings differ in sample size, lambda, chain count and fixed tau
        big = self.p >= 20
        return replace(
            self,
            n=self.n if self.n is not None else (2000 if big else 1000),
            lam=self.lam if self.lam is not None else (0.017 if big else 0.025),
            q=self.q if self.q is not None else (5000 if big else 2000),
            long_tau=self.long_tau if self.long_tau is not None else (60 if big else 30),
        )

    def strategies(self) -> dict:
        s = self.resolved()
        return {"spg1": "fixed:1", f"spg{s.long_tau}": f"fixed:{s.long_tau}", "spginc": "increasing", "tay": "tay"}


@dataclass
class StrategyRun:
    seed: int
    name: str
    history: list
    auc: np.ndarray
    summary: dict = field(default_factory=dict)


def run_paper_synthetic(setup: SyntheticSetup, out_dir=None, strategies=None, timing: bool = True) -> list[StrategyRun]:
    """Run every strategy on every seed; optionally write one trace CSV per run."""
    from .io import write_trace

    s = setup.resolved()
    strategies = strategies or s.strategies()
    runs = []
    for seed in s.seeds:
        truth = generate_ground_truth(s.p, s.edge_prob, seed=seed)
        data = sample_dataset(truth, s.n, s.burn_in, seed=seed)
        for name, strat in strategies.items():
            cfg = SpgConfig(
                alpha=s.alpha, lam=s.lam, q=s.q, strategy=strat, tau_max=s.tau_max,
                max_iters=s.max_iters, master_seed=seed, timing=timing,
            )
            res = run_spg(data, cfg)
            auc = auc_trace(res.history, truth)
            taus = [r.tau_used for r in res.history]
            times = [r.time_ms for r in res.history]
            summary = {
                "seed": seed,
                "strategy": name,
                "final_auc": float(auc[-1]),
                "median_tau": float(np.median(taus)),
                "settle_iter": int(time_to_settle(range(len(auc)), auc, 0.01)),
                "total_time_ms": float(times[-1]) if timing else None,
                "settle_time_ms": time_to_settle(times, auc, 0.01) if timing else None,
            }
            log.info("seed %d %s: %s", seed, name, summary)
            runs.append(StrategyRun(seed, name, res.history, auc, summary))
            if out_dir is not None:
                Path(out_dir).mkdir(parents=True, exist_ok=True)
                write_trace(Path(out_dir) / f"seed{seed}_{name}.csv", res.history, extra={"auc": auc})
    return runs
