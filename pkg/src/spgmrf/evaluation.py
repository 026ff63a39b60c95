"""Synthetic ground truth, structure-recovery AUC and bound-tightness traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InstrumentationError, InvalidInputError, UndefinedAUCError
from .gibbs import ChainEnsemble, gibbs_one_sweep, make_rng
from .model import Dataset, ModelParams


@dataclass(frozen=True, eq=False)
class GroundTruth:
    theta_true: ModelParams
    edge_set: frozenset

    def __post_init__(self):
        idx = self.theta_true.indexer
        nz = {idx.to_pair(k) for k in idx.offdiagonal if self.theta_true.theta[k] != 0}
        if nz != set(self.edge_set):
            raise InvalidInputError("edge set disagrees with the nonzero couplings of theta_true")

    @classmethod
    def from_theta(cls, theta: ModelParams) -> "GroundTruth":
        idx = theta.indexer
        edges = frozenset(idx.to_pair(k) for k in idx.offdiagonal if theta.theta[k] != 0)
        return cls(theta, edges)

    def labels(self) -> np.ndarray:
        """0/1 edge indicator per off-diagonal feature in canonical order."""
        return (self.theta_true.theta[self.theta_true.indexer.offdiagonal] != 0).astype(np.int8)


def generate_ground_truth(p: int, edge_prob: float = 0.3, weight_low_band=(1.0, 2.0), seed: int = 0) -> GroundTruth:
    """Random sparse model: each pair is an edge w.p. ``edge_prob``.

    Edge weights are uniform on ``[-hi, -lo] U [lo, hi]`` with a fair sign;
    node potentials are zero.
    """
    if p < 2:
        raise InvalidInputError("need at least two nodes")
    if not 0.0 <= edge_prob <= 1.0:
        raise InvalidInputError("edge probability must lie in [0, 1]")
    lo, hi = weight_low_band
    if not 0 <= lo <= hi:
        raise InvalidInputError("weight band must satisfy 0 <= lo <= hi")
    rng = make_rng(seed, (1,))
    theta = ModelParams.zeros(p)
    off = theta.indexer.offdiagonal
    present = rng.random(off.size) < edge_prob
    mags = rng.uniform(lo, hi, off.size)
    signs = np.where(rng.random(off.size) < 0.5, -1.0, 1.0)
    vec = np.zeros(theta.m)
    vec[off] = np.where(present, signs * mags, 0.0)
    return GroundTruth.from_theta(theta.with_theta(vec))


def sample_dataset(truth: GroundTruth | ModelParams, n: int, burn_in: int = 1000, seed: int = 0) -> Dataset:
    """``n`` independent chains, each run ``burn_in`` sweeps from a uniform start."""
    theta = truth.theta_true if isinstance(truth, GroundTruth) else truth
    if n < 1:
        raise InvalidInputError("need at least one sample")
    rng = make_rng(seed, (2,))
    states = (rng.random((n, theta.p)) < 0.5).astype(np.uint8)
    ens = ChainEnsemble(states, rng, (int(seed), 2))
    for _ in range(burn_in):
        gibbs_one_sweep(ens, theta)
    return Dataset(ens.states.copy(), theta.indexer)


def auc_score(scores, labels) -> float:
    """ROC AUC with tied scores counted as half, via average ranks."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError(f"AUC undefined with {n_pos} positives and {n_neg} negatives")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def structure_auc(theta_hat: ModelParams | np.ndarray, truth: GroundTruth) -> float:
    """Rank off-diagonal ``|theta_hat|`` against the true edge set; diagonal ignored."""
    idx = truth.theta_true.indexer
    vec = theta_hat.theta if isinstance(theta_hat, ModelParams) else np.asarray(theta_hat)
    if vec.shape != (idx.m,):
        raise InvalidInputError("estimate and ground truth have different sizes")
    return auc_score(np.abs(vec[idx.offdiagonal]), truth.labels())


def auc_trace(history, truth: GroundTruth) -> np.ndarray:
    return np.array([structure_auc(rec.theta, truth) for rec in history])


def time_to_settle(times, values, tol: float = 0.01) -> float:
    """Earliest time after which ``values`` stays within ``tol`` of its last entry."""
    values = np.asarray(values, dtype=np.float64)
    far = np.flatnonzero(np.abs(values - values[-1]) > tol)
    first = 0 if far.size == 0 else far[-1] + 1
    return float(np.asarray(times)[first])


def bound_tightness_trace(history, reference_norms=None) -> dict:
    """Per-iteration measured gradient error next to the asymptotic bound.

    Uses, in order of preference, the exact expected error recorded by an
    instrumented run, ``reference_norms`` supplied by the caller (e.g. Monte
    Carlo ``||delta||`` against a long-run reference gradient), or the exact
    realized ``||delta||``. The ``measure`` key says which one was used.
    """
    if not history:
        raise InstrumentationError("empty run history")
    if reference_norms is not None:
        measured = np.asarray(reference_norms, dtype=np.float64)
        measure = "monte_carlo_delta_norm"
    elif all(r.expected_delta_norm is not None for r in history):
        measured = np.array([r.expected_delta_norm for r in history])
        measure = "expected_delta_norm"
    elif all(r.exact_delta_norm is not None for r in history):
        measured = np.array([r.exact_delta_norm for r in history])
        measure = "delta_norm"
    else:
        raise InstrumentationError("run was not instrumented; pass reference_norms or enable instrumentation")
    if measured.shape != (len(history),):
        raise InvalidInputError("one reference norm per iteration is required")
    bound = np.array([r.asym_bound for r in history])
    rows = [{"iter": r.k, "measured": float(v), "asym_bound": float(b)} for r, v, b in zip(history, measured, bound)]
    return {"measure": measure, "rows": rows, "fraction_bound_holds": float(np.mean(bound >= measured))}


def monte_carlo_delta_norms(history, data: Dataset, q_ref: int = 20000, tau_ref: int = 200, seed: int = 0) -> np.ndarray:
    """``||delta_f - reference||`` using a long-run many-chain gradient at each starting iterate."""
    from .gibbs import grad_estimate, init_ensemble

    out = []
    for rec in history:
        theta = ModelParams(data.indexer, rec.theta_prev)
        ens = init_ensemble(q_ref, data.p, "uniform", seed, stream=(3, rec.k))
        ref = grad_estimate(theta, data.empirical_moments, ens, tau_ref)
        out.append(float(np.linalg.norm(rec.delta_f - ref.delta_f)))
    return np.array(out)
