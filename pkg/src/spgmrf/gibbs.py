"""Multi-chain systematic-scan Gibbs sampling and the stochastic gradient oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError
from .model import Dataset, FeatureIndexer, ModelParams, as_states, moment_vector

log = logging.getLogger(__name__)

INIT_MODES = ("uniform", "data", "persistent")
RNG_ALGORITHM = "numpy.Philox4x64"


def make_rng(master_seed: int, stream=()) -> np.random.Generator:
    """Counter-based generator for ``(master_seed, *stream)``.

    Distinct ``stream`` tuples give statistically independent sequences, so the
    optimizer can address "iteration k" without sharing state between iterations.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class ChainEnsemble:
    """``q`` Gibbs chains advanced in lockstep.

    ``states`` is owned by the ensemble and overwritten in place by each sweep.
    ``seeds`` records the ``(master_seed, *stream)`` key the chain randomness was
    derived from; chain ``c`` consumes column ``c`` of every uniform block drawn.
    """

    states: np.ndarray
    rng: np.random.Generator
    seeds: tuple
    sweeps_done: int = 0
    theta_ref: ModelParams | None = None
    init_mode: str = "uniform"

    @property
    def q(self) -> int:
        return self.states.shape[0]

    @property
    def p(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True, eq=False)
class GradEstimate:
    delta_f: np.ndarray
    sample_moments: np.ndarray
    variances: np.ndarray
    tau: int
    q: int
    meta: dict = field(default_factory=dict)


def init_ensemble(
    q: int,
    p: int,
    mode: str = "uniform",
    master_seed: int = 0,
    data: Dataset | None = None,
    previous: ChainEnsemble | None = None,
    stream=(),
) -> ChainEnsemble:
    if q < 2:
        raise InvalidInputError(f"need at least 2 chains for sample variances, got q={q}")
    if mode not in INIT_MODES:
        raise InvalidInputError(f"unknown init mode {mode!r}; expected one of {INIT_MODES}")
    seeds = (int(master_seed), *(int(s) for s in stream))
    rng = make_rng(master_seed, stream)
    if mode == "persistent":
        if previous is None:
            log.info("persistent init requested without previous chains; using uniform")
            mode = "uniform"
        else:
            if previous.states.shape != (q, p):
                raise InvalidInputError("previous ensemble has the wrong shape")
            return ChainEnsemble(previous.states.copy(), rng, seeds, 0, previous.theta_ref, "persistent")
    if mode == "data":
        if data is None:
            raise InvalidInputError("init mode 'data' needs a dataset")
        if data.p != p:
            raise InvalidInputError(f"dataset has p={data.p}, expected {p}")
        rows = rng.integers(0, data.n, size=q)
        states = data.samples[rows].copy()
    else:
        states = (rng.random((q, p)) < 0.5).astype(np.uint8)
    return ChainEnsemble(states, rng, seeds, 0, None, mode)


def conditional_prob(theta: ModelParams, x, i: int) -> float:
    """``P(X_i = 1 | x_-i) = sigmoid(theta_ii + sum_{k != i} xi_ik x_k)``."""
    if not 0 <= i < theta.p:
        raise InvalidInputError(f"site {i} out of range for p={theta.p}")
    x = as_states(x, theta.p)[0].astype(np.float64)
    return float(expit(theta.node_potentials[i] + theta.couplings[i] @ x))


def gibbs_one_sweep(ensemble: ChainEnsemble, theta: ModelParams) -> ChainEnsemble:
    """Resample sites 0..p-1 in order in every chain; mutates and returns ``ensemble``."""
    if ensemble.p != theta.p:
        raise InvalidInputError(f"ensemble has p={ensemble.p} but model has p={theta.p}")
    w = theta.couplings
    h = theta.node_potentials
    x = ensemble.states.astype(np.float64)
    u = ensemble.rng.random((ensemble.q, ensemble.p))
    for i in range(theta.p):
        x[:, i] = u[:, i] < expit(x @ w[:, i] + h[i])
    ensemble.states[:] = x
    ensemble.sweeps_done += 1
    ensemble.theta_ref = theta
    return ensemble


def estimate_from_states(states: np.ndarray, data_moments, indexer: FeatureIndexer, tau: int) -> GradEstimate:
    q = states.shape[0]
    if q < 2:
        raise InvalidInputError("sample variances need q >= 2")
    mu = moment_vector(states, indexer)
    # unbiased variance of a 0/1 statistic, exact from its mean
    var = mu * (1.0 - mu) * (q / (q - 1))
    delta = mu - np.asarray(data_moments, dtype=np.float64)
    return GradEstimate(delta, mu, var, int(tau), q)


def grad_estimate(theta: ModelParams, data_moments, ensemble: ChainEnsemble, sweeps: int) -> GradEstimate:
    """Run ``sweeps`` Gibbs sweeps, then form ``E_S psi - E_X psi`` and per-feature variances."""
    if sweeps < 1:
        raise InvalidInputError("need at least one sweep")
    if ensemble.q < 2:
        raise InvalidInputError("sample variances need q >= 2")
    data_moments = np.asarray(data_moments, dtype=np.float64)
    if data_moments.shape != (theta.m,):
        raise InvalidInputError(f"data moments have shape {data_moments.shape}, expected ({theta.m},)")
    for _ in range(sweeps):
        gibbs_one_sweep(ensemble, theta)
    return estimate_from_states(ensemble.states, data_moments, theta.indexer, ensemble.sweeps_done)
