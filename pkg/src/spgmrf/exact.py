"""Brute-force inference over {0,1}^p for small models.

State ``s`` encodes the assignment with ``x[i] = (s >> i) & 1``. Everything
here enumerates all 2^p states, so it is a ground-truth tool for tests and
instrumented runs, not for learning at scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .errors import CapacityError, InvalidInputError
from .model import Dataset, ModelParams, as_states, l1_norm

ENUM_CAP = 20
KERNEL_CAP = 12


def _check_cap(p: int, cap: int):
    if p > cap:
        raise CapacityError(f"p={p} exceeds the enumeration cap of {cap}")


@lru_cache(maxsize=8)
def all_states(p: int) -> np.ndarray:
    """``(2^p, p)`` uint8 array; row ``s`` is the assignment encoded by ``s``."""
    s = np.arange(2**p, dtype=np.int64)
    states = ((s[:, None] >> np.arange(p)) & 1).astype(np.uint8)
    states.flags.writeable = False
    return states


def encode(x) -> int:
    x = as_states(x)[0]
    return int(np.sum(x.astype(np.int64) << np.arange(x.size)))


def decode(s: int, p: int) -> np.ndarray:
    return ((int(s) >> np.arange(p)) & 1).astype(np.uint8)


def energies(theta: ModelParams, cap: int = ENUM_CAP) -> np.ndarray:
    """``theta . psi(x)`` for every state, built by doubling over the top bit."""
    p = theta.p
    _check_cap(p, cap)
    mat = theta.matrix
    e = np.zeros(1)
    for k in range(p):
        low = all_states(k).astype(np.float64) if k else np.zeros((1, 0))
        e = np.concatenate([e, e + mat[k, k] + low @ mat[k, :k]])
    return e


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    p: int
    probs: np.ndarray
    log_partition: float


def distribution(theta: ModelParams, cap: int = ENUM_CAP) -> ExactDistribution:
    e = energies(theta, cap)
    shift = e.max()
    w = np.exp(e - shift)
    z = np.sum(w)
    return ExactDistribution(theta.p, w / z, float(shift + np.log(z)))


def log_partition(theta: ModelParams, cap: int = ENUM_CAP) -> float:
    e = energies(theta, cap)
    shift = e.max()
    return float(shift + np.log(np.sum(np.exp(e - shift))))


def moments_under(dist: np.ndarray, theta_or_p) -> np.ndarray:
    """Expected sufficient statistics under a distribution over states.

    ``dist`` may be a single vector or a stack of distributions (one per row).
    """
    p = theta_or_p if isinstance(theta_or_p, int) else theta_or_p.p
    dist = np.asarray(dist, dtype=np.float64)
    single = dist.ndim == 1
    dist = np.atleast_2d(dist)
    xt = np.ascontiguousarray(all_states(p).T)
    rows, cols = np.triu_indices(p)
    out = np.empty((dist.shape[0], rows.size))
    for k, (i, j) in enumerate(zip(rows, cols)):
        mask = xt[i] & xt[j]
        out[:, k] = np.sum(dist * mask, axis=1)
    return out[0] if single else out


def exact_moments(theta: ModelParams, cap: int = ENUM_CAP) -> np.ndarray:
    return moments_under(distribution(theta, cap).probs, theta.p)


def exact_gradient(theta: ModelParams, data: Dataset, cap: int = ENUM_CAP) -> np.ndarray:
    if theta.p != data.p:
        raise InvalidInputError(f"model has p={theta.p} but data has p={data.p}")
    return exact_moments(theta, cap) - data.empirical_moments


def exact_objective(theta: ModelParams, data: Dataset, lam: float = 0.0, cap: int = ENUM_CAP) -> float:
    """``-<theta, E_X psi> + A(theta) + lam * ||theta||_1``."""
    if theta.p != data.p:
        raise InvalidInputError(f"model has p={theta.p} but data has p={data.p}")
    if lam < 0:
        raise InvalidInputError("lambda must be nonnegative")
    smooth = -float(np.dot(theta.theta, data.empirical_moments)) + log_partition(theta, cap)
    return smooth + lam * l1_norm(theta)


def site_probabilities(theta: ModelParams, cap: int = ENUM_CAP) -> np.ndarray:
    """``P(X_i = 1 | x_-i)`` for every state and site, shape ``(2^p, p)``."""
    _check_cap(theta.p, cap)
    x = all_states(theta.p).astype(np.float64)
    field = x @ theta.couplings + theta.node_potentials
    return expit(field)


def push_sweeps(theta: ModelParams, dist, sweeps: int = 1, cap: int = KERNEL_CAP) -> np.ndarray:
    """Propagate distribution(s) over states through systematic-scan sweeps.

    Applies the single-site kernels for sites 0..p-1 in order, ``sweeps`` times,
    without ever forming a ``2^p x 2^p`` matrix.
    """
    p = theta.p
    _check_cap(p, cap)
    d = np.array(dist, dtype=np.float64)
    single = d.ndim == 1
    d = np.atleast_2d(d)
    if d.shape[1] != 2**p:
        raise InvalidInputError(f"distribution has {d.shape[1]} states, expected {2**p}")
    prob1 = site_probabilities(theta, cap)
    # P(X_i=1 | x_-i) ignores x_i, so read it off the states with bit i clear
    on = [prob1.reshape(2 ** (p - i - 1), 2, 2**i, p)[:, 0, :, i] for i in range(p)]
    n = d.shape[0]
    for _ in range(sweeps):
        for i in range(p):
            blk = d.reshape(n, 2 ** (p - i - 1), 2, 2**i)
            total = blk[:, :, 0, :] + blk[:, :, 1, :]
            blk[:, :, 1, :] = total * on[i]
            blk[:, :, 0, :] = total * (1.0 - on[i])
    return d[0] if single else d


def gibbs_sweep_kernel(theta: ModelParams, cap: int = KERNEL_CAP) -> np.ndarray:
    """Dense one-sweep transition matrix; row ``s`` is the law after a sweep from ``s``."""
    _check_cap(theta.p, cap)
    return push_sweeps(theta, np.eye(2**theta.p), 1, cap)


def point_mass(x0, p: int) -> np.ndarray:
    s = x0 if isinstance(x0, (int, np.integer)) else encode(as_states(x0, p)[0])
    if not 0 <= s < 2**p:
        raise InvalidInputError(f"state {s} out of range for p={p}")
    d = np.zeros(2**p)
    d[s] = 1.0
    return d


def tv_distance(u, v) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(u) - np.asarray(v))))


def exact_tv_after_tau(theta: ModelParams, x0, tau: int, cap: int = KERNEL_CAP) -> float:
    """TV distance between the chain law after ``tau`` sweeps from ``x0`` and P_theta."""
    if tau < 0:
        raise InvalidInputError("tau must be nonnegative")
    _check_cap(theta.p, cap)
    target = distribution(theta, cap).probs
    d = push_sweeps(theta, point_mass(x0, theta.p), tau, cap)
    return tv_distance(d, target)


def tv_profile(theta: ModelParams, taus, cap: int = KERNEL_CAP) -> np.ndarray:
    """TV distance for every initial state and every ``tau`` in ``taus``.

    Returns shape ``(len(taus), 2^p)``; column ``s`` starts from state ``s``.
    """
    _check_cap(theta.p, cap)
    taus = sorted(int(t) for t in taus)
    target = distribution(theta, cap).probs
    d = np.eye(2**theta.p)
    out, done = [], 0
    for t in taus:
        d = push_sweeps(theta, d, t - done, cap)
        done = t
        out.append(0.5 * np.sum(np.abs(d - target), axis=1))
    return np.array(out)


def expected_delta(theta: ModelParams, init_dist, tau: int, cap: int = KERNEL_CAP) -> np.ndarray:
    """Exact ``E[delta | x0]``: moments after ``tau`` sweeps minus model moments.

    ``init_dist`` may be a stack of point masses, giving one row per start.
    """
    d = push_sweeps(theta, init_dist, tau, cap)
    return moments_under(d, theta.p) - exact_moments(theta, cap)


def dobrushin_influence(theta: ModelParams, cap: int = ENUM_CAP) -> np.ndarray:
    """Exact Dobrushin influence matrix; ``C[i, j]`` is the influence of j on i.

    For binary sites the TV distance between two conditionals is the absolute
    difference of their ``P(X_i = 1 | .)``.
    """
    p = theta.p
    prob1 = site_probabilities(theta, cap)
    s = np.arange(2**p)
    c = np.zeros((p, p))
    for j in range(p):
        c[:, j] = np.max(np.abs(prob1 - prob1[s ^ (1 << j)]), axis=0)
    np.fill_diagonal(c, 0.0)
    return c
