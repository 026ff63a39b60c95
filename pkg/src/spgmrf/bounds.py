"""Computable bounds on the Gibbs gradient approximation error.

The chain is coupled site by site: after updating site ``i`` the probability
that two copies disagree there is at most ``sum_j U[i, j] * P(disagree at j)``.
Folding one sweep gives ``B = B_{p-1} ... B_0`` and after ``tau`` sweeps the TV
distance to stationarity is at most the grand sum of ``B^tau``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError
from .model import ModelParams

log = logging.getLogger(__name__)

DEFAULT_BETA_TOTAL = 0.01


@dataclass(frozen=True, eq=False)
class InfluenceBound:
    U: np.ndarray
    B: np.ndarray
    spectral_proxy: float
    spectral_radius_B: float

    @property
    def bound_divergent(self) -> bool:
        # nonnegative B with rho(B) >= 1 keeps the grand sum of B^tau >= 1 forever
        return self.spectral_radius_B >= 1.0


@dataclass(frozen=True, eq=False)
class BoundReport:
    tau: int
    grand_sum: float
    asym_bound: float
    eps: np.ndarray
    nonasym_bound: float
    confidence: float
    overflow: bool = False
    low_confidence: bool = False


def influence_bounds_parts(theta: ModelParams):
    """Return ``(U, log_r, log_s, log_bstar)`` for every ordered pair ``(i, j)``."""
    w = theta.couplings
    h = theta.node_potentials
    pos = np.maximum(w, 0.0)
    neg = np.minimum(w, 0.0)
    # sums over k != i, k != j: subtract the j term from the full row sum
    log_r = -h[:, None] - (pos.sum(axis=1)[:, None] - pos)
    log_s = -h[:, None] - (neg.sum(axis=1)[:, None] - neg)
    log_b = np.maximum(log_r, np.minimum(log_s, w / 2.0))
    # |e^-xi - 1| b / ((1 + b e^-xi)(1 + b)) == |P(X_i=1|x_j=0) - P(X_i=1|x_j=1)| at b
    u = np.abs(expit(-log_b) - expit(w - log_b))
    np.fill_diagonal(u, 0.0)
    return u, log_r, log_s, log_b


def influence_matrix(theta: ModelParams) -> InfluenceBound:
    """Upper bound ``U`` on the Dobrushin influence matrix, plus ``B`` and norms."""
    u = influence_bounds_parts(theta)[0]
    b = b_product(u)
    norm_u = float(np.linalg.norm(u, 2)) if u.size else 0.0
    rho = float(np.max(np.abs(np.linalg.eigvals(b)))) if b.size else 0.0
    return InfluenceBound(u, b, norm_u, rho)


def b_product(U) -> np.ndarray:
    """``B_{p-1} ... B_0`` where ``B_i`` is the identity with row ``i`` replaced by ``U[i]``."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidInputError("U must be square")
    b = np.eye(U.shape[0])
    for i in range(U.shape[0]):
        # left-multiplying by B_i only rewrites row i
        b[i] = U[i] @ b
    return b


def grand_sums(B, tau_max: int) -> np.ndarray:
    """Grand sums of ``B^1 .. B^tau_max`` via repeated products with the ones vector."""
    if tau_max < 1:
        raise InvalidInputError("tau must be at least 1")
    B = np.asarray(B, dtype=np.float64)
    v = np.ones(B.shape[0])
    out = np.empty(tau_max)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(tau_max):
            v = B @ v
            out[t] = np.sum(v)
    return out


def grand_sum_pow(B, tau: int) -> float:
    return float(grand_sums(B, tau)[-1])


def asym_bound(theta: ModelParams, tau: int, influence: InfluenceBound | None = None) -> float:
    """``2 sqrt(m) G(B^tau)``, bounding ``||E[delta | x0]||_2`` for every start ``x0``."""
    if tau < 1:
        raise InvalidInputError("tau must be at least 1")
    inf = influence if influence is not None else influence_matrix(theta)
    return 2.0 * math.sqrt(theta.m) * grand_sum_pow(inf.B, tau)


def epsilon_j(V, q: int, beta):
    """Empirical Bernstein half-width for the mean of one feature over ``q`` chains.

    ``2 * (sqrt(V ln(2/beta) / (2q)) + 7 ln(2/beta) / (3 (q-1)))``; vectorized
    over ``V`` and ``beta``.
    """
    V = np.asarray(V, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if q < 2:
        raise InvalidInputError("q must be at least 2")
    if np.any(V < 0):
        raise InvalidInputError("variance must be nonnegative")
    if np.any((beta <= 0) | (beta >= 1)):
        raise InvalidInputError("beta must lie in (0, 1)")
    ln = np.log(2.0 / beta)
    eps = 2.0 * (np.sqrt(V * ln / (2.0 * q)) + 7.0 * ln / (3.0 * (q - 1)))
    return float(eps) if eps.ndim == 0 else eps


def default_betas(m: int, beta_total: float = DEFAULT_BETA_TOTAL) -> np.ndarray:
    """Uniform split ``beta_j = beta_total / (2m)`` so the confidence is ``1 - beta_total``."""
    return np.full(m, beta_total / (2.0 * m))


def nonasym_bound(theta: ModelParams, tau: int, grad, betas=None, influence: InfluenceBound | None = None) -> BoundReport:
    """High-probability bound on ``||delta||_2`` from the sample variances in ``grad``."""
    m = theta.m
    betas = default_betas(m) if betas is None else np.asarray(betas, dtype=np.float64)
    if betas.shape != (m,):
        raise InvalidInputError(f"need {m} betas, got shape {betas.shape}")
    if grad.q < 2:
        raise InvalidInputError("q must be at least 2")
    inf = influence if influence is not None else influence_matrix(theta)
    gs = grand_sum_pow(inf.B, tau)
    eps = epsilon_j(grad.variances, grad.q, betas)
    root_m = math.sqrt(m)
    asym = 2.0 * root_m * gs
    nonasym = 2.0 * root_m * (gs + math.sqrt(float(np.sum(eps**2)) / (4.0 * m)))
    confidence = 1.0 - 2.0 * float(np.sum(betas))
    overflow = not math.isfinite(gs)
    if overflow:
        log.warning("grand sum overflowed at tau=%d; bound is vacuous", tau)
    low = confidence <= 0
    if low:
        log.warning("beta allocation gives confidence %.3g <= 0", confidence)
    return BoundReport(int(tau), gs, asym, eps, nonasym, confidence, overflow, low)
