"""Stochastic proximal gradient for L1-regularized MRF likelihood.

Each iteration draws a Gibbs gradient estimate and takes a soft-thresholded
step. The number of sweeps per estimate comes from a strategy: fixed, ``tau = k``
at iteration ``k``, or TAY, which adds sweeps until the asymptotic error bound
drops below half the generalized gradient norm.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds as bnd
from . import exact
from .errors import InvalidInputError
from .gibbs import GradEstimate, estimate_from_states, gibbs_one_sweep, init_ensemble
from .model import Dataset, ModelParams, soft_threshold

log = logging.getLogger(__name__)

STRATEGIES = ("fixed", "increasing", "tay")


def parse_strategy(text: str) -> tuple[str, int | None]:
    """``"fixed:30"`` -> ``("fixed", 30)``; ``"tay"`` -> ``("tay", None)``."""
    kind, _, arg = text.partition(":")
    if kind not in STRATEGIES:
        raise InvalidInputError(f"unknown strategy {text!r}")
    if kind == "fixed":
        if not arg.isdigit() or int(arg) < 1:
            raise InvalidInputError("fixed strategy needs a positive sweep count, e.g. fixed:30")
        return kind, int(arg)
    if arg:
        raise InvalidInputError(f"strategy {kind!r} takes no argument")
    return kind, None


@dataclass
class SpgConfig:
    alpha: float = 0.4
    lam: float = 0.025
    q: int = 2000
    strategy: str = "tay"
    tau_max: int = 500
    max_iters: int = 100
    stop_tol: float = 0.0
    init_mode: str = "uniform"
    master_seed: int = 0
    beta_total: float = bnd.DEFAULT_BETA_TOTAL
    init_theta: str = "zero"
    init_scale: float = 0.1
    conservative_check: bool = False
    instrument: bool = False
    timing: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInputError("alpha must be positive")
        if self.lam < 0:
            raise InvalidInputError("lambda must be nonnegative")
        if self.q < 2:
            raise InvalidInputError("q must be at least 2")
        if self.tau_max < 1:
            raise InvalidInputError("tau_max must be at least 1")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be at least 1")
        if not 0 < self.beta_total < 1:
            raise InvalidInputError("beta_total must lie in (0, 1)")
        if self.init_theta not in ("zero", "random"):
            raise InvalidInputError("init_theta must be 'zero' or 'random'")
        parse_strategy(self.strategy)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class IterateRecord:
    k: int
    theta: np.ndarray
    tau_used: int
    gnorm: float
    asym_bound: float
    time_ms: float
    delta_f: np.ndarray
    theta_prev: np.ndarray | None = None
    criterion_unmet: bool = False
    conservative_ok: bool | None = None
    nonasym_bound: float | None = None
    exact_obj: float | None = None
    exact_delta_norm: float | None = None
    expected_delta_norm: float | None = None


@dataclass
class SpgResult:
    theta: ModelParams
    history: list = field(default_factory=list)
    theta_avg: ModelParams | None = None


def generalized_gradient(theta_k, delta_f, alpha: float, lam: float) -> np.ndarray:
    """``(theta - S_{alpha lam}(theta - alpha * delta_f)) / alpha``."""
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    theta_k = np.asarray(theta_k, dtype=np.float64)
    nxt = soft_threshold(theta_k - alpha * np.asarray(delta_f), alpha * lam)
    return (theta_k - nxt) / alpha


def spg_step(theta_k, grad: GradEstimate | np.ndarray, cfg: SpgConfig) -> np.ndarray:
    delta_f = grad.delta_f if isinstance(grad, GradEstimate) else np.asarray(grad)
    theta_k = np.asarray(theta_k, dtype=np.float64)
    if delta_f.shape != theta_k.shape:
        raise InvalidInputError("gradient and parameter shapes differ")
    return soft_threshold(theta_k - cfg.alpha * delta_f, cfg.alpha * cfg.lam)


def conservative_q_check(report: bnd.BoundReport, g_norm: float) -> tuple[bool, str]:
    """Non-asymptotic counterpart of the TAY test: ``0 < bound <= ||G||/2``."""
    if not report.nonasym_bound > 0:
        return False, "non-asymptotic bound is not strictly positive"
    if not g_norm > 0:
        return False, "generalized gradient is zero"
    if report.nonasym_bound <= 0.5 * g_norm:
        return True, "ok"
    return False, f"bound {report.nonasym_bound:.4g} exceeds half gradient norm {0.5 * g_norm:.4g}"


def tay_select_tau(theta_k: ModelParams, data_moments, cfg: SpgConfig, ensemble, influence=None):
    """Sweep one step at a time until ``2 sqrt(m) G(B^tau) < ||G_alpha||_2 / 2``.

    Returns ``(grad, tau, report)``; ``grad.meta['criterion_unmet']`` is set when
    ``tau_max`` is reached first.
    """
    inf = influence if influence is not None else bnd.influence_matrix(theta_k)
    scale = 2.0 * math.sqrt(theta_k.m)
    sums = bnd.grand_sums(inf.B, cfg.tau_max)
    grad = None
    met = False
    for tau in range(1, cfg.tau_max + 1):
        gibbs_one_sweep(ensemble, theta_k)
        if inf.bound_divergent and tau < cfg.tau_max:
            # grand sum stays >= 1 so the criterion cannot hold; skip the bookkeeping
            continue
        grad = estimate_from_states(ensemble.states, data_moments, theta_k.indexer, tau)
        g = generalized_gradient(theta_k.theta, grad.delta_f, cfg.alpha, cfg.lam)
        if scale * sums[tau - 1] < 0.5 * float(np.linalg.norm(g)):
            met = True
            break
    grad.meta["criterion_unmet"] = not met
    betas = bnd.default_betas(theta_k.m, cfg.beta_total)
    report = bnd.nonasym_bound(theta_k, grad.tau, grad, betas, influence=inf)
    return grad, grad.tau, report


def _initial_theta(p: int, cfg: SpgConfig) -> ModelParams:
    theta = ModelParams.zeros(p)
    if cfg.init_theta == "random":
        rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(2**31 - 1,)))
        theta = theta.with_theta(rng.normal(0.0, cfg.init_scale, theta.m))
    return theta


def run_spg(data: Dataset, cfg: SpgConfig, callback=None) -> SpgResult:
    """Run SPG on ``data``; deterministic given ``cfg.master_seed``.

    With ``cfg.instrument`` (small p only) each record also carries the exact
    objective, the realized ``||delta||_2`` and the exact expected error given
    the chains' starting states.
    """
    kind, fixed_tau = parse_strategy(cfg.strategy)
    p = data.p
    theta = _initial_theta(p, cfg)
    data_moments = data.empirical_moments
    betas = bnd.default_betas(theta.m, cfg.beta_total)
    history: list[IterateRecord] = []
    running_sum = np.zeros(theta.m)
    ensemble = None
    elapsed = 0.0
    for k in range(cfg.max_iters):
        t0 = time.perf_counter()
        ensemble = init_ensemble(cfg.q, p, cfg.init_mode, cfg.master_seed, data, ensemble, stream=(k,))
        start_states = ensemble.states.copy() if cfg.instrument else None
        inf = bnd.influence_matrix(theta)
        unmet = False
        if kind == "tay":
            grad, tau, report = tay_select_tau(theta, data_moments, cfg, ensemble, inf)
            unmet = grad.meta["criterion_unmet"]
        else:
            tau = fixed_tau if kind == "fixed" else k + 1
            for _ in range(tau):
                gibbs_one_sweep(ensemble, theta)
            grad = estimate_from_states(ensemble.states, data_moments, theta.indexer, tau)
            report = bnd.nonasym_bound(theta, tau, grad, betas, influence=inf)
        g = generalized_gradient(theta.theta, grad.delta_f, cfg.alpha, cfg.lam)
        gnorm = float(np.linalg.norm(g))
        new_theta = spg_step(theta.theta, grad, cfg)
        cons = None
        if cfg.conservative_check:
            cons, reason = conservative_q_check(report, gnorm)
            log.info("iter %d conservative q check: %s", k, reason)
        elapsed += time.perf_counter() - t0
        rec = IterateRecord(
            k=k,
            theta=new_theta.copy(),
            tau_used=tau,
            gnorm=gnorm,
            asym_bound=report.asym_bound,
            time_ms=elapsed * 1e3 if cfg.timing else math.nan,
            delta_f=grad.delta_f,
            theta_prev=theta.theta,
            criterion_unmet=unmet,
            conservative_ok=cons,
            nonasym_bound=report.nonasym_bound,
        )
        if cfg.instrument:
            _instrument(rec, theta, data, cfg, start_states, tau)
        history.append(rec)
        if callback is not None:
            callback(rec)
        change = np.linalg.norm(new_theta - theta.theta) / max(1.0, float(np.linalg.norm(theta.theta)))
        theta = theta.with_theta(new_theta)
        running_sum += new_theta
        if change < cfg.stop_tol:
            break
    avg = theta.with_theta(running_sum / len(history))
    return SpgResult(theta, history, avg)


def _instrument(rec: IterateRecord, theta: ModelParams, data: Dataset, cfg: SpgConfig, start_states, tau: int):
    grad_exact = exact.exact_gradient(theta, data)
    rec.exact_delta_norm = float(np.linalg.norm(rec.delta_f - grad_exact))
    # objective of the new iterate held by this record
    rec.exact_obj = exact.exact_objective(theta.with_theta(rec.theta), data, cfg.lam)
    p = theta.p
    codes = start_states.astype(np.int64) @ (1 << np.arange(p))
    init = np.bincount(codes, minlength=2**p) / start_states.shape[0]
    rec.expected_delta_norm = float(np.linalg.norm(exact.expected_delta(theta, init, tau)))
