"""Binary pairwise MRF parameters, feature layout and datasets.

Features are the products ``x_i * x_j`` for ``i <= j`` laid out row-major over
the upper triangle, diagonal included:
``(0,0), (0,1), ..., (0,p-1), (1,1), ..., (p-1,p-1)``. Nodes are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class FeatureIndexer:
    p: int

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise InvalidInputError(f"node count must be a positive integer, got {self.p!r}")

    @property
    def m(self) -> int:
        return self.p * (self.p + 1) // 2

    @cached_property
    def rows(self) -> np.ndarray:
        return np.triu_indices(self.p)[0]

    @cached_property
    def cols(self) -> np.ndarray:
        return np.triu_indices(self.p)[1]

    @cached_property
    def diagonal(self) -> np.ndarray:
        """Linear indices of the node features ``(i, i)``."""
        return np.flatnonzero(self.rows == self.cols)

    @cached_property
    def offdiagonal(self) -> np.ndarray:
        return np.flatnonzero(self.rows != self.cols)

    def to_index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        if not (0 <= i and j < self.p):
            raise InvalidInputError(f"pair ({i}, {j}) out of range for p={self.p}")
        return i * self.p - i * (i - 1) // 2 + (j - i)

    def to_pair(self, k: int) -> tuple[int, int]:
        if not 0 <= k < self.m:
            raise InvalidInputError(f"feature index {k} out of range for m={self.m}")
        return int(self.rows[k]), int(self.cols[k])


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Parameter vector of a binary pairwise MRF in canonical feature order.

    ``theta[idx(i, i)]`` is the node potential of ``i`` and ``theta[idx(i, j)]``
    the coupling between ``i`` and ``j``.
    """

    indexer: FeatureIndexer
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if theta.shape != (self.indexer.m,):
            raise InvalidInputError(
                f"theta has {theta.size} entries, expected m={self.indexer.m} for p={self.indexer.p}"
            )
        if not np.all(np.isfinite(theta)):
            raise InvalidInputError("theta contains non-finite entries")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zeros(cls, p: int) -> "ModelParams":
        idx = FeatureIndexer(p)
        return cls(idx, np.zeros(idx.m))

    @classmethod
    def from_vector(cls, p: int, theta) -> "ModelParams":
        return cls(FeatureIndexer(p), theta)

    @classmethod
    def from_matrix(cls, mat) -> "ModelParams":
        """Build from a symmetric matrix holding node potentials on the diagonal."""
        mat = np.asarray(mat, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidInputError("expected a square matrix")
        idx = FeatureIndexer(mat.shape[0])
        return cls(idx, mat[idx.rows, idx.cols])

    @property
    def p(self) -> int:
        return self.indexer.p

    @property
    def m(self) -> int:
        return self.indexer.m

    def xi(self, i: int, j: int) -> float:
        return float(self.theta[self.indexer.to_index(i, j)])

    @cached_property
    def matrix(self) -> np.ndarray:
        """Symmetric ``p x p`` view: couplings off the diagonal, node potentials on it."""
        idx = self.indexer
        mat = np.zeros((idx.p, idx.p))
        mat[idx.rows, idx.cols] = self.theta
        mat[idx.cols, idx.rows] = self.theta
        mat.flags.writeable = False
        return mat

    @cached_property
    def couplings(self) -> np.ndarray:
        """Symmetric coupling matrix with zero diagonal."""
        w = self.matrix.copy()
        np.fill_diagonal(w, 0.0)
        w.flags.writeable = False
        return w

    @property
    def node_potentials(self) -> np.ndarray:
        return np.diagonal(self.matrix)

    def with_theta(self, theta) -> "ModelParams":
        return ModelParams(self.indexer, theta)


def as_states(x, p: int | None = None) -> np.ndarray:
    """Validate and coerce assignments to a ``(n, p)`` uint8 array of 0/1."""
    arr = np.asarray(x)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InvalidInputError("assignments must be a vector or a 2-D array")
    if p is not None and arr.shape[1] != p:
        raise InvalidInputError(f"assignment length {arr.shape[1]} does not match p={p}")
    if not np.all((arr == 0) | (arr == 1)):
        raise InvalidInputError("assignment entries must be 0 or 1")
    return arr.astype(np.uint8)


def moment_vector(states: np.ndarray, indexer: FeatureIndexer) -> np.ndarray:
    """Mean of the sufficient statistics over the rows of ``states``.

    Products of 0/1 values are summed as float64 integers, which is exact and
    independent of summation order for fewer than 2**53 rows.
    """
    x = states.astype(np.float64)
    counts = x.T @ x
    return counts[indexer.rows, indexer.cols] / x.shape[0]


def sufficient_statistics(x, idx: FeatureIndexer) -> np.ndarray:
    x = as_states(x, idx.p)[0].astype(np.float64)
    return x[idx.rows] * x[idx.cols]


def empirical_moments(samples, idx: FeatureIndexer) -> np.ndarray:
    states = np.asarray(samples)
    if states.size == 0:
        raise InvalidInputError("cannot take moments of an empty sample list")
    return moment_vector(as_states(states, idx.p), idx)


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` binary assignments with their cached empirical moment vector."""

    samples: np.ndarray
    indexer: FeatureIndexer
    empirical_moments: np.ndarray = field(init=False)

    def __post_init__(self):
        states = as_states(self.samples, self.indexer.p)
        if states.shape[0] == 0:
            raise InvalidInputError("dataset must contain at least one sample")
        states.flags.writeable = False
        object.__setattr__(self, "samples", states)
        mom = moment_vector(states, self.indexer)
        mom.flags.writeable = False
        object.__setattr__(self, "empirical_moments", mom)

    @classmethod
    def from_samples(cls, samples) -> "Dataset":
        states = as_states(samples)
        return cls(states, FeatureIndexer(states.shape[1]))

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def p(self) -> int:
        return self.indexer.p


def l1_norm(theta: ModelParams | np.ndarray) -> float:
    vec = theta.theta if isinstance(theta, ModelParams) else np.asarray(theta)
    return float(np.sum(np.abs(vec)))


def soft_threshold(a, t: float) -> np.ndarray:
    """Componentwise ``sgn(a) * max(0, |a| - t)``."""
    if t < 0:
        raise InvalidInputError(f"threshold must be nonnegative, got {t}")
    a = np.asarray(a, dtype=np.float64)
    # + 0.0 folds -0.0 into 0.0 so serialized models compare byte-equal
    return np.sign(a) * np.maximum(np.abs(a) - t, 0.0) + 0.0


def unpenalized_objective_terms(theta: ModelParams, data: Dataset) -> float:
    """Linear part of the negative log-likelihood, ``-<theta, E_X psi>``."""
    if theta.p != data.p:
        raise InvalidInputError(f"model has p={theta.p} but data has p={data.p}")
    return -float(np.dot(theta.theta, data.empirical_moments))
