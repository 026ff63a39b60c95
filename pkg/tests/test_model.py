import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spgmrf.errors import InvalidInputError
from spgmrf.model import Dataset, FeatureIndexer, ModelParams, soft_threshold, sufficient_statistics


@settings(max_examples=64, deadline=None)
@given(st.integers(1, 64))
def test_index_bijection(p):
    idx = FeatureIndexer(p)
    assert idx.m == p * (p + 1) // 2
    seen = set()
    for i in range(p):
        for j in range(i, p):
            k = idx.to_index(i, j)
            assert idx.to_index(j, i) == k
            assert idx.to_pair(k) == (i, j)
            seen.add(k)
    assert seen == set(range(idx.m))


def test_canonical_order_p3():
    idx = FeatureIndexer(3)
    assert [idx.to_pair(k) for k in range(idx.m)] == [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
    assert list(idx.diagonal) == [0, 3, 5]
    assert list(idx.offdiagonal) == [1, 2, 4]


def test_index_out_of_range():
    idx = FeatureIndexer(4)
    with pytest.raises(InvalidInputError):
        idx.to_index(0, 4)
    with pytest.raises(InvalidInputError):
        idx.to_pair(idx.m)


def test_sufficient_statistics_example():
    idx = FeatureIndexer(3)
    assert sufficient_statistics([1, 0, 1], idx).tolist() == [1, 0, 1, 0, 0, 1]


def test_matrix_roundtrip(rng):
    theta = ModelParams.from_vector(5, rng.normal(size=15))
    mat = theta.matrix
    assert np.array_equal(mat, mat.T)
    assert np.array_equal(ModelParams.from_matrix(mat).theta, theta.theta)
    assert np.all(np.diagonal(theta.couplings) == 0)


def test_theta_validation():
    with pytest.raises(InvalidInputError):
        ModelParams.from_vector(3, np.zeros(5))
    with pytest.raises(InvalidInputError):
        ModelParams.from_vector(2, [0.0, np.nan, 0.0])


def test_theta_is_read_only():
    theta = ModelParams.zeros(3)
    with pytest.raises(ValueError):
        theta.theta[0] = 1.0


def test_dataset_moments():
    data = Dataset.from_samples([[1, 0, 1], [0, 1, 1], [1, 1, 0], [0, 0, 0]])
    assert data.n == 4 and data.p == 3
    assert data.empirical_moments.tolist() == [0.5, 0.25, 0.25, 0.5, 0.25, 0.5]


def test_dataset_rejects_nonbinary_and_empty():
    with pytest.raises(InvalidInputError):
        Dataset.from_samples([[0, 2]])
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((0, 3), dtype=np.uint8), FeatureIndexer(3))


def test_soft_threshold_examples():
    out = soft_threshold([1.5, -0.3, 0.2, -2.0], 0.5)
    assert out.tolist() == [1.0, 0.0, 0.0, -1.5]
    assert not np.signbit(soft_threshold([-0.1], 0.5)[0])
    with pytest.raises(InvalidInputError):
        soft_threshold([1.0], -0.1)


floats = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.lists(st.tuples(floats, floats), min_size=1, max_size=20), st.floats(0, 10))
def test_soft_threshold_nonexpansive(pairs, t):
    a = np.array([x for x, _ in pairs])
    b = np.array([y for _, y in pairs])
    lhs = np.abs(soft_threshold(a, t) - soft_threshold(b, t))
    assert np.all(lhs <= np.abs(a - b) + 1e-12)


@given(st.lists(floats, min_size=1, max_size=20), st.floats(0, 10))
def test_soft_threshold_is_prox_of_l1(values, t):
    # prox property: the output minimizes 0.5 (z - a)^2 + t |z| componentwise
    a = np.array(values)
    z = soft_threshold(a, t)
    obj = lambda v: 0.5 * (v - a) ** 2 + t * np.abs(v)
    for delta in (-1e-3, 1e-3):
        assert np.all(obj(z) <= obj(z + delta) + 1e-9)
