import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import naive_conditional, naive_log_partition, random_theta
from spgmrf import exact
from spgmrf.errors import CapacityError, InvalidInputError
from spgmrf.model import Dataset, ModelParams

# p=3 reference model and its moments, computed once with the naive loop oracle
THETA3 = [0.3, -0.7, 0.5, -0.2, 1.1, 0.05]
A3 = 2.5298545149804412
MOM3 = [0.5653401343495981, 0.2713949666665785, 0.41407190129999416,
        0.5426288121305879, 0.433675875342557, 0.7038323778392997]
ROWS3 = [[1, 0, 1], [0, 1, 1], [1, 1, 0], [0, 0, 0]]
OBJ3_LAM01 = 2.514854514980441


def test_log_partition_zero_theta():
    for p in range(1, 8):
        assert exact.log_partition(ModelParams.zeros(p)) == pytest.approx(p * np.log(2), rel=1e-14)


def test_frozen_p3_values():
    theta = ModelParams.from_vector(3, THETA3)
    assert exact.log_partition(theta) == pytest.approx(A3, rel=1e-13)
    np.testing.assert_allclose(exact.exact_moments(theta), MOM3, rtol=1e-12)
    data = Dataset.from_samples(ROWS3)
    assert exact.exact_objective(theta, data, 0.1) == pytest.approx(OBJ3_LAM01, rel=1e-13)


def test_p2_single_coupling():
    # Z = 3 + e, E[x1 x2] = e / (3 + e)
    theta = ModelParams.from_vector(2, [0.0, 1.0, 0.0])
    e = np.e
    assert exact.log_partition(theta) == pytest.approx(np.log(3 + e), rel=1e-14)
    assert exact.exact_moments(theta)[1] == pytest.approx(e / (3 + e), rel=1e-14)


def test_against_naive_oracle(rng):
    for p in (1, 2, 3, 5, 6):
        theta = random_theta(rng, p, 1.5)
        assert exact.log_partition(theta) == pytest.approx(naive_log_partition(theta), rel=1e-12)


def test_large_theta_no_overflow():
    theta = ModelParams.from_vector(3, np.full(6, 300.0))
    a = exact.log_partition(theta)
    assert np.isfinite(a) and a == pytest.approx(1800.0, rel=1e-12)


def test_moments_sum_to_one_and_state_codes():
    assert exact.encode([1, 0, 1]) == 5
    assert exact.decode(5, 3).tolist() == [1, 0, 1]
    dist = exact.distribution(ModelParams.from_vector(3, THETA3))
    assert dist.probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_gradient_finite_differences(rng):
    for p in (2, 3, 4):
        theta = random_theta(rng, p)
        data = Dataset.from_samples(rng.integers(0, 2, size=(30, p)))
        g = exact.exact_gradient(theta, data)
        h = 1e-5
        for k in range(theta.m):
            e = np.zeros(theta.m)
            e[k] = h
            fd = (exact.exact_objective(theta.with_theta(theta.theta + e), data)
                  - exact.exact_objective(theta.with_theta(theta.theta - e), data)) / (2 * h)
            assert abs(fd - g[k]) < 1e-7


def test_capacity_and_shape_errors():
    with pytest.raises(CapacityError):
        exact.log_partition(ModelParams.zeros(exact.ENUM_CAP + 1))
    with pytest.raises(CapacityError):
        exact.gibbs_sweep_kernel(ModelParams.zeros(exact.KERNEL_CAP + 1))
    with pytest.raises(InvalidInputError):
        exact.exact_gradient(ModelParams.zeros(3), Dataset.from_samples([[0, 1]]))


def test_site_probabilities_match_conditional(rng):
    theta = random_theta(rng, 4)
    probs = exact.site_probabilities(theta)
    for s in range(16):
        x = exact.decode(s, 4)
        for i in range(4):
            assert probs[s, i] == pytest.approx(naive_conditional(theta, x, i), rel=1e-13)


def _naive_kernel(theta):
    """Sweep kernel as a product of dense single-site matrices."""
    p = theta.p
    K = np.eye(2**p)
    for i in range(p):
        Ki = np.zeros((2**p, 2**p))
        for s in range(2**p):
            x = exact.decode(s, p)
            p1 = naive_conditional(theta, x, i)
            Ki[s, s | (1 << i)] += p1
            Ki[s, s & ~(1 << i)] += 1 - p1
        K = K @ Ki
    return K


def test_sweep_kernel_matches_dense_product(rng):
    theta = random_theta(rng, 4)
    np.testing.assert_allclose(exact.gibbs_sweep_kernel(theta), _naive_kernel(theta), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_kernel_stochastic_and_stationary(p, seed):
    theta = random_theta(np.random.default_rng(seed), p, 1.0)
    K = exact.gibbs_sweep_kernel(theta)
    pi = exact.distribution(theta).probs
    np.testing.assert_allclose(K.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(pi @ K, pi, atol=1e-12)


def test_tv_zero_at_stationarity_and_decreasing(rng):
    theta = random_theta(rng, 3, 0.5)
    prof = exact.tv_profile(theta, range(1, 15))
    assert np.all(np.diff(prof, axis=0) <= 1e-12)
    assert exact.exact_tv_after_tau(theta, [0, 0, 0], 0) > 0
    assert exact.exact_tv_after_tau(theta, [0, 0, 0], 60) < 1e-10


def test_independent_sites_mix_in_one_sweep():
    # with no couplings a single sweep draws every site from its marginal
    theta = ModelParams.from_vector(3, [0.4, 0, 0, -1.0, 0, 2.0])
    for s in range(8):
        assert exact.exact_tv_after_tau(theta, s, 1) < 1e-15


def test_dobrushin_p2():
    theta = ModelParams.from_vector(2, [0.0, 1.0, 0.0])
    C = exact.dobrushin_influence(theta)
    assert C[0, 1] == pytest.approx(0.2310585786300049, rel=1e-13)
    assert C[0, 0] == 0.0
