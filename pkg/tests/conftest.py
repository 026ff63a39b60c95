import itertools
import math

import numpy as np
import pytest

from spgmrf.model import ModelParams


def random_theta(rng, p, scale=1.0):
    m = p * (p + 1) // 2
    return ModelParams.from_vector(p, rng.normal(0.0, scale, m))


def naive_log_partition(theta: ModelParams) -> float:
    """Loop over states with plain floats; deliberately shares no code with spgmrf.exact."""
    p = theta.p
    terms = []
    for x in itertools.product((0, 1), repeat=p):
        e = 0.0
        for i in range(p):
            for j in range(i, p):
                e += theta.xi(i, j) * x[i] * x[j]
        terms.append(math.exp(e))
    return math.log(math.fsum(terms))


def naive_conditional(theta: ModelParams, x, i) -> float:
    field = theta.xi(i, i) + sum(theta.xi(i, k) * x[k] for k in range(theta.p) if k != i)
    return 1.0 / (1.0 + math.exp(-field))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.SCORECARD:
        terminalreporter.section("acceptance scorecard")
        for line in sorted(mod.SCORECARD, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
