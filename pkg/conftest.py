import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from problems.nk_problem import NkInstance, NkProblem  # noqa: E402


@pytest.fixture
def onemax_problem():
    """NK com k=0 e tabelas identidade: f = média dos bits"""
    n = 20
    instance = NkInstance(
        n, 0, np.empty((n, 0), dtype=np.int64), np.tile([0.0, 1.0], (n, 1)), seed=0,
        optimum_genome=np.ones(n, dtype=np.uint8),
    )
    return NkProblem(instance, instance_id="onemax-20")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
