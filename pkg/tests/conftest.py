import numpy as np
import pytest

from hynb.model import ModelParams, ProbabilityTensor, assign_labels, sample


def symmetric_instance(n, r, q, c_in, c_out, seed=0):
    params = ModelParams.symmetric(n, r, q, c_in, c_out)
    sigma = assign_labels(params, seed=seed)
    return params, sigma, sample(params, sigma, seed=seed)


def er_params(n, q, d):
    """Single-block model with constant tensor d."""
    return ModelParams(ProbabilityTensor(1, q, {(0,) * q: d}), np.array([1.0]), n)


@pytest.fixture
def four_block_params():
    return ModelParams.symmetric(2000, 4, 4, 130.0, 2.0)


@pytest.fixture
def two_block_q3():
    return ModelParams.symmetric(200, 2, 3, 12.0, 4.0)
