import numpy as np
import pytest
from hypothesis import settings

from perlick.model import ModelParams

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

KAPPAS = (-1.0, 0.0, 1.0)
BETAS = ((1, 1), (2, 1), (3, 1), (1, 2), (1, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=KAPPAS, ids=lambda k: f"k{k:+g}")
def kappa(request):
    return request.param


@pytest.fixture(params=BETAS, ids=lambda b: f"b{b[0]}o{b[1]}")
def params(request, kappa):
    m, n = request.param
    return ModelParams(kappa, m, n)
