import numpy as np
import pytest

from cutproject.scheme import SchemeSpec

# literal slope used by the worked examples (six-decimal golden conjugate)
ALPHA_GOLDEN = 0.618034


@pytest.fixture
def golden_spec():
    return SchemeSpec(d=1, k=2, alpha=[[ALPHA_GOLDEN]], t=[0.1])


@pytest.fixture
def golden_exact():
    return SchemeSpec.golden(t=0.2)


def random_spec(d, k, seed, with_m=False):
    return SchemeSpec.random(d, k, seed, with_m=with_m)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
