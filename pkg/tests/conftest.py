import numpy as np
import pytest
from hypothesis import settings

from monadforge.numkernel import make_rng, random_complex
from monadforge.sampling import SampleSpec, sample_config

settings.register_profile("monadforge", deadline=None, max_examples=50)
settings.load_profile("monadforge")


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def valid_k1n2():
    from monadforge.sampling import canonical_examples

    return canonical_examples()[0].configuration


def sampled(k, n, seed=0):
    return sample_config(SampleSpec(k, n, seed))[0]


def well_conditioned(rng, k, spread=10.0):
    q1, _ = np.linalg.qr(random_complex(rng, k, k))
    q2, _ = np.linalg.qr(random_complex(rng, k, k))
    return q1 @ np.diag(np.linspace(1.0, spread, k)) @ q2
