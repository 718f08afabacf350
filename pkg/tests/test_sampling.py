import numpy as np
import pytest

from monadforge.configuration import validate
from monadforge.exceptions import (
    ArgumentError,
    PreconditionError,
    SamplingFailedError,
    UnsampleableError,
    UnsupportedRegimeError,
)
from monadforge.invariants import fingerprint, fingerprints_agree
from monadforge.numkernel import ToleranceModel, derive_seed
from monadforge.sampling import (
    SampleSpec,
    canonical_examples,
    perturb,
    random_group_element,
    sample_batch,
    sample_config,
)
from monadforge.serialization import dumps, loads


def test_sample_example():
    C, attempts = sample_config(SampleSpec(1, 2, 42))
    assert validate(C).valid and attempts >= 1
    C2, _ = sample_config(SampleSpec(1, 2, 42))
    assert C2 == C


def test_regime_errors():
    with pytest.raises(UnsampleableError):
        sample_config(SampleSpec(1, 1, 0))
    with pytest.raises(UnsupportedRegimeError):
        sample_config(SampleSpec(3, 2, 0))
    C, _ = sample_config(SampleSpec(0, 3, 0))
    assert C.k == 0 and validate(C).valid


def test_exhausted_attempts_report_last_failure():
    # an absurd tolerance makes every draw look degenerate
    with pytest.raises(SamplingFailedError) as info:
        sample_config(SampleSpec(2, 2, 0, max_attempts=2, tol=ToleranceModel(1.0)))
    assert info.value.report is not None and not info.value.report.valid


def test_genericity():
    rng = np.random.default_rng(0)
    hits = 0
    trials = 200
    for i in range(trials):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(max(k, 2), 7))
        _, attempts = sample_config(SampleSpec(k, n, derive_seed(99, i)))
        hits += attempts <= 3
    assert hits >= 0.95 * trials


def test_batch_uses_per_index_seeds():
    batch = sample_batch(2, 2, 5, 3)
    assert [i for i, _ in batch] == [0, 1, 2]
    C1, _ = sample_config(SampleSpec(2, 2, derive_seed(5, 1)))
    assert batch[1][1] == C1


def test_group_element_conditioning():
    g = random_group_element(3, 1, max_cond=10.0)
    assert np.linalg.cond(g.g0) <= 10.0 + 1e-8
    assert np.linalg.cond(g.g1) <= 10.0 + 1e-8


def test_perturb_zero_is_identity():
    C, _ = sample_config(SampleSpec(2, 3, 1))
    assert perturb(C, 0.0, 7) == C


@pytest.mark.parametrize("k,n", [(1, 2), (2, 2), (2, 3), (3, 4)])
def test_perturb_stays_valid_and_moves(k, n):
    C, _ = sample_config(SampleSpec(k, n, 3))
    eps = 1e-3
    D = perturb(C, eps, 11)
    assert validate(D).valid
    assert np.linalg.norm(D.to_vector() - C.to_vector()) <= 2 * eps
    assert not fingerprints_agree(fingerprint(C), fingerprint(D), rtol=1e-9)


def test_perturb_preconditions(valid_k1n2):
    from monadforge.configuration import Configuration
    with pytest.raises(PreconditionError):
        perturb(Configuration.zeros(1, 2), 1e-3, 0)
    with pytest.raises(ArgumentError):
        perturb(valid_k1n2, -1.0, 0)


def test_canonical_corpus():
    corpus = canonical_examples()
    assert len(corpus) >= 5
    assert len({e.name for e in corpus}) == len(corpus)
    for example in corpus:
        assert validate(example.configuration).reason == example.expected, example.name
        assert loads(dumps(example.configuration)) == example.configuration
