import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monadforge.configuration import Configuration, TangentGroupElement, act
from monadforge.exceptions import PreconditionError
from monadforge.invariants import (
    dimension_report,
    fingerprint,
    fingerprints_agree,
    integrability_jacobian,
    moduli_dimension,
    multisets_match,
    orbit_align,
    orbit_tangent_residual,
    smoothness_check,
    words,
)
from monadforge.configuration import integrability_residual
from monadforge.numkernel import make_rng, random_complex
from monadforge.sampling import random_configuration, random_group_element

from conftest import sampled

seeds = st.integers(min_value=0, max_value=2**32)
small = st.sampled_from([(1, 2), (1, 3), (2, 2), (2, 3), (3, 3)])


def test_words_enumeration():
    assert list(words(2)) == ["", "A", "B", "AA", "AB", "BA", "BB"]


def test_scalar_fingerprint():
    C = Configuration([[1]], [[2]], [[3]], [[0]], [[5]])
    f = fingerprint(C)
    assert f.spec1 == [3] and f.spec2 == [6]
    assert f.word_traces[""] == 1
    assert f.word_traces["AB"] == 18
    assert f.word_traces["ABA"] == 54
    assert all(np.all(e == 0) for e in f.endo_invariants.values())


def test_endo_invariants_vanish_without_x():
    C = random_configuration(2, 3, 0).replace(x=np.zeros((2, 2)))
    assert all(np.all(e == 0) for e in fingerprint(C).endo_invariants.values())


def test_multiset_matching():
    assert multisets_match([1, 2j], [2j, 1])
    assert not multisets_match([1, 1], [1, 2])
    assert not multisets_match([1], [1, 1])


@given(seeds, small, seeds)
def test_fingerprint_is_orbit_invariant(seed, shape, gseed):
    C = random_configuration(*shape, seed)
    g = random_group_element(shape[0], gseed)
    assert fingerprints_agree(fingerprint(C), fingerprint(act(g, C)))


def test_align_with_itself():
    C = sampled(2, 2, 1)
    res = orbit_align(C, C)
    assert res.found and res.transporter_dimension == 1
    np.testing.assert_allclose(res.g.g0, np.eye(2), atol=1e-8)
    np.testing.assert_allclose(res.g.g1, np.eye(2), atol=1e-8)


@given(seeds, small, seeds)
def test_align_recovers_group_element(seed, shape, gseed):
    C = sampled(*shape, seed)
    g = random_group_element(shape[0], gseed)
    res = orbit_align(C, act(g, C))
    assert res.found
    assert res.action_residual <= 1e-6
    # free action: the transporter is unique
    np.testing.assert_allclose(res.g.g0, g.g0, atol=1e-6 * np.linalg.norm(g.g0))


def test_align_different_orbits():
    C1, C2 = sampled(2, 2, 1), sampled(2, 2, 2)
    assert not fingerprints_agree(fingerprint(C1), fingerprint(C2))
    res = orbit_align(C1, C2)
    assert not res.found and res.transporter_dimension == 0


def test_jacobian_vanishes_at_zero():
    J = integrability_jacobian(Configuration.zeros(2, 3))
    assert J.shape == (4, 3 * 4 + 2 * 6)
    assert np.all(J == 0)


@given(seeds, small)
def test_jacobian_matches_finite_differences(seed, shape):
    k, n = shape
    C = random_configuration(k, n, seed)
    rng = make_rng(seed + 1)
    d = random_complex(rng, 3 * k * k + 2 * n * k, 1)[:, 0]
    s = 1e-6
    plus = integrability_residual(Configuration.from_vector(C.to_vector() + s * d, k, n))
    minus = integrability_residual(Configuration.from_vector(C.to_vector() - s * d, k, n))
    fd = ((plus - minus) / (2 * s)).ravel()
    exact = integrability_jacobian(C) @ d
    assert np.linalg.norm(fd - exact) <= 1e-6 * (1 + np.linalg.norm(exact))


@given(seeds, small, seeds)
def test_orbit_directions_are_tangent(seed, shape, hseed):
    k = shape[0]
    C = sampled(*shape, seed)
    rng = make_rng(hseed)
    h = TangentGroupElement(random_complex(rng, k, k), random_complex(rng, k, k))
    assert orbit_tangent_residual(C, h) <= 1e-8 * (1 + C.norm()) ** 3


def test_moduli_dimension_examples(valid_k1n2):
    assert moduli_dimension(Configuration.zeros(0, 2)) == 0
    assert moduli_dimension(valid_k1n2) == 4
    assert moduli_dimension(sampled(2, 2, 0)) == 8


@pytest.mark.parametrize("k,n", [(1, 2), (1, 3), (2, 2), (2, 3), (2, 4), (3, 3), (3, 4)])
def test_kernel_accounting(k, n):
    rep = dimension_report(sampled(k, n, 7))
    assert rep.surjective and rep.jacobian_rank == k * k
    assert rep.kernel_dimension == 3 * k * k + 2 * n * k - k * k
    assert rep.stabilizer_dimension == 0
    assert rep.moduli_dimension == 2 * n * k


@given(seeds, small)
def test_smooth_at_valid_points(seed, shape):
    assert smoothness_check(sampled(*shape, seed))


def test_smoothness_needs_valid_point():
    with pytest.raises(PreconditionError):
        smoothness_check(Configuration.zeros(1, 2))
