import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monadforge.configuration import (
    DUAL,
    FORWARD,
    MAX_MARGIN,
    Configuration,
    GroupElement,
    TangentGroupElement,
    act,
    check_integrable,
    check_nondegenerate,
    find_witness,
    integrability_residual,
    lie_act,
    lie_action_matrix,
    stabilizer_dimension,
    validate,
    witness_residuals,
)
from monadforge.exceptions import InvalidGroupElementError, ShapeError
from monadforge.numkernel import eigenvalues, make_rng, random_complex
from monadforge.sampling import random_configuration, random_group_element

from conftest import sampled

seeds = st.integers(min_value=0, max_value=2**32)
small = st.sampled_from([(1, 2), (1, 3), (2, 2), (2, 3), (3, 3)])


def test_shapes_checked():
    with pytest.raises(ShapeError):
        Configuration(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((1, 1)),
                      np.zeros((2, 1)), np.zeros((1, 2)))


def test_matrices_are_immutable():
    C = Configuration.zeros(1, 2)
    with pytest.raises(ValueError):
        C.a1[0, 0] = 1


def test_vector_round_trip(rng):
    C = random_configuration(2, 3, 1)
    assert Configuration.from_vector(C.to_vector(), 2, 3) == C
    assert C.to_vector().shape == (3 * 4 + 2 * 6,)


def test_residual_examples():
    assert np.all(integrability_residual(Configuration.zeros(2, 2)) == 0)
    C = Configuration([[0]], [[0]], [[0]], [[0, 1]], [[1], [0]])
    assert np.all(integrability_residual(C) == 0)
    C = Configuration(np.array([[0, 1], [0, 0]]), np.array([[0, 0], [1, 0]]), np.eye(2),
                      np.zeros((2, 2)), np.zeros((2, 2)))
    mu = integrability_residual(C)
    np.testing.assert_array_equal(mu, np.diag([1, -1]))
    assert np.linalg.norm(mu) == pytest.approx(np.sqrt(2))
    assert not check_integrable(C)[0]


def test_nondegenerate_examples(valid_k1n2):
    v = check_nondegenerate(valid_k1n2)
    assert v.nondegenerate and v.margin > 0

    v = check_nondegenerate(Configuration.zeros(1, 1))
    assert not v.nondegenerate
    w = v.witness
    assert w.side == FORWARD
    assert w.lam == (0, 0)
    assert w.mu == (1, 0)

    C = Configuration([[1]], [[2]], [[3]], [[0]], [[5]])
    w = check_nondegenerate(C).witness
    assert w.side == DUAL
    assert w.lam == pytest.approx((3, 6))
    # mu is defined up to scale; compare directions
    ratio = w.mu[0] / w.mu[1]
    assert ratio == pytest.approx(-2.0)


def test_empty_configuration_valid():
    report = validate(Configuration.zeros(0, 3))
    assert report.valid and report.margin == MAX_MARGIN


def test_report_reason_order():
    C = Configuration(np.array([[0, 1], [0, 0]]), np.array([[0, 0], [1, 0]]), np.eye(2),
                      np.zeros((2, 2)), np.zeros((2, 2)))
    assert validate(C).reason == "non-integrable"
    assert validate(Configuration.zeros(1, 1)).reason == "degenerate"


def test_act_example():
    C = Configuration([[1]], [[2]], [[3]], [[0, 1]], [[1], [0]])
    g = GroupElement(2 * np.eye(1), np.eye(1))
    D = act(g, C)
    assert D.a1[0, 0] == 2 and D.a2[0, 0] == 4 and D.x[0, 0] == 1.5
    np.testing.assert_array_equal(D.b, [[0, 2]])
    np.testing.assert_array_equal(D.c, C.c)


def test_singular_group_element_rejected():
    with pytest.raises(InvalidGroupElementError):
        GroupElement(np.zeros((1, 1)), np.eye(1))


def test_lie_act_example():
    C = random_configuration(2, 3, 4)
    h = TangentGroupElement(np.eye(2), np.eye(2))
    out = lie_act(h, C)
    for got, want in zip(out, (0 * C.a1, 0 * C.a2, 0 * C.x, C.b, -C.c)):
        np.testing.assert_allclose(got, want, atol=1e-14)


def test_lie_act_is_derivative_of_act(rng):
    C = random_configuration(2, 2, 5)
    h0, h1 = random_complex(rng, 2, 2), random_complex(rng, 2, 2)
    s = 1e-6
    fwd = act(GroupElement(np.eye(2) + s * h0, np.eye(2) + s * h1), C)
    bwd = act(GroupElement(np.eye(2) - s * h0, np.eye(2) - s * h1), C)
    fd = (fwd.to_vector() - bwd.to_vector()) / (2 * s)
    exact = np.concatenate([m.ravel() for m in lie_act(TangentGroupElement(h0, h1), C)])
    assert np.linalg.norm(fd - exact) <= 1e-6 * (1 + np.linalg.norm(exact))
    hv = np.concatenate([h0.ravel(), h1.ravel()])
    np.testing.assert_allclose(lie_action_matrix(C) @ hv, exact, atol=1e-12)


def test_stabilizer_examples(valid_k1n2):
    assert stabilizer_dimension(Configuration.zeros(1, 1)) == 2
    assert stabilizer_dimension(valid_k1n2) == 0
    # a configuration with b = c = 0 and scalar blocks is fixed by (t, t)
    C = Configuration(np.eye(2), np.eye(2), np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))
    assert stabilizer_dimension(C) >= 1


@given(seeds, small, seeds)
def test_residual_equivariant(seed, shape, gseed):
    C = random_configuration(*shape, seed)
    g = random_group_element(shape[0], gseed)
    lhs = integrability_residual(act(g, C))
    rhs = g.g0 @ integrability_residual(C) @ np.linalg.inv(g.g1)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * (1 + np.linalg.norm(rhs)) * 100


@given(seeds, small, seeds)
def test_validity_is_invariant(seed, shape, gseed):
    C = sampled(*shape, seed)
    g = random_group_element(shape[0], gseed)
    assert validate(act(g, C)).valid


@given(seeds, small)
def test_group_law(seed, shape):
    k, n = shape
    C = random_configuration(k, n, seed)
    g, h = random_group_element(k, seed + 1), random_group_element(k, seed + 2)
    lhs, rhs = act(g @ h, C), act(g, act(h, C))
    assert np.linalg.norm(lhs.to_vector() - rhs.to_vector()) <= 1e-10 * (1 + C.norm()) * 100


@given(seeds, small)
def test_sampled_configurations_locally_free(seed, shape):
    assert stabilizer_dimension(sampled(*shape, seed)) == 0


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_zero_framing_integrable_is_degenerate(seed, k, n):
    # b = c = 0 with commuting x a1 and x a2
    rng = make_rng(seed)
    P = random_complex(rng, k, k)
    x = np.eye(k)
    a1 = P @ np.diag(random_complex(rng, k, 1)[:, 0]) @ np.linalg.inv(P)
    a2 = P @ np.diag(random_complex(rng, k, 1)[:, 0]) @ np.linalg.inv(P)
    C = Configuration(a1, a2, x, np.zeros((k, n)), np.zeros((n, k)))
    assert check_integrable(C)[0]
    assert not check_nondegenerate(C).nondegenerate


@given(seeds)
def test_k1_n1_never_valid(seed):
    rng = make_rng(seed)
    a1, a2, x, c = (random_complex(rng, 1, 1) for _ in range(4))
    C = Configuration(a1, a2, x, np.zeros((1, 1)), c)
    assert check_integrable(C)[0]
    assert not validate(C).valid


@given(seeds, small)
def test_witness_is_sound(seed, shape):
    k, n = shape
    rng = make_rng(seed)
    C = random_configuration(k, n, seed).replace(c=np.zeros((n, k)))
    verdict = check_nondegenerate(C)
    if verdict.nondegenerate:
        return
    w = verdict.witness
    res = witness_residuals(C, w.side, w.lam, w.mu, w.vec)
    assert max(res) <= 1e-6 * (1 + C.norm())
    assert abs(np.linalg.norm(w.vec) - 1) < 1e-12
    assert abs(w.lam[0] * w.mu[0] + w.lam[1] * w.mu[1]) <= 1e-8 * (1 + C.norm())


def _planted(seed, k, n):
    """Forward-degenerate data with a chosen joint eigenvector."""
    rng = make_rng(seed)
    v = random_complex(rng, k, 1)
    v /= np.linalg.norm(v)
    l1, l2 = random_complex(rng, 1, 2)[0]
    x = random_complex(rng, k, k) + 3 * np.eye(k)
    u = l1 * np.linalg.solve(x, v)
    proj = v @ v.conj().T
    a1 = random_complex(rng, k, k) @ (np.eye(k) - proj) + u @ v.conj().T
    a2 = random_complex(rng, k, k) @ (np.eye(k) - proj) + (l2 / l1) * u @ v.conj().T
    c = random_complex(rng, n, k) @ (np.eye(k) - proj)
    b = random_complex(rng, k, n)
    return Configuration(a1, a2, x, b, c), (l1, l2)


@given(seeds, small)
def test_planted_joint_eigenvector_detected(seed, shape):
    C, lam = _planted(seed, *shape)
    verdict = find_witness(C, FORWARD)
    assert not verdict.nondegenerate
    w = verdict.witness
    assert np.allclose(w.lam, lam, atol=1e-6 * (1 + C.norm()))


@given(seeds, small)
def test_dual_spectrum_matches(seed, shape):
    C = random_configuration(*shape, seed)
    ev1 = np.sort_complex(eigenvalues(C.x @ C.a1))
    ev2 = np.sort_complex(eigenvalues(C.a1.T @ C.x.T))
    ev3 = eigenvalues(C.a1 @ C.x)
    np.testing.assert_allclose(ev1, ev2, atol=1e-8 * (1 + C.norm() ** 2))
    for z in ev1:
        assert np.min(np.abs(ev3 - z)) <= 1e-6 * (1 + C.norm() ** 2)
