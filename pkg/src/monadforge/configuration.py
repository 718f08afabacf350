"""
Monad data on the blown-up plane and its local structure.

A configuration is a quintuple of linear maps between ``W0``, ``W1``
(both of dimension ``k``) and ``V`` (dimension ``n``)::

    a1, a2 : W1 -> W0      (k x k)
    x      : W0 -> W1      (k x k)
    b      : V  -> W0      (k x n)
    c      : W1 -> V       (n x k)

The map directions are the ones for which the group action

    (g0, g1) . (a1, a2, x, b, c) = (g0 a1 g1^-1, g0 a2 g1^-1, g1 x g0^-1, g0 b, c g1^-1)

is well defined.

The configuration is *integrable* when ``a1 x a2 - a2 x a1 + b c = 0``.

It is *non-degenerate* when there is no nonzero ``v`` in ``W1`` with

    x a1 v = l1 v,  x a2 v = l2 v,  (m1 a1 + m2 a2) v = 0,  c v = 0

for some ``(l1, l2)`` and ``(m1, m2) != 0`` with ``l1 m1 + l2 m2 = 0``.
There must also be no nonzero covector ``w`` on ``W0`` satisfying the
transposed system: ``a_i``, ``x`` are replaced by their plain transposes
(no complex conjugation) and ``c`` by ``b^T``.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import InvalidGroupElementError, ShapeError
from .numkernel import (
    DEFAULT_TOL,
    ToleranceModel,
    as_matrix,
    cluster_eigenvalues,
    eigenvalues,
    kernel_with_margin,
    pencil_rank_drop,
    rank,
    rank_profile,
)

FORWARD = "forward"
DUAL = "dual"

#: Margin reported when no rank test was needed (k = 0).
MAX_MARGIN = sys.float_info.max

_NAMES = ("a1", "a2", "x", "b", "c")


def _freeze(arr):
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Configuration:
    """Immutable monad datum ``(a1, a2, x, b, c)``.

    ``k`` and ``n`` are read off the shapes of ``b`` (``k x n``). ``k = 0``
    is allowed and gives empty matrices.
    """

    a1: np.ndarray
    a2: np.ndarray
    x: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        b = as_matrix(self.b, name="b")
        k, n = b.shape
        if n < 1:
            raise ShapeError(f"rank n must be >= 1, got {n}")
        shapes = {"a1": (k, k), "a2": (k, k), "x": (k, k), "b": (k, n), "c": (n, k)}
        for name in _NAMES:
            arr = as_matrix(getattr(self, name), *shapes[name], name=name)
            object.__setattr__(self, name, _freeze(arr))

    @property
    def k(self) -> int:
        return self.b.shape[0]

    @property
    def n(self) -> int:
        return self.b.shape[1]

    @property
    def matrices(self) -> tuple:
        return (self.a1, self.a2, self.x, self.b, self.c)

    @classmethod
    def zeros(cls, k: int, n: int) -> "Configuration":
        z = np.zeros((k, k), complex)
        return cls(z, z, z, np.zeros((k, n), complex), np.zeros((n, k), complex))

    def norm(self) -> float:
        """Frobenius norm of the whole quintuple."""
        return float(np.sqrt(sum(np.linalg.norm(m) ** 2 for m in self.matrices)))

    def to_vector(self) -> np.ndarray:
        """Concatenate all entries, row-major, in the order a1, a2, x, b, c."""
        return np.concatenate([m.ravel() for m in self.matrices])

    @classmethod
    def from_vector(cls, vec, k: int, n: int) -> "Configuration":
        vec = np.asarray(vec, dtype=complex)
        sizes = [k * k, k * k, k * k, k * n, n * k]
        if vec.shape != (sum(sizes),):
            raise ShapeError(f"vector of length {sum(sizes)} expected, got {vec.shape}")
        shapes = [(k, k), (k, k), (k, k), (k, n), (n, k)]
        parts, start = [], 0
        for size, shape in zip(sizes, shapes):
            parts.append(vec[start:start + size].reshape(shape))
            start += size
        return cls(*parts)

    def replace(self, **changes) -> "Configuration":
        fields = {name: getattr(self, name) for name in _NAMES}
        fields.update(changes)
        return Configuration(**fields)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return all(
            p.shape == q.shape and np.array_equal(p, q)
            for p, q in zip(self.matrices, other.matrices)
        )

    __hash__ = None

    def __repr__(self):
        return f"Configuration(k={self.k}, n={self.n})"


@dataclass(frozen=True)
class TangentGroupElement:
    """Element ``(h0, h1)`` of the Lie algebra gl(k) x gl(k)."""

    h0: np.ndarray
    h1: np.ndarray

    def __post_init__(self):
        h0 = as_matrix(self.h0, name="h0")
        k = h0.shape[0]
        object.__setattr__(self, "h0", _freeze(as_matrix(h0, k, k, name="h0")))
        object.__setattr__(self, "h1", _freeze(as_matrix(self.h1, k, k, name="h1")))


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Pair ``(g0, g1)`` of invertible ``k x k`` matrices acting on W0 and W1."""

    g0: np.ndarray
    g1: np.ndarray
    tol: ToleranceModel = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        g0 = as_matrix(self.g0, name="g0")
        k = g0.shape[0]
        g0 = as_matrix(g0, k, k, name="g0")
        g1 = as_matrix(self.g1, k, k, name="g1")
        for name, g in (("g0", g0), ("g1", g1)):
            if k and rank(g, self.tol) < k:
                raise InvalidGroupElementError(f"{name} is not numerically invertible")
        object.__setattr__(self, "g0", _freeze(g0))
        object.__setattr__(self, "g1", _freeze(g1))

    @property
    def k(self) -> int:
        return self.g0.shape[0]

    @classmethod
    def identity(cls, k: int) -> "GroupElement":
        return cls(np.eye(k), np.eye(k))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.g0 @ other.g0, self.g1 @ other.g1)

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.g0), np.linalg.inv(self.g1))


@dataclass(frozen=True)
class DegeneracyWitness:
    """Certificate that a configuration violates non-degeneracy.

    ``vec`` is the unit vector ``v`` in W1 (forward side) or the unit
    covector ``w`` on W0 (dual side). ``residuals`` holds the norms of
    the two eigen-equations, the ``mu``-combination and the ``c v`` (or
    ``w b``) equation, in that order.
    """

    side: str
    lam: tuple
    mu: tuple
    vec: np.ndarray
    residuals: tuple

    def to_dict(self) -> dict:
        pair = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "side": self.side,
            "lambda": [pair(z) for z in self.lam],
            "mu": [pair(z) for z in self.mu],
            "vector": [pair(z) for z in self.vec],
            "residuals": [float(r) for r in self.residuals],
        }


@dataclass(frozen=True)
class NondegeneracyVerdict:
    nondegenerate: bool
    witness: DegeneracyWitness | None
    margin: float


@dataclass(frozen=True)
class ValidationReport:
    integrability_residual_norm: float
    integrability_threshold: float
    integrable: bool
    nondegenerate: bool
    witness: DegeneracyWitness | None
    margin: float
    tolerances: ToleranceModel

    @property
    def valid(self) -> bool:
        return self.integrable and self.nondegenerate

    @property
    def reason(self) -> str:
        if not self.integrable:
            return "non-integrable"
        if not self.nondegenerate:
            return "degenerate"
        return "valid"

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "reason": self.reason,
            "integrable": self.integrable,
            "integrability_residual_norm": self.integrability_residual_norm,
            "integrability_threshold": self.integrability_threshold,
            "nondegenerate": self.nondegenerate,
            "margin": self.margin if self.nondegenerate else None,
            "witness": self.witness.to_dict() if self.witness else None,
            "base_tol": self.tolerances.base_tol,
            "relative": self.tolerances.relative,
        }


def integrability_residual(C: Configuration) -> np.ndarray:
    """``a1 x a2 - a2 x a1 + b c`` as a ``k x k`` matrix."""
    return C.a1 @ C.x @ C.a2 - C.a2 @ C.x @ C.a1 + C.b @ C.c


def integrability_threshold(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> float:
    nrm = np.linalg.norm
    scale = 1.0 + nrm(C.a1) * nrm(C.x) * nrm(C.a2) + nrm(C.b) * nrm(C.c)
    return tol.base_tol * float(scale)


def check_integrable(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> tuple[bool, float]:
    """Return ``(integrable, residual_norm)``.

    The residual is compared against
    ``base_tol * (1 + |a1||x||a2| + |b||c|)`` in Frobenius norms.
    """
    res = float(np.linalg.norm(integrability_residual(C)))
    return res <= integrability_threshold(C, tol), res


class _SideData(NamedTuple):
    a1: np.ndarray
    a2: np.ndarray
    x: np.ndarray
    c: np.ndarray


def _side_data(C: Configuration, side: str) -> _SideData:
    if side == FORWARD:
        return _SideData(C.a1, C.a2, C.x, C.c)
    if side == DUAL:
        return _SideData(C.a1.T, C.a2.T, C.x.T, C.b.T)
    raise ValueError(f"side must be {FORWARD!r} or {DUAL!r}, got {side!r}")


def witness_residuals(C: Configuration, side: str, lam, mu, vec) -> tuple:
    """Evaluate the four defining equations of a degeneracy at ``vec``."""
    d = _side_data(C, side)
    vec = np.asarray(vec, dtype=complex)
    A = d.x @ d.a1
    B = d.x @ d.a2
    return (
        float(np.linalg.norm(A @ vec - lam[0] * vec)),
        float(np.linalg.norm(B @ vec - lam[1] * vec)),
        float(np.linalg.norm((mu[0] * d.a1 + mu[1] * d.a2) @ vec)),
        float(np.linalg.norm(d.c @ vec)),
    )


def _make_witness(C, side, lam, mu, vec):
    vec = vec / np.linalg.norm(vec)
    mu = np.asarray(mu, dtype=complex)
    mu = mu / np.linalg.norm(mu)
    lam = (complex(lam[0]), complex(lam[1]))
    mu = (complex(mu[0]), complex(mu[1]))
    return DegeneracyWitness(side, lam, mu, vec, witness_residuals(C, side, lam, mu, vec))


def _candidate_pairs(A, B, scale):
    """Joint eigenvalue candidates, with values near zero snapped to zero."""
    radius = 1e-6 * (1.0 + scale)
    snap = lambda z: 0j if abs(z) <= radius else z  # noqa: E731
    spec_a = {snap(z) for z in cluster_eigenvalues(eigenvalues(A), scale)}
    spec_b = {snap(z) for z in cluster_eigenvalues(eigenvalues(B), scale)}
    key = lambda z: (z.real, z.imag)  # noqa: E731
    return [
        (l1, l2)
        for l1 in sorted(spec_a, key=key)
        for l2 in sorted(spec_b, key=key)
        if (l1, l2) != (0j, 0j)
    ]


def find_witness(C: Configuration, side: str, tol: ToleranceModel = DEFAULT_TOL) -> NondegeneracyVerdict:
    """Run the non-degeneracy decision procedure on one side.

    1. Any violating vector is a joint eigenvector of ``x a1`` and
       ``x a2``, so candidate eigenvalue pairs come from the product of
       the two (clustered) spectra.
    2. For a pair ``(l1, l2) != 0`` the constraint forces
       ``mu ~ (l2, -l1)``; the side is degenerate at that pair iff the
       stacked matrix ``[x a1 - l1; x a2 - l2; mu1 a1 + mu2 a2; c]`` has
       a nonzero kernel.
    3. For ``l = 0``, ``mu`` is free: let ``K`` be the kernel of
       ``[x a1; x a2; c]``. The side is degenerate iff the pencil
       ``mu1 a1 K + mu2 a2 K`` drops column rank somewhere on P^1.

    The returned margin is the smallest kept singular value over every
    matrix tested, i.e. the distance from a rank drop.
    """
    k = C.k
    if k == 0:
        return NondegeneracyVerdict(True, None, MAX_MARGIN)
    d = _side_data(C, side)
    A = d.x @ d.a1
    B = d.x @ d.a2
    eye = np.eye(k)
    nrm = np.linalg.norm
    spec_scale = max(nrm(A), nrm(B))
    # rank thresholds refer to the data before cancellation
    data_scale = max(spec_scale, nrm(d.a1), nrm(d.a2), nrm(d.c))
    margin = np.inf

    for l1, l2 in _candidate_pairs(A, B, spec_scale):
        mu = np.array([l2, -l1])
        mu = mu / np.linalg.norm(mu)
        stacked = np.vstack([A - l1 * eye, B - l2 * eye, mu[0] * d.a1 + mu[1] * d.a2, d.c])
        K, m = kernel_with_margin(stacked, tol, data_scale)
        if K.shape[1]:
            return NondegeneracyVerdict(False, _make_witness(C, side, (l1, l2), mu, K[:, 0]), 0.0)
        margin = min(margin, m)

    K, m = kernel_with_margin(np.vstack([A, B, d.c]), tol, data_scale)
    if K.shape[1] == 0:
        margin = min(margin, m)
    else:
        pencil = pencil_rank_drop(d.a1 @ K, d.a2 @ K, tol, scale=max(nrm(d.a1), nrm(d.a2)))
        if pencil.drops:
            vec = K @ pencil.vector
            return NondegeneracyVerdict(False, _make_witness(C, side, (0j, 0j), pencil.mu, vec), 0.0)
        margin = min(margin, pencil.margin)
    return NondegeneracyVerdict(True, None, float(margin))


def check_nondegenerate(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> NondegeneracyVerdict:
    """Non-degeneracy verdict on both sides; the forward witness wins ties."""
    fwd = find_witness(C, FORWARD, tol)
    if not fwd.nondegenerate:
        return fwd
    dual = find_witness(C, DUAL, tol)
    if not dual.nondegenerate:
        return dual
    return NondegeneracyVerdict(True, None, min(fwd.margin, dual.margin))


def validate(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> ValidationReport:
    """Integrability and non-degeneracy in one report; valid iff both hold."""
    integrable, res = check_integrable(C, tol)
    verdict = check_nondegenerate(C, tol)
    return ValidationReport(
        integrability_residual_norm=res,
        integrability_threshold=integrability_threshold(C, tol),
        integrable=integrable,
        nondegenerate=verdict.nondegenerate,
        witness=verdict.witness,
        margin=verdict.margin,
        tolerances=tol,
    )


def act(g: GroupElement, C: Configuration) -> Configuration:
    """Apply ``(g0, g1)`` to ``C``."""
    if g.k != C.k:
        raise ShapeError(f"group element has k={g.k}, configuration has k={C.k}")
    if C.k == 0:
        return C
    g0_inv = np.linalg.inv(g.g0)
    g1_inv = np.linalg.inv(g.g1)
    return Configuration(
        g.g0 @ C.a1 @ g1_inv,
        g.g0 @ C.a2 @ g1_inv,
        g.g1 @ C.x @ g0_inv,
        g.g0 @ C.b,
        C.c @ g1_inv,
    )


def lie_act(h: TangentGroupElement, C: Configuration) -> tuple:
    """Derivative of the action at the identity in direction ``h``.

    Returns the tangent quintuple
    ``(h0 a1 - a1 h1, h0 a2 - a2 h1, h1 x - x h0, h0 b, -c h1)``.
    """
    h0, h1 = h.h0, h.h1
    if h0.shape[0] != C.k:
        raise ShapeError(f"tangent element has k={h0.shape[0]}, configuration has k={C.k}")
    return (
        h0 @ C.a1 - C.a1 @ h1,
        h0 @ C.a2 - C.a2 @ h1,
        h1 @ C.x - C.x @ h0,
        h0 @ C.b,
        -C.c @ h1,
    )


def _left(A, cols):
    """Matrix of X -> A @ X on row-major vec(X), X having ``cols`` columns."""
    return np.kron(A, np.eye(cols))


def _right(B, rows):
    """Matrix of X -> X @ B on row-major vec(X), X having ``rows`` rows."""
    return np.kron(np.eye(rows), B.T)


def lie_action_matrix(C: Configuration) -> np.ndarray:
    """Matrix of ``h -> lie_act(h, C)`` with ``h = (vec h0, vec h1)`` row-major.

    Rows follow the coordinate order (a1, a2, x, b, c); shape is
    ``(3k^2 + 2nk) x 2k^2``.
    """
    k, n = C.k, C.n
    zero_b = np.zeros((k * n, k * k))
    zero_c = np.zeros((n * k, k * k))
    return np.block([
        [_right(C.a1, k), -_left(C.a1, k)],
        [_right(C.a2, k), -_left(C.a2, k)],
        [-_left(C.x, k), _right(C.x, k)],
        [_right(C.b, k), zero_b],
        [zero_c, -_left(C.c, k)],
    ])


def stabilizer_profile(C: Configuration, tol: ToleranceModel = DEFAULT_TOL):
    """Stabilizer Lie algebra dimension together with its rank gap."""
    if C.k == 0:
        return 0, np.inf
    prof = rank_profile(lie_action_matrix(C), tol)
    return 2 * C.k ** 2 - prof.rank, prof.gap


def stabilizer_dimension(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> int:
    """Complex dimension of ``{h : lie_act(h, C) = 0}``; 0 means locally free."""
    return stabilizer_profile(C, tol)[0]
