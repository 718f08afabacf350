"""
Orbit-level structure: invariants, alignment, and the integrability Jacobian.

Under ``(g0, g1)`` the endomorphisms ``A = x a1`` and ``B = x a2`` of W1 are
conjugated by ``g1``, and ``c W x b`` is unchanged for every word ``W`` in
``A, B``. Spectra, word traces and these ``n x n`` matrices are therefore
constant on orbits. They are necessary conditions for two configurations
to share an orbit, not sufficient ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .configuration import (
    Configuration,
    GroupElement,
    act,
    lie_act,
    lie_action_matrix,
    stabilizer_profile,
    validate,
)
from .exceptions import InvalidGroupElementError, NotSmoothError, PreconditionError, ShapeError
from .numkernel import (
    DEFAULT_TOL,
    ToleranceModel,
    eigenvalues,
    kernel_basis,
    make_rng,
    random_complex,
    rank_profile,
)

DEFAULT_WORD_LENGTH = 3
MAX_ALIGNMENT_TRIES = 32
# Fixed stream so alignment is a deterministic function of its inputs.
_ALIGN_SEED = 0x616C69676E


def _sorted_spectrum(M):
    return sorted((complex(z) for z in eigenvalues(M)), key=lambda z: (z.real, z.imag))


def words(L: int):
    """All words over {A, B} of length 0..L, shortest first."""
    for length in range(L + 1):
        for w in itertools.product("AB", repeat=length):
            yield "".join(w)


@dataclass(frozen=True)
class Fingerprint:
    spec1: list
    spec2: list
    word_traces: dict
    endo_invariants: dict
    word_length_bound: int

    def to_dict(self) -> dict:
        pair = lambda z: [float(z.real), float(z.imag)]  # noqa: E731
        return {
            "spec1": [pair(z) for z in self.spec1],
            "spec2": [pair(z) for z in self.spec2],
            "word_traces": {w: pair(complex(v)) for w, v in self.word_traces.items()},
            "word_length_bound": self.word_length_bound,
        }


def fingerprint(C: Configuration, L: int = DEFAULT_WORD_LENGTH) -> Fingerprint:
    """Compute orbit invariants of ``C`` up to word length ``L``.

    Words are keyed by strings such as ``"ABA"``, read left to right as the
    matrix product ``A @ B @ A``. The empty word ``""`` is the identity.
    Equal fingerprints are necessary for two configurations to share an
    orbit; they are not known to be sufficient.
    """
    if L < 1:
        raise ValueError(f"word length bound must be >= 1, got {L}")
    A = C.x @ C.a1
    B = C.x @ C.a2
    letters = {"A": A, "B": B}
    xb = C.x @ C.b
    traces, endos = {}, {}
    for w in words(L):
        W = np.eye(C.k, dtype=complex)
        for ch in w:
            W = W @ letters[ch]
        traces[w] = complex(np.trace(W))
        endos[w] = C.c @ W @ xb
    return Fingerprint(_sorted_spectrum(A), _sorted_spectrum(B), traces, endos, L)


def multisets_match(p, q, rtol: float = 1e-6) -> bool:
    """Greedy nearest-pair matching of two complex multisets."""
    if len(p) != len(q):
        return False
    remaining = list(q)
    scale = max([abs(z) for z in list(p) + list(q)] + [0.0])
    radius = rtol * (1.0 + scale)
    for z in p:
        j = min(range(len(remaining)), key=lambda i: abs(remaining[i] - z))
        if abs(remaining[j] - z) > radius:
            return False
        remaining.pop(j)
    return True


def fingerprint_distance(f1: Fingerprint, f2: Fingerprint) -> float:
    """Largest relative discrepancy between word traces and endo-invariants.

    Spectra are compared separately by :func:`multisets_match`, since
    sorted order is not stable under perturbation.
    """
    if f1.word_length_bound != f2.word_length_bound:
        raise ValueError("fingerprints computed with different word-length bounds")
    worst = 0.0
    for w in f1.word_traces:
        t1, t2 = f1.word_traces[w], f2.word_traces[w]
        worst = max(worst, abs(t1 - t2) / (1.0 + max(abs(t1), abs(t2))))
        e1, e2 = f1.endo_invariants[w], f2.endo_invariants[w]
        if e1.shape != e2.shape:
            return np.inf
        scale = 1.0 + max(np.linalg.norm(e1), np.linalg.norm(e2))
        worst = max(worst, float(np.linalg.norm(e1 - e2)) / scale)
    return worst


def fingerprints_agree(f1: Fingerprint, f2: Fingerprint, rtol: float = 1e-6) -> bool:
    return (
        multisets_match(f1.spec1, f2.spec1, rtol)
        and multisets_match(f1.spec2, f2.spec2, rtol)
        and fingerprint_distance(f1, f2) <= rtol
    )


@dataclass(frozen=True)
class AlignmentResult:
    found: bool
    g: GroupElement | None
    action_residual: float
    transporter_dimension: int


def _transporter_matrix(C1: Configuration, C2: Configuration) -> np.ndarray:
    """Homogenised transporter system in unknowns ``(vec g0, vec g1, s)``.

    ``g0 a_i = a_i' g1``, ``g1 x = x' g0``, ``g0 b = s b'``, ``c' g1 = s c``.
    Solutions with ``s != 0`` rescale to transporters.
    """
    k, n = C1.k, C1.n

    def right(M, rows):
        return np.kron(np.eye(rows), M.T)

    def left(M, cols):
        return np.kron(M, np.eye(cols))

    zero = lambda r, c: np.zeros((r, c))  # noqa: E731
    kk = k * k
    rows = [
        [right(C1.a1, k), -left(C2.a1, k), zero(kk, 1)],
        [right(C1.a2, k), -left(C2.a2, k), zero(kk, 1)],
        [-left(C2.x, k), right(C1.x, k), zero(kk, 1)],
        [right(C1.b, k), zero(k * n, kk), -C2.b.reshape(-1, 1)],
        [zero(n * k, kk), left(C2.c, k), -C1.c.reshape(-1, 1)],
    ]
    return np.block(rows)


def action_residual(g: GroupElement, C1: Configuration, C2: Configuration) -> float:
    """Relative distance ``|act(g, C1) - C2| / (1 + |C2|)``."""
    moved = act(g, C1)
    diff = np.sqrt(sum(np.linalg.norm(p - q) ** 2 for p, q in zip(moved.matrices, C2.matrices)))
    return float(diff / (1.0 + C2.norm()))


def orbit_align(C1: Configuration, C2: Configuration, tol: ToleranceModel = DEFAULT_TOL,
                residual_tol: float | None = None) -> AlignmentResult:
    """Look for ``g`` with ``act(g, C1) == C2``.

    The transporter equations are linear in ``(g0, g1)``, so the candidates
    form the kernel of one matrix. When that kernel is more than
    one-dimensional, random combinations are tried until one is
    invertible.

    Parameters
    ----------
    residual_tol : float, optional
        Largest accepted relative action residual; defaults to
        ``1e3 * tol.base_tol``.
    """
    if (C1.k, C1.n) != (C2.k, C2.n):
        raise ShapeError(f"cannot align (k, n)={C1.k, C1.n} with {C2.k, C2.n}")
    if residual_tol is None:
        residual_tol = 1e3 * tol.base_tol
    k = C1.k
    if k == 0:
        return AlignmentResult(C1 == C2, GroupElement.identity(0) if C1 == C2 else None, 0.0, 1)

    null = kernel_basis(_transporter_matrix(C1, C2), tol)
    dim = null.shape[1]
    if dim == 0:
        return AlignmentResult(False, None, np.inf, 0)

    rng = make_rng(_ALIGN_SEED)
    tries = 1 if dim == 1 else MAX_ALIGNMENT_TRIES
    best_res = np.inf
    for _ in range(tries):
        coeffs = np.ones(1, complex) if dim == 1 else random_complex(rng, dim, 1)[:, 0]
        sol = null @ coeffs
        s = sol[-1]
        if abs(s) <= tol.base_tol * np.linalg.norm(sol):
            continue
        sol = sol / s
        g0 = sol[:k * k].reshape(k, k)
        g1 = sol[k * k:2 * k * k].reshape(k, k)
        try:
            g = GroupElement(g0, g1, tol)
        except InvalidGroupElementError:
            continue
        res = action_residual(g, C1, C2)
        best_res = min(best_res, res)
        if res <= residual_tol:
            return AlignmentResult(True, g, res, dim)
    return AlignmentResult(False, None, best_res, dim)


def integrability_jacobian(C: Configuration) -> np.ndarray:
    """Differential of ``C -> a1 x a2 - a2 x a1 + b c`` as a matrix.

    Columns follow the row-major coordinates of (a1, a2, x, b, c); rows the
    row-major entries of the ``k x k`` residual. Shape ``k^2 x (3k^2 + 2nk)``.
    """
    a1, a2, x, b, c = C.matrices
    k = C.k
    if k == 0:
        return np.zeros((0, 0), complex)
    Ik = np.eye(k)
    # vec(P X Q) = kron(P, Q^T) vec(X) for row-major vec
    d_a1 = np.kron(Ik, (x @ a2).T) - np.kron(a2 @ x, Ik)
    d_a2 = np.kron(a1 @ x, Ik) - np.kron(Ik, (x @ a1).T)
    d_x = np.kron(a1, a2.T) - np.kron(a2, a1.T)
    d_b = np.kron(Ik, c.T)
    d_c = np.kron(b, Ik)
    return np.hstack([d_a1, d_a2, d_x, d_b, d_c])


@dataclass(frozen=True)
class DimensionReport:
    jacobian_rank: int
    jacobian_gap: float
    kernel_dimension: int
    stabilizer_dimension: int
    stabilizer_gap: float
    moduli_dimension: int
    surjective: bool

    def to_dict(self) -> dict:
        return {
            "jacobian_rank": self.jacobian_rank,
            "jacobian_gap": self.jacobian_gap,
            "kernel_dimension": self.kernel_dimension,
            "stabilizer_dimension": self.stabilizer_dimension,
            "stabilizer_gap": self.stabilizer_gap,
            "moduli_dimension": self.moduli_dimension,
            "surjective": self.surjective,
        }


def _require_valid(C, tol, what):
    report = validate(C, tol)
    if not report.valid:
        raise PreconditionError(f"{what} needs a valid configuration ({report.reason})", report)


def dimension_report(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> DimensionReport:
    """Jacobian rank, orbit dimension and the resulting local moduli dimension."""
    _require_valid(C, tol, "dimension_report")
    k, n = C.k, C.n
    if k == 0:
        return DimensionReport(0, np.inf, 0, 0, np.inf, 0, True)
    prof = rank_profile(integrability_jacobian(C), tol)
    kernel_dim = 3 * k * k + 2 * n * k - prof.rank
    stab, stab_gap = stabilizer_profile(C, tol)
    moduli = kernel_dim - (2 * k * k - stab)
    return DimensionReport(prof.rank, prof.gap, kernel_dim, stab, stab_gap, moduli,
                           prof.rank == k * k)


def moduli_dimension(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> int:
    """``dim ker D(mu) - dim(orbit)`` at a valid point.

    Raises
    ------
    PreconditionError
        ``C`` is not valid.
    NotSmoothError
        The Jacobian is not surjective at ``C``.
    """
    rep = dimension_report(C, tol)
    if not rep.surjective:
        raise NotSmoothError(f"Jacobian rank {rep.jacobian_rank} < k^2 = {C.k ** 2}")
    return rep.moduli_dimension


def smoothness_check(C: Configuration, tol: ToleranceModel = DEFAULT_TOL) -> bool:
    """True iff the integrability Jacobian has full row rank ``k^2`` at ``C``."""
    _require_valid(C, tol, "smoothness_check")
    if C.k == 0:
        return True
    return rank_profile(integrability_jacobian(C), tol).rank == C.k ** 2


def orbit_tangent_residual(C: Configuration, h) -> float:
    """``|D(mu) . lie_act(h, C)|``; zero at integrable points."""
    tangent = np.concatenate([m.ravel() for m in lie_act(h, C)])
    return float(np.linalg.norm(integrability_jacobian(C) @ tangent))


__all__ = [
    "AlignmentResult",
    "DimensionReport",
    "Fingerprint",
    "dimension_report",
    "fingerprint",
    "fingerprint_distance",
    "fingerprints_agree",
    "integrability_jacobian",
    "lie_action_matrix",
    "moduli_dimension",
    "multisets_match",
    "orbit_align",
    "orbit_tangent_residual",
    "smoothness_check",
]
