"""
Tolerance-aware dense complex linear algebra.

Every rank decision in the package goes through :func:`rank_profile`, and
every eigenvalue comparison through :func:`cluster_eigenvalues`, so the
numerical policy lives in one place.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; use
:func:`as_matrix` to coerce and validate user input.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import MalformedInputError, ShapeError

DEFAULT_BASE_TOL = 1e-9
CLUSTER_TOL = 1e-6
TOL_ENV_VAR = "MONADFORGE_TOL"

# Fixed stream for the random projections in pencil_rank_drop, so that
# verdicts are a deterministic function of the input data.
_PROJECTION_SEED = 0x6D6F6E6164


@dataclass(frozen=True)
class ToleranceModel:
    """Threshold policy for numerical rank decisions.

    Parameters
    ----------
    base_tol : float
        Base tolerance, default ``1e-9``.
    relative : bool
        If True (default), the rank threshold of ``M`` is
        ``base_tol * max(M.shape) * sigma_max(M)``, floored at ``base_tol``
        when ``M`` is zero. If False, the threshold is ``base_tol`` itself.
    """

    base_tol: float = DEFAULT_BASE_TOL
    relative: bool = True

    def __post_init__(self):
        if not np.isfinite(self.base_tol) or self.base_tol < 0:
            raise MalformedInputError(f"base_tol must be finite and >= 0, got {self.base_tol}")

    @classmethod
    def from_env(cls, override: float | None = None) -> "ToleranceModel":
        """Build the default model; ``override`` beats MONADFORGE_TOL beats 1e-9."""
        if override is not None:
            return cls(float(override))
        env = os.environ.get(TOL_ENV_VAR)
        if env:
            try:
                return cls(float(env))
            except ValueError as exc:
                raise MalformedInputError(f"{TOL_ENV_VAR}={env!r} is not a number") from exc
        return cls()

    def threshold(self, M: np.ndarray, sigma_max: float | None = None, scale: float = 0.0) -> float:
        """Rank threshold for ``M``.

        ``scale`` is the size of the data ``M`` was assembled from. It
        matters when ``M`` is a difference that cancels to rounding noise:
        without it the noise would set its own threshold and count as rank.
        """
        if not self.relative:
            return self.base_tol
        if M.size == 0:
            return self.base_tol
        if sigma_max is None:
            sigma_max = float(np.linalg.norm(M, 2))
        ref = max(sigma_max, scale)
        if ref == 0.0:
            return self.base_tol
        return self.base_tol * max(M.shape) * ref


DEFAULT_TOL = ToleranceModel()


class RankProfile(NamedTuple):
    rank: int
    threshold: float
    singular_values: np.ndarray
    gap: float
    """Smallest kept singular value over max(largest dropped, threshold).

    ``inf`` when nothing is kept.
    """


def as_matrix(M, rows: int | None = None, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    """Coerce ``M`` to a finite 2-D complex128 array, optionally checking its shape."""
    try:
        arr = np.asarray(M, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise MalformedInputError(f"{name}: cannot convert to a complex matrix") from exc
    if arr.ndim != 2:
        raise ShapeError(f"{name}: expected a 2-D array, got ndim={arr.ndim}")
    if rows is not None and arr.shape[0] != rows or cols is not None and arr.shape[1] != cols:
        raise ShapeError(f"{name}: expected shape ({rows}, {cols}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MalformedInputError(f"{name}: contains non-finite entries")
    return arr


def _svd(M):
    if M.size == 0:
        return (np.zeros((M.shape[0], 0), complex), np.zeros(0),
                np.eye(M.shape[1], dtype=complex))
    return scipy.linalg.svd(M, full_matrices=True, lapack_driver="gesdd")


def rank_profile(M, tol: ToleranceModel = DEFAULT_TOL, scale: float = 0.0) -> RankProfile:
    """Numerical rank of ``M`` with the threshold and the spectral gap that decided it."""
    M = as_matrix(M)
    s = scipy.linalg.svdvals(M) if M.size else np.zeros(0)
    sigma_max = float(s[0]) if s.size else 0.0
    tau = tol.threshold(M, sigma_max, scale)
    r = int(np.count_nonzero(s > tau))
    if r == 0:
        gap = np.inf
    else:
        dropped = float(s[r]) if r < s.size else 0.0
        gap = float(s[r - 1]) / max(dropped, tau) if max(dropped, tau) > 0 else np.inf
    return RankProfile(r, tau, s, gap)


def rank(M, tol: ToleranceModel = DEFAULT_TOL, scale: float = 0.0) -> int:
    """Count the singular values of ``M`` above the tolerance threshold."""
    return rank_profile(M, tol, scale).rank


def kernel_basis(M, tol: ToleranceModel = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``M``.

    Returns
    -------
    ndarray, shape (cols, cols - rank)
        Columns are right singular vectors whose singular value is at most
        the threshold. A ``cols x 0`` array when ``M`` has full column rank.
    """
    M = as_matrix(M)
    _, s, vh = _svd(M)
    tau = tol.threshold(M, float(s[0]) if s.size else 0.0, scale)
    r = int(np.count_nonzero(s > tau))
    return vh[r:].conj().T


def kernel_with_margin(M, tol: ToleranceModel = DEFAULT_TOL, scale: float = 0.0):
    """Kernel basis plus the smallest singular value that was kept.

    The second value is how far ``M`` is from losing one more rank;
    ``inf`` when nothing is kept.
    """
    M = as_matrix(M)
    _, s, vh = _svd(M)
    tau = tol.threshold(M, float(s[0]) if s.size else 0.0, scale)
    r = int(np.count_nonzero(s > tau))
    margin = float(s[r - 1]) if r > 0 else np.inf
    return vh[r:].conj().T, margin


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a square matrix, with algebraic multiplicity."""
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"eigenvalues need a square matrix, got {M.shape}")
    if M.size == 0:
        return np.zeros(0, dtype=complex)
    return scipy.linalg.eigvals(M)


def cluster_eigenvalues(values, scale: float = 0.0, rel_tol: float = CLUSTER_TOL) -> list[complex]:
    """Merge eigenvalues closer than ``rel_tol * (1 + scale)``; return cluster means.

    Single-linkage: a chain of close values ends up in one cluster. The
    mean of a cluster is far more accurate than its members when the
    cluster comes from a split Jordan block.
    """
    values = [complex(v) for v in values]
    if not values:
        return []
    radius = rel_tol * (1.0 + scale)
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i, v in enumerate(values):
        groups.setdefault(find(i), []).append(v)
    means = [sum(g) / len(g) for g in groups.values()]
    return sorted(means, key=lambda z: (z.real, z.imag))


def least_squares_solve(M, R, tol: ToleranceModel = DEFAULT_TOL, side: str = "left"):
    """Minimum-norm least-squares solution of ``M @ X = R`` or ``X @ M = R``.

    Parameters
    ----------
    M, R : array_like
    side : {"left", "right"}
        ``"left"`` solves ``M @ X = R``; ``"right"`` solves ``X @ M = R``.
        Singular values of ``M`` at or below the tolerance threshold are
        treated as zero.

    Returns
    -------
    X : ndarray
    residual : float
        Frobenius norm of the residual.
    """
    M = as_matrix(M, name="M")
    R = as_matrix(R, name="R")
    if side == "right":
        X, res = least_squares_solve(M.T, R.T, tol, side="left")
        return X.T, res
    if side != "left":
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if M.shape[0] != R.shape[0]:
        raise ShapeError(f"cannot solve M @ X = R with M {M.shape} and R {R.shape}")
    if M.size == 0:
        X = np.zeros((M.shape[1], R.shape[1]), complex)
    else:
        u, s, vh = scipy.linalg.svd(M, full_matrices=False)
        tau = tol.threshold(M, float(s[0]))
        keep = s > tau
        inv = np.zeros_like(s)
        inv[keep] = 1.0 / s[keep]
        X = vh.conj().T @ (inv[:, None] * (u.conj().T @ R))
    return X, float(np.linalg.norm(M @ X - R))


def derive_seed(seed: int, index: int) -> int:
    """Per-task 64-bit seed derived from ``(seed, index)`` via SeedSequence hashing."""
    ss = np.random.SeedSequence([int(seed) % 2**64, int(index) % 2**64])
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator seeded from a 64-bit integer (negative seeds wrap)."""
    return np.random.Generator(np.random.PCG64(int(seed) % 2**64))


def random_complex(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Standard complex Gaussian matrix, E|z|^2 = 1, drawn from ``rng``."""
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)


def random_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    """Reproducible standard complex Gaussian matrix.

    Same ``(rows, cols, seed)`` gives bit-identical output on any platform
    that ships numpy's PCG64 and Ziggurat normal sampler.
    """
    if rows < 1 or cols < 1:
        raise ShapeError(f"random_matrix needs positive dimensions, got ({rows}, {cols})")
    return random_complex(make_rng(seed), rows, cols)


class PencilResult(NamedTuple):
    drops: bool
    mu: np.ndarray | None
    """Unit-norm (mu1, mu2) at which the pencil loses column rank."""
    vector: np.ndarray | None
    """Unit-norm kernel vector of ``mu1*A1 + mu2*A2``."""
    margin: float
    """Smallest singular value over the tested pencil points when no drop."""


def _normalize(v):
    return v / np.linalg.norm(v)


def pencil_rank_drop(A1, A2, tol: ToleranceModel = DEFAULT_TOL, projections: int = 2,
                     scale: float | None = None) -> PencilResult:
    """Find ``mu != 0`` such that ``mu1*A1 + mu2*A2`` has a nonzero kernel.

    ``A1`` and ``A2`` are ``m x d``. A column rank drop can only happen at a
    common root of ``det(P @ (mu1*A1 + mu2*A2))`` for every ``d x m``
    projection ``P``; roots of two random projections are taken as
    candidates and each is confirmed by a direct kernel computation.
    Pencils that are rank-deficient everywhere are caught first by a test
    at a random point. Completeness holds with probability one over the
    projections.
    """
    A1 = as_matrix(A1, name="A1")
    A2 = as_matrix(A2, name="A2", rows=A1.shape[0], cols=A1.shape[1])
    m, d = A1.shape
    if d == 0:
        return PencilResult(False, None, None, np.inf)
    rng = make_rng(_PROJECTION_SEED)
    if scale is None:
        scale = max(np.linalg.norm(A1, 2), np.linalg.norm(A2, 2))

    def probe(mu):
        return kernel_with_margin(mu[0] * A1 + mu[1] * A2, tol, scale)

    if m < d:
        mu = np.array([1.0 + 0j, 0.0])
        K, _ = probe(mu)
        return PencilResult(True, mu, K[:, 0], 0.0)

    first = np.array([1.0 + 0j, 0.0])
    K, margin = probe(first)
    if K.shape[1]:
        return PencilResult(True, first, K[:, 0], 0.0)
    generic = _normalize(random_complex(rng, 2, 1)[:, 0])
    K, generic_margin = probe(generic)
    if K.shape[1]:
        return PencilResult(True, generic, K[:, 0], 0.0)
    margin = min(margin, generic_margin)

    candidates = []
    if d == 1:
        # m x 2 matrix [A1 | A2]; its kernel is exactly the set of dropping mu
        Kmu = kernel_basis(np.hstack([A1, A2]), tol, scale)
        if Kmu.shape[1]:
            candidates.append(_normalize(Kmu[:, 0]))
    else:
        for _ in range(projections):
            P = random_complex(rng, d, m)
            alpha, beta = scipy.linalg.eigvals(P @ A1, P @ A2, homogeneous_eigvals=True)
            for a, b in zip(alpha, beta):
                # beta*(P A1) v = alpha*(P A2) v  ->  mu = (beta, -alpha)
                mu = np.array([b, -a], dtype=complex)
                nrm = np.linalg.norm(mu)
                if np.isfinite(nrm) and nrm > 0:
                    candidates.append(mu / nrm)
    for mu in candidates:
        K, cand_margin = probe(mu)
        if K.shape[1]:
            return PencilResult(True, mu, K[:, 0], 0.0)
        margin = min(margin, cand_margin)
    return PencilResult(False, None, None, margin)
