"""
Rank stabilization and the contraction homotopy.

``rank_embed`` realises adding a trivial line bundle: ``b`` and ``c``
get zero columns/rows prepended. ``homotopy_point`` evaluates the path

    H_t(a1, a2, x, b, c) = ((1-t) a1, (1-t) a2, (1-t) x, b_t, c_t)

    c_t = [t I_k ; 0_kk ; (1-t) c]        b_t = [0_kk | t I_k | (1-t)^2 b]

which lands in rank ``n + 2k``. It starts at the embedding and ends at a
constant. Because ``b_t c_t = (1-t)^3 b c``, every point of the path
stays integrable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .configuration import (
    Configuration,
    GroupElement,
    act,
    check_integrable,
    check_nondegenerate,
    integrability_threshold,
    validate,
)
from .exceptions import ArgumentError, PreconditionError
from .numkernel import DEFAULT_TOL, ToleranceModel


def rank_embed(C: Configuration, m: int = 1) -> Configuration:
    """Prepend ``m`` zero columns to ``b`` and ``m`` zero rows to ``c``."""
    if int(m) != m or m < 1:
        raise ArgumentError(f"embedding step m must be a positive integer, got {m}")
    k = C.k
    b = np.hstack([np.zeros((k, m), complex), C.b])
    c = np.vstack([np.zeros((m, k), complex), C.c])
    return C.replace(b=b, c=c)


def append_embed(C: Configuration, m: int = 1) -> Configuration:
    """Like :func:`rank_embed` but pads at the end. Only used as a contrast case."""
    k = C.k
    b = np.hstack([C.b, np.zeros((k, m), complex)])
    c = np.vstack([C.c, np.zeros((m, k), complex)])
    return C.replace(b=b, c=c)


def _rel_close(P, Q, rtol):
    scale = max(1.0, np.linalg.norm(P), np.linalg.norm(Q))
    return P.shape == Q.shape and np.linalg.norm(P - Q) <= rtol * scale


def equivariance_check_embed(C: Configuration, g: GroupElement, m: int = 1,
                             embed=rank_embed, rtol: float = 1e-12) -> bool:
    """True iff ``embed(act(g, C), m)`` and ``act(g, embed(C, m))`` agree entrywise.

    ``embed`` is swappable so the check can be pointed at a deliberately
    wrong padding convention.
    """
    lhs = embed(act(g, C), m)
    rhs = act(g, rank_embed(C, m))
    return all(_rel_close(p, q, rtol) for p, q in zip(lhs.matrices, rhs.matrices))


def homotopy_point(C: Configuration, t: float) -> Configuration:
    """Evaluate the contraction homotopy at ``t`` in [0, 1]; result has rank n + 2k."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ArgumentError(f"homotopy parameter must lie in [0, 1], got {t}")
    k, n = C.k, C.n
    s = 1.0 - t
    eye = np.eye(k, dtype=complex)
    zero = np.zeros((k, k), complex)
    b_t = np.hstack([zero, t * eye, s * s * C.b])
    c_t = np.vstack([t * eye, zero, s * C.c])
    return Configuration(s * C.a1, s * C.a2, s * C.x, b_t, c_t)


def homotopy_endpoint(k: int, n: int) -> Configuration:
    """The constant value of the homotopy at ``t = 1`` for given ``(k, n)``."""
    eye = np.eye(k, dtype=complex)
    zero = np.zeros((k, k), complex)
    b = np.hstack([zero, eye, np.zeros((k, n), complex)])
    c = np.vstack([eye, zero, np.zeros((n, k), complex)])
    return Configuration(zero, zero, zero, b, c)


def identity_gap(C: Configuration, t: float) -> float:
    """``|b_t c_t - (1-t)^3 b c|_F``, which vanishes identically in exact arithmetic."""
    H = homotopy_point(C, t)
    return float(np.linalg.norm(H.b @ H.c - (1.0 - t) ** 3 * (C.b @ C.c)))


@dataclass
class HomotopyCertificate:
    sample_points: list[float]
    residual_norms: list[float]
    residual_thresholds: list[float]
    identity_gap: list[float]
    margins: list[float]
    nondegenerate: list[bool]
    starts_at_embedding: bool
    ends_at_constant: bool
    gap_bound: float
    tolerances: ToleranceModel = field(default=DEFAULT_TOL, repr=False)

    @property
    def endpoint_checks(self) -> tuple[bool, bool]:
        return self.starts_at_embedding, self.ends_at_constant

    @property
    def passed(self) -> bool:
        residual_ok = all(r <= th for r, th in zip(self.residual_norms, self.residual_thresholds))
        gap_ok = all(g <= self.gap_bound for g in self.identity_gap)
        path_ok = all(
            nd and m > 0
            for t, nd, m in zip(self.sample_points, self.nondegenerate, self.margins)
            if t > 0
        )
        return residual_ok and gap_ok and path_ok and self.starts_at_embedding and self.ends_at_constant

    def to_dict(self) -> dict:
        rows = []
        for i, t in enumerate(self.sample_points):
            row = {
                "t": t,
                "residual_norm": self.residual_norms[i],
                "residual_threshold": self.residual_thresholds[i],
                "identity_gap": self.identity_gap[i],
                "nondegenerate": self.nondegenerate[i],
                "margin": self.margins[i],
            }
            if t == 0.0:
                row["note"] = "equals rank embedding" if self.starts_at_embedding else "DIFFERS from rank embedding"
            elif t == 1.0:
                row["note"] = "constant endpoint" if self.ends_at_constant else "NOT the constant endpoint"
            rows.append(row)
        return {
            "passed": self.passed,
            "starts_at_embedding": self.starts_at_embedding,
            "ends_at_constant": self.ends_at_constant,
            "identity_gap_bound": self.gap_bound,
            "samples": rows,
        }


def homotopy_certify(C: Configuration, sample_count: int = 11,
                     tol: ToleranceModel = DEFAULT_TOL) -> HomotopyCertificate:
    """Sample the homotopy at evenly spaced ``t`` and certify each point.

    Raises
    ------
    PreconditionError
        If ``C`` is not valid; the validation report is attached.
    ArgumentError
        If ``sample_count < 2``.
    """
    if sample_count < 2:
        raise ArgumentError(f"need at least 2 samples, got {sample_count}")
    report = validate(C, tol)
    if not report.valid:
        raise PreconditionError(f"homotopy certification needs a valid configuration ({report.reason})",
                                report)
    ts = [float(t) for t in np.linspace(0.0, 1.0, sample_count)]
    ts[0], ts[-1] = 0.0, 1.0
    gap_bound = 1e-10 * (1.0 + np.linalg.norm(C.b) * np.linalg.norm(C.c))

    residuals, thresholds, gaps, margins, nondeg = [], [], [], [], []
    for t in ts:
        H = homotopy_point(C, t)
        _, res = check_integrable(H, tol)
        residuals.append(res)
        thresholds.append(integrability_threshold(H, tol))
        gaps.append(float(np.linalg.norm(H.b @ H.c - (1.0 - t) ** 3 * (C.b @ C.c))))
        verdict = check_nondegenerate(H, tol)
        nondeg.append(verdict.nondegenerate)
        margins.append(verdict.margin)

    start = homotopy_point(C, 0.0) == (rank_embed(C, 2 * C.k) if C.k else C)
    end = homotopy_point(C, 1.0) == homotopy_endpoint(C.k, C.n)
    return HomotopyCertificate(ts, residuals, thresholds, gaps, margins, nondeg,
                               start, end, gap_bound, tol)


def direct_sum(C1: Configuration, C2: Configuration) -> Configuration:
    """Block-diagonal sum; non-degeneracy of the result must be re-checked."""
    return Configuration(*(scipy.linalg.block_diag(p, q) for p, q in zip(C1.matrices, C2.matrices)))
