"""
Acceptance criteria, runnable from pytest and from ``monadforge selftest``.

Each criterion returns ``(passed, detail)`` and has a wall-clock budget;
exceeding the budget fails the criterion.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import serialization
from .configuration import (
    FORWARD,
    Configuration,
    TangentGroupElement,
    act,
    check_nondegenerate,
    find_witness,
    integrability_residual,
    stabilizer_dimension,
    validate,
)
from .invariants import (
    dimension_report,
    fingerprint,
    fingerprint_distance,
    fingerprints_agree,
    integrability_jacobian,
    multisets_match,
    orbit_align,
    orbit_tangent_residual,
)
from .numkernel import DEFAULT_TOL, derive_seed, make_rng, random_complex
from .sampling import (
    SampleSpec,
    canonical_examples,
    random_configuration,
    random_group_element,
    sample_config,
)
from .stabilization import equivariance_check_embed, homotopy_certify, homotopy_point

SEED = 20260101


@dataclass(frozen=True)
class Criterion:
    id: str
    title: str
    budget_s: float
    check: Callable[[], tuple[bool, str]]


@dataclass(frozen=True)
class Outcome:
    criterion: Criterion
    passed: bool
    detail: str
    elapsed: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.criterion.id} {self.criterion.title}: {self.detail} "
                f"({self.elapsed:.2f}s / {self.criterion.budget_s:.0f}s)")


def _grid():
    for k in (1, 2, 3):
        for n in range(max(2, k), 6):
            yield k, n


def _valid_sample(k, n, seed):
    C, _ = sample_config(SampleSpec(k, n, seed))
    return C


def cubic_scaling_identity():
    rng = make_rng(SEED + 1)
    worst = 0.0
    for i in range(100):
        k, n = int(rng.integers(1, 5)), int(rng.integers(1, 7))
        C = random_configuration(k, n, derive_seed(SEED + 1, i))
        bc = C.b @ C.c
        bound = 1e-10 * (1.0 + np.linalg.norm(C.b) * np.linalg.norm(C.c))
        for t in np.linspace(0.0, 1.0, 11):
            H = homotopy_point(C, t)
            gap = np.linalg.norm(H.b @ H.c - (1.0 - t) ** 3 * bc)
            worst = max(worst, gap / bound)
    return worst <= 1.0, f"max gap / bound = {worst:.2e} over 100 configurations x 11 samples"


def homotopy_path_validity():
    failures = []
    min_margin = np.inf
    for i in range(50):
        k = 1 + i % 3
        n = max(2, k) + (i // 3) % 3
        C = _valid_sample(k, n, derive_seed(SEED + 2, i))
        cert = homotopy_certify(C, 11, DEFAULT_TOL)
        interior = [m for t, m in zip(cert.sample_points, cert.margins) if t > 0]
        min_margin = min(min_margin, min(interior))
        ok = (
            cert.passed
            and all(r <= th for r, th in zip(cert.residual_norms, cert.residual_thresholds))
            and all(m > 0 for m in interior)
            and cert.starts_at_embedding
            and cert.ends_at_constant
        )
        if not ok:
            failures.append((k, n, i))
    return not failures, f"{50 - len(failures)}/50 certified, min interior margin {min_margin:.3e}"


def freeness():
    bad = []
    count = 0
    for k, n in _grid():
        for s in range(10):
            C = _valid_sample(k, n, derive_seed(SEED + 3, 100 * k + 10 * n + s))
            count += 1
            if not check_nondegenerate(C).nondegenerate or stabilizer_dimension(C) != 0:
                bad.append((k, n, s))
    degenerate_ok = 0
    for i, (k, n) in enumerate((k, n) for k in (1, 2, 3) for n in (1, 2, 4)):
        C = zero_framing_configuration(k, n, derive_seed(SEED + 33, i))
        integrable = validate(C).integrable
        if integrable and not check_nondegenerate(C).nondegenerate and stabilizer_dimension(C) >= 1:
            degenerate_ok += 1
    passed = not bad and degenerate_ok == 9
    return passed, (f"{count - len(bad)}/{count} free samples; "
                    f"{degenerate_ok}/9 integrable b=c=0 configurations degenerate with stabilizer >= 1")


def zero_framing_configuration(k, n, seed):
    """Integrable configuration with ``b = c = 0``.

    Integrability then says ``x a1`` and ``x a2`` commute; both are built
    diagonal in one random basis ``S``.
    """
    rng = make_rng(seed)
    S = random_complex(rng, k, k)
    S_inv = np.linalg.inv(S)
    x = random_complex(rng, k, k)
    x_inv = np.linalg.inv(x)
    P = S @ np.diag(random_complex(rng, k, 1)[:, 0]) @ S_inv
    Q = S @ np.diag(random_complex(rng, k, 1)[:, 0]) @ S_inv
    return Configuration(x_inv @ P, x_inv @ Q, x, np.zeros((k, n)), np.zeros((n, k)))


def smoothness_and_dimension():
    bad = []
    count = 0
    min_gap = np.inf
    for k, n in _grid():
        for s in range(10):
            C = _valid_sample(k, n, derive_seed(SEED + 4, 100 * k + 10 * n + s))
            rep = dimension_report(C)
            count += 1
            min_gap = min(min_gap, rep.jacobian_gap, rep.stabilizer_gap)
            if not (rep.jacobian_rank == k * k and rep.moduli_dimension == 2 * n * k
                    and rep.jacobian_gap >= 1e3 and rep.stabilizer_gap >= 1e3):
                bad.append((k, n, s))
    return not bad, f"{count - len(bad)}/{count} cells with dim = 2nk; min spectral gap {min_gap:.2e}"


def equivariance():
    embed_bad = validity_bad = 0
    for i in range(100):
        k = 1 + i % 3
        n = max(2, k) + i % 2
        C = _valid_sample(k, n, derive_seed(SEED + 5, i))
        g = random_group_element(k, derive_seed(SEED + 50, i), max_cond=1e3)
        if not equivariance_check_embed(C, g, m=1 + i % 3):
            embed_bad += 1
        if not validate(act(g, C)).valid:
            validity_bad += 1
        Cbad = random_configuration(k, n, derive_seed(SEED + 51, i))
        if validate(Cbad).valid != validate(act(g, Cbad)).valid:
            validity_bad += 1
    return (embed_bad == 0 and validity_bad == 0,
            f"embedding mismatches {embed_bad}/100, validity changes {validity_bad}/200")


def _substituted_residuals(C, w):
    """Recompute a witness's defining equations directly from the formulas."""
    v, (l1, l2), (m1, m2) = w.vec, w.lam, w.mu
    if w.side == FORWARD:
        eqs = [C.x @ C.a1 @ v - l1 * v, C.x @ C.a2 @ v - l2 * v,
               (m1 * C.a1 + m2 * C.a2) @ v, C.c @ v]
    else:
        eqs = [v @ C.a1 @ C.x - l1 * v, v @ C.a2 @ C.x - l2 * v,
               v @ (m1 * C.a1 + m2 * C.a2), v @ C.b]
    return [float(np.linalg.norm(e)) for e in eqs], abs(l1 * m1 + l2 * m2)


def _sweep_degenerate(C, samples=721):
    """Brute-force oracle: min over real mu angles of sigma_min([mu1 a1 + mu2 a2; c])."""
    best = np.inf
    for theta in np.linspace(0.0, np.pi, samples):
        M = np.vstack([np.cos(theta) * C.a1 + np.sin(theta) * C.a2, C.c])
        s = np.linalg.svd(M, compute_uv=False)
        best = min(best, s[-1] / DEFAULT_TOL.threshold(M, s[0]))
    return best <= 1.0


def pencil_instances(count=50, seed=SEED + 6):
    """Configurations with x = 0 whose forward degeneracy is a pencil rank drop.

    Even-indexed instances have a drop planted at a grid angle; odd ones
    are generic (tall pencils, no drop).
    """
    out = []
    for i in range(count):
        rng = make_rng(derive_seed(seed, i))
        k, n = (4, 2) if i % 4 < 2 else (5, 2)
        a1 = random_complex(rng, k, k)
        a2 = random_complex(rng, k, k)
        c = random_complex(rng, n, k)
        planted = i % 2 == 0
        if planted:
            kernel = np.linalg.svd(c)[2][n:].conj().T
            v = kernel @ random_complex(rng, k - n, 1)[:, 0]
            theta = np.pi * int(rng.integers(0, 721)) / 720
            cs, sn = np.cos(theta), np.sin(theta)
            r = (cs * a1 + sn * a2) @ v
            P = np.outer(r, v.conj()) / np.vdot(v, v)
            a1 = a1 - cs * P
            a2 = a2 - sn * P
        z = np.zeros((k, k), complex)
        out.append((planted, Configuration(a1, a2, z, random_complex(rng, k, n), c)))
    return out


def nondegeneracy_cross_check():
    rng = make_rng(SEED + 7)
    bad_a = 0
    worst = 0.0
    for i in range(500):
        a1, a2, x, b, c = (complex(*rng.standard_normal(2)) for _ in range(5))
        if i % 2:
            b = 0j
        else:
            c = 0j
        C = Configuration([[a1]], [[a2]], [[x]], [[b]], [[c]])
        verdict = check_nondegenerate(C)
        if verdict.nondegenerate:
            bad_a += 1
            continue
        res, lam_mu = _substituted_residuals(C, verdict.witness)
        scale = 1e-7 * (1.0 + C.norm())
        worst = max(worst, max(res) / scale, lam_mu / scale)
        if max(res) > scale or lam_mu > scale or np.linalg.norm(verdict.witness.mu) == 0:
            bad_a += 1

    disagree = 0
    planted = 0
    for is_planted, C in pencil_instances():
        planted += is_planted
        verdict = find_witness(C, FORWARD)
        oracle = _sweep_degenerate(C)
        if (not verdict.nondegenerate) != oracle or oracle != is_planted:
            disagree += 1
    passed = bad_a == 0 and disagree == 0
    return passed, (f"k=n=1: {500 - bad_a}/500 degenerate with sound witness "
                    f"(worst residual/bound {worst:.1e}); pencil vs 721-point sweep: "
                    f"{50 - disagree}/50 agree ({planted} planted)")


def orbit_machinery():
    align_bad = fp_bad = 0
    worst_res = worst_fp = 0.0
    for i in range(100):
        k = 1 + i % 3
        n = max(2, k) + i % 3
        C = _valid_sample(k, n, derive_seed(SEED + 8, i))
        g = random_group_element(k, derive_seed(SEED + 80, i), max_cond=10.0)
        C2 = act(g, C)
        result = orbit_align(C, C2)
        if result.found:
            # recompute the residual from scratch rather than trusting the report
            moved = act(result.g, C)
            res = np.sqrt(sum(np.linalg.norm(p - q) ** 2 for p, q in zip(moved.matrices, C2.matrices)))
            res /= 1.0 + C2.norm()
            worst_res = max(worst_res, res)
            if res > 1e-8:
                align_bad += 1
        else:
            align_bad += 1
        f1, f2 = fingerprint(C), fingerprint(C2)
        d = fingerprint_distance(f1, f2)
        worst_fp = max(worst_fp, d)
        if d > 1e-8 or not multisets_match(f1.spec1, f2.spec1, 1e-8) or not multisets_match(f1.spec2, f2.spec2, 1e-8):
            fp_bad += 1

    implication_bad = mismatches = 0
    for i in range(50):
        k = 1 + i % 3
        n = max(2, k) + i % 2
        C1 = _valid_sample(k, n, derive_seed(SEED + 9, 2 * i))
        C2 = _valid_sample(k, n, derive_seed(SEED + 9, 2 * i + 1))
        if not fingerprints_agree(fingerprint(C1), fingerprint(C2)):
            mismatches += 1
            if orbit_align(C1, C2).found:
                implication_bad += 1
    passed = align_bad == 0 and fp_bad == 0 and implication_bad == 0 and mismatches > 0
    return passed, (f"alignment {100 - align_bad}/100 (worst residual {worst_res:.1e}); "
                    f"fingerprint invariance {100 - fp_bad}/100 (worst {worst_fp:.1e}); "
                    f"{mismatches}/50 independent pairs mismatch, {implication_bad} aligned anyway")


def _mu(v, k, n):
    return integrability_residual(Configuration.from_vector(v, k, n))


def jacobian_correctness():
    rng = make_rng(SEED + 10)
    worst_fd = 0.0
    for i in range(50):
        k, n = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        C = random_configuration(k, n, derive_seed(SEED + 10, i))
        vec = C.to_vector()
        delta = random_complex(rng, vec.size, 1)[:, 0]
        delta /= np.linalg.norm(delta)
        eps = 1e-6
        fd = (_mu(vec + eps * delta, k, n) - _mu(vec, k, n)).ravel() / eps
        worst_fd = max(worst_fd, float(np.linalg.norm(integrability_jacobian(C) @ delta - fd)))
    worst_tangent = 0.0
    for i in range(20):
        k = 1 + i % 3
        n = max(2, k) + i % 2
        C = _valid_sample(k, n, derive_seed(SEED + 11, i))
        h = TangentGroupElement(random_complex(rng, k, k), random_complex(rng, k, k))
        worst_tangent = max(worst_tangent, orbit_tangent_residual(C, h))
    return (worst_fd <= 1e-5 and worst_tangent <= 1e-9,
            f"finite-difference error {worst_fd:.1e} (<= 1e-5), orbit tangent residual {worst_tangent:.1e} (<= 1e-9)")


def _bitwise_equal(C1, C2):
    return all(p.shape == q.shape and p.tobytes() == q.tobytes() for p, q in zip(C1.matrices, C2.matrices))


def determinism_and_serialization():
    repro_bad = 0
    for i, (k, n) in enumerate([(1, 2), (2, 2), (2, 4), (3, 5)]):
        spec = SampleSpec(k, n, SEED + i)
        if not _bitwise_equal(sample_config(spec)[0], sample_config(spec)[0]):
            repro_bad += 1
    corpus = [ex.configuration for ex in canonical_examples()]
    rng = make_rng(SEED + 12)
    for i in range(100):
        k, n = int(rng.integers(0, 5)), int(rng.integers(1, 7))
        corpus.append(random_configuration(k, n, derive_seed(SEED + 12, i)))
    trip_bad = sum(not _bitwise_equal(C, serialization.loads(serialization.dumps(C))) for C in corpus)
    return (repro_bad == 0 and trip_bad == 0,
            f"reproducible samples {4 - repro_bad}/4; bit-exact round trips {len(corpus) - trip_bad}/{len(corpus)}")


CRITERIA = [
    Criterion("AC1", "cubic scaling identity b_t c_t = (1-t)^3 b c", 5, cubic_scaling_identity),
    Criterion("AC2", "homotopy path validity", 60, homotopy_path_validity),
    Criterion("AC3", "freeness of the group action", 60, freeness),
    Criterion("AC4", "smoothness and moduli dimension 2nk", 120, smoothness_and_dimension),
    Criterion("AC5", "equivariance of embedding and validity", 10, equivariance),
    Criterion("AC6", "non-degeneracy decision cross-check", 60, nondegeneracy_cross_check),
    Criterion("AC7", "orbit alignment and fingerprints", 60, orbit_machinery),
    Criterion("AC8", "integrability Jacobian correctness", 10, jacobian_correctness),
    Criterion("AC9", "determinism and serialization", 5, determinism_and_serialization),
]


def run_criterion(criterion: Criterion) -> Outcome:
    start = time.perf_counter()
    try:
        passed, detail = criterion.check()
    except Exception as exc:  # a crash is a failed criterion, not an aborted run
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    if elapsed > criterion.budget_s:
        passed = False
        detail += " [over time budget]"
    return Outcome(criterion, passed, detail, elapsed)


def run_all(ids=None, echo=print) -> list[Outcome]:
    outcomes = []
    for criterion in CRITERIA:
        if ids and criterion.id not in ids:
            continue
        outcome = run_criterion(criterion)
        if echo:
            echo(outcome.line())
        outcomes.append(outcome)
    return outcomes
