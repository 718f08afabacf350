"""
Seeded generation of valid configurations and group elements.

Rejection sampling never lands on the integrable locus, which has
codimension k^2. Instead ``a1, a2, x, c`` are drawn freely and ``b`` is
solved from ``b c = a2 x a1 - a1 x a2``. When ``c`` has full column rank,
every solution has the form

    b = R c^+ + Y (I - c c^+)

The free term ``Y`` is drawn at random too. Without it the minimum-norm
solution ``R c^+`` has rank at most rank(R), which is 0 when ``k = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .configuration import Configuration, GroupElement, check_integrable, integrability_residual, validate
from .exceptions import (
    ArgumentError,
    PerturbFailedError,
    PreconditionError,
    SamplingFailedError,
    UnsampleableError,
    UnsupportedRegimeError,
)
from .invariants import integrability_jacobian
from .numkernel import (
    DEFAULT_TOL,
    ToleranceModel,
    derive_seed,
    least_squares_solve,
    make_rng,
    random_complex,
)

NEWTON_STEPS = 8


@dataclass(frozen=True)
class SampleSpec:
    k: int
    n: int
    seed: int
    max_attempts: int = 64
    tol: ToleranceModel = field(default=DEFAULT_TOL)

    def __post_init__(self):
        if self.k < 0 or self.n < 1:
            raise ArgumentError(f"need k >= 0 and n >= 1, got k={self.k}, n={self.n}")
        if self.max_attempts < 1:
            raise ArgumentError(f"max_attempts must be positive, got {self.max_attempts}")


def check_regime(k: int, n: int) -> None:
    """Raise if ``(k, n)`` is outside what :func:`sample_config` can produce."""
    if k == 0:
        return
    if n == 1:
        raise UnsampleableError(
            f"no valid configurations exist for k={k}, n=1: every integrable "
            "configuration has a degeneracy witness"
        )
    if n < k:
        raise UnsupportedRegimeError(f"sampling with n < k (k={k}, n={n}) is not supported")


def _draw(rng: np.random.Generator, k: int, n: int, tol: ToleranceModel) -> Configuration:
    a1 = random_complex(rng, k, k)
    a2 = random_complex(rng, k, k)
    x = random_complex(rng, k, k)
    c = random_complex(rng, n, k)
    Y = random_complex(rng, k, n)
    R = a2 @ x @ a1 - a1 @ x @ a2
    b_min, _ = least_squares_solve(c, R, tol, side="right")
    # Y (I - c c^+) is annihilated by c on the right
    Yc_pinv, _ = least_squares_solve(c, Y @ c, tol, side="right")
    return Configuration(a1, a2, x, b_min + Y - Yc_pinv, c)


def sample_config(spec: SampleSpec) -> tuple[Configuration, int]:
    """Draw a valid configuration; return it with the number of attempts used.

    Attempt ``j`` uses the generator seeded by ``derive_seed(spec.seed, j)``,
    so output depends only on ``spec``.

    Raises
    ------
    UnsampleableError
        ``n = 1`` and ``k >= 1``.
    UnsupportedRegimeError
        ``2 <= n < k``.
    SamplingFailedError
        No attempt produced a valid configuration.
    """
    k, n = spec.k, spec.n
    if k == 0:
        return Configuration.zeros(0, n), 1
    check_regime(k, n)
    report = None
    for attempt in range(spec.max_attempts):
        C = _draw(make_rng(derive_seed(spec.seed, attempt)), k, n, spec.tol)
        report = validate(C, spec.tol)
        if report.valid:
            return C, attempt + 1
    raise SamplingFailedError(
        f"no valid sample for k={k}, n={n}, seed={spec.seed} in {spec.max_attempts} attempts",
        report,
    )


def sample_batch(k: int, n: int, seed: int, count: int, tol: ToleranceModel = DEFAULT_TOL):
    """Sample ``count`` configurations with per-index seeds ``derive_seed(seed, i)``.

    Returns a list of ``(index, configuration_or_exception)`` in index order.
    Regime errors are raised immediately instead of being collected.
    """
    check_regime(k, n)
    out = []
    for i in range(count):
        try:
            C, _ = sample_config(SampleSpec(k, n, derive_seed(seed, i), tol=tol))
            out.append((i, C))
        except SamplingFailedError as exc:
            out.append((i, exc))
    return out


def random_unitary(rng: np.random.Generator, k: int) -> np.ndarray:
    q, r = np.linalg.qr(random_complex(rng, k, k))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_group_element(k: int, seed: int, max_cond: float = 10.0) -> GroupElement:
    """Group element whose two factors have condition number at most ``max_cond``."""
    rng = make_rng(seed)
    mats = []
    for _ in range(2):
        s = np.exp(rng.uniform(0.0, np.log(max_cond), size=k))
        s[0], s[-1] = 1.0, max_cond if k > 1 else 1.0
        mats.append(random_unitary(rng, k) @ np.diag(s) @ random_unitary(rng, k))
    return GroupElement(mats[0], mats[1])


def random_configuration(k: int, n: int, seed: int) -> Configuration:
    """Unconstrained Gaussian configuration; generally neither integrable nor special."""
    rng = make_rng(seed)
    return Configuration(*(random_complex(rng, *shape)
                           for shape in ((k, k), (k, k), (k, k), (k, n), (n, k))))


def perturb(C: Configuration, eps: float, seed: int, tol: ToleranceModel = DEFAULT_TOL) -> Configuration:
    """Move ``C`` by about ``eps`` along the integrable locus.

    A random direction is projected onto the kernel of the integrability
    Jacobian and scaled to length ``eps``. Up to 8 minimum-norm Newton
    steps then pull the point back onto the locus. The result is
    re-validated.
    """
    report = validate(C, tol)
    if not report.valid:
        raise PreconditionError(f"perturb needs a valid configuration ({report.reason})", report)
    if eps < 0 or eps > 0.1 * (1.0 + C.norm()):
        raise ArgumentError(f"eps must lie in [0, 0.1 (1 + |C|)], got {eps}")
    if eps == 0 or C.k == 0:
        return C
    k, n = C.k, C.n
    rng = make_rng(seed)
    J = integrability_jacobian(C)
    delta = random_complex(rng, J.shape[1], 1)
    along_normal, _ = least_squares_solve(J, J @ delta, tol)
    delta = (delta - along_normal)[:, 0]
    delta *= eps / np.linalg.norm(delta)
    Y = Configuration.from_vector(C.to_vector() + delta, k, n)

    for _ in range(NEWTON_STEPS):
        ok, _ = check_integrable(Y, tol)
        if ok:
            break
        r = integrability_residual(Y).reshape(-1, 1)
        step, _ = least_squares_solve(integrability_jacobian(Y), r, tol)
        Y = Configuration.from_vector(Y.to_vector() - step[:, 0], k, n)
    report = validate(Y, tol)
    if not report.integrable:
        raise PerturbFailedError(f"Newton retraction left residual {report.integrability_residual_norm:.3e}")
    if not report.nondegenerate:
        raise PerturbFailedError("perturbed configuration is degenerate")
    return Y


@dataclass(frozen=True)
class CanonicalExample:
    name: str
    configuration: Configuration
    expected: str
    """One of ``"valid"``, ``"degenerate"``, ``"non-integrable"``."""


def canonical_examples() -> list[CanonicalExample]:
    """Small hand-checkable configurations used as a regression corpus."""
    nil_a1 = np.array([[0, 1], [0, 0]], complex)
    nil_a2 = np.array([[0, 0], [1, 0]], complex)
    return [
        CanonicalExample(
            "valid-k1-n2",
            Configuration([[0]], [[0]], [[0]], [[0, 1]], [[1], [0]]),
            "valid",
        ),
        CanonicalExample("zero-k1-n1", Configuration.zeros(1, 1), "degenerate"),
        CanonicalExample("zero-k1-n2", Configuration.zeros(1, 2), "degenerate"),
        CanonicalExample(
            "scalar-dual-k1-n1",
            Configuration([[1]], [[2]], [[3]], [[0]], [[5]]),
            "degenerate",
        ),
        CanonicalExample(
            "nilpotent-k2-n2",
            Configuration(nil_a1, nil_a2, np.eye(2), np.zeros((2, 2)), np.zeros((2, 2))),
            "non-integrable",
        ),
        CanonicalExample("empty-k0-n2", Configuration.zeros(0, 2), "valid"),
    ]
