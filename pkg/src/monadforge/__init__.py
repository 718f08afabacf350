"""Numerical laboratory for monad data of framed instantons on the blown-up plane."""
from .configuration import (
    Configuration,
    DegeneracyWitness,
    GroupElement,
    TangentGroupElement,
    ValidationReport,
    act,
    check_integrable,
    check_nondegenerate,
    integrability_residual,
    lie_act,
    stabilizer_dimension,
    validate,
)
from .invariants import (
    fingerprint,
    integrability_jacobian,
    moduli_dimension,
    orbit_align,
    smoothness_check,
)
from .numkernel import ToleranceModel
from .sampling import SampleSpec, canonical_examples, perturb, sample_config
from .stabilization import direct_sum, homotopy_certify, homotopy_point, rank_embed

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "DegeneracyWitness",
    "GroupElement",
    "SampleSpec",
    "TangentGroupElement",
    "ToleranceModel",
    "ValidationReport",
    "act",
    "canonical_examples",
    "check_integrable",
    "check_nondegenerate",
    "direct_sum",
    "fingerprint",
    "homotopy_certify",
    "homotopy_point",
    "integrability_jacobian",
    "integrability_residual",
    "lie_act",
    "moduli_dimension",
    "orbit_align",
    "perturb",
    "rank_embed",
    "sample_config",
    "smoothness_check",
    "stabilizer_dimension",
    "validate",
]
