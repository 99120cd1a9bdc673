"""Quasi-Hamiltonian spaces, combinators and axiom verifiers."""

from .jets import Jet, inv, theta, theta_bar
from .spaces import (
    OMEGA_SCALE,
    ConjugacyClass,
    Double,
    Factor,
    Fission,
    Fusion,
    GroupFactor,
    InternallyFusedDouble,
    Product,
    QHSpace,
    ReducedSpace,
    Scaled,
    StokesSpace,
    UnipotentList,
    VanDenBergh,
    fuse,
    fusion_product,
    reduce_at_identity,
)
from .verify import (
    StepSizeError,
    Tolerances,
    verify_equivariance,
    verify_qh1,
    verify_qh2,
    verify_qh3,
    verify_space,
)

__all__ = [
    "Jet", "inv", "theta", "theta_bar", "OMEGA_SCALE", "ConjugacyClass", "Double", "Factor", "Fission",
    "Fusion", "GroupFactor", "InternallyFusedDouble", "Product", "QHSpace", "ReducedSpace", "Scaled",
    "StokesSpace", "UnipotentList", "VanDenBergh", "fuse", "fusion_product", "reduce_at_identity",
    "StepSizeError", "Tolerances", "verify_equivariance", "verify_qh1", "verify_qh2", "verify_qh3",
    "verify_space",
]
