"""Lacunary summability methods for sequences and series in R^d."""

from .core import Functional, NormKind, StabilizationPolicy, VectorSequence, apply, as_vector, norm, norms
from .errors import (
    BadExponent,
    BadGeneratorParam,
    DimensionMismatch,
    EmptyBattery,
    HorizonTooShort,
    LacunaError,
    LacunaryWarning,
    NotMonotone,
    NotStartingAtZero,
    NotStrictlyIncreasing,
    OutOfHorizon,
    PrefixExhausted,
)
from .lacunary import (
    DensityTrace,
    IndexSet,
    LacunarySequence,
    block_of,
    generate_lacunary,
    make_lacunary,
    theta_density,
    theta_from_json,
)
from .series import (
    CounterexampleResult,
    DivergenceWitness,
    SeriesContext,
    WucReport,
    build_counterexample,
    divergence_witness,
    membership,
    partial_sums,
    run_counterexample,
    wuc_check,
    wuc_supremum,
)
from .summability import (
    CauchyCertificate,
    EpsilonGrid,
    SummabilityVerdict,
    candidate_limit,
    ntheta,
    ordinary_limit,
    sigma1,
    stheta,
    stheta_cauchy,
    theta_norm,
    wp,
)

__version__ = "0.1.0"

__all__ = [
    "BadExponent",
    "BadGeneratorParam",
    "CauchyCertificate",
    "CounterexampleResult",
    "DensityTrace",
    "DimensionMismatch",
    "DivergenceWitness",
    "EmptyBattery",
    "EpsilonGrid",
    "Functional",
    "HorizonTooShort",
    "IndexSet",
    "LacunaError",
    "LacunarySequence",
    "LacunaryWarning",
    "NormKind",
    "NotMonotone",
    "NotStartingAtZero",
    "NotStrictlyIncreasing",
    "OutOfHorizon",
    "PrefixExhausted",
    "SeriesContext",
    "StabilizationPolicy",
    "SummabilityVerdict",
    "VectorSequence",
    "WucReport",
    "apply",
    "as_vector",
    "block_of",
    "build_counterexample",
    "candidate_limit",
    "divergence_witness",
    "generate_lacunary",
    "make_lacunary",
    "membership",
    "norm",
    "norms",
    "ntheta",
    "ordinary_limit",
    "partial_sums",
    "run_counterexample",
    "sigma1",
    "stheta",
    "stheta_cauchy",
    "theta_density",
    "theta_from_json",
    "theta_norm",
    "wp",
    "wuc_check",
    "wuc_supremum",
]
