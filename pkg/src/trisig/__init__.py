"""Statistical significance of triclusters in three-way tensor data."""

__version__ = "0.1.0"

from .estimation import EmpiricalTables, UniformTables, identically_distributed  # noqa: E402
from .io import read_tensor, read_triclusters, write_tensor, write_triclusters  # noqa: E402
from .multiplicity import benjamini_hochberg  # noqa: E402
from .preprocessing import PiecewiseAggregateApproximation, TensorDiscretizer, discretize, paa  # noqa: E402
from .significance import (  # noqa: E402
    AssumptionProfile,
    SignificanceResult,
    TriclusterSignificance,
    adjust,
    assess,
    binomial_tail,
    min_observations,
    pattern_prob,
    span_correction,
)
from .synthgen import GenSpec, PlantingManifest, generate  # noqa: E402
from .tensor import Pattern, Tensor3, Tricluster, VariableDomain, extract_pattern  # noqa: E402

__all__ = [
    "AssumptionProfile",
    "EmpiricalTables",
    "GenSpec",
    "Pattern",
    "PiecewiseAggregateApproximation",
    "PlantingManifest",
    "SignificanceResult",
    "Tensor3",
    "TensorDiscretizer",
    "Tricluster",
    "TriclusterSignificance",
    "UniformTables",
    "VariableDomain",
    "adjust",
    "assess",
    "benjamini_hochberg",
    "binomial_tail",
    "discretize",
    "extract_pattern",
    "generate",
    "identically_distributed",
    "min_observations",
    "paa",
    "pattern_prob",
    "read_tensor",
    "read_triclusters",
    "span_correction",
    "write_tensor",
    "write_triclusters",
]
