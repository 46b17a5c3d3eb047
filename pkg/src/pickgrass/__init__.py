"""Numerics for Pick configurations, coinvariant subspaces and quotient models on the ball."""

from __future__ import annotations

from .ball import (
    BallAutomorphism,
    Divisor,
    apply_automorphism,
    optimal_matching_distance,
    pseudo_distance,
    symmetric_distance,
)
from .blaschke import BlaschkeChain, build_blaschke, evaluate_blaschke
from .errors import (
    DegeneracyError,
    DegreeMismatch,
    DimensionMismatch,
    OutsideBall,
    PickGrassError,
    Unsupported,
    ValidationError,
)
from .fock import KernelDescriptor, TruncVec, gram_matrix, inner_product, kernel_eval
from .grassmann import CoinvariantModel, phi, psi, round_trip
from .hypersurface import HomogPoly, compress, fiber, gleason_decompose, irreducibility_check, metric_curvature
from .pick import PickProblem, embedding_dimension, is_regular, pick_matrix, stratum
from .spectra import CommutingTuple, joint_spectrum, spectral_perturbation_check

__version__ = "0.1.0"

__all__ = [
    "BallAutomorphism",
    "BlaschkeChain",
    "CoinvariantModel",
    "CommutingTuple",
    "DegeneracyError",
    "DegreeMismatch",
    "DimensionMismatch",
    "Divisor",
    "HomogPoly",
    "KernelDescriptor",
    "OutsideBall",
    "PickGrassError",
    "PickProblem",
    "TruncVec",
    "Unsupported",
    "ValidationError",
    "apply_automorphism",
    "build_blaschke",
    "compress",
    "embedding_dimension",
    "evaluate_blaschke",
    "fiber",
    "gleason_decompose",
    "gram_matrix",
    "inner_product",
    "irreducibility_check",
    "is_regular",
    "joint_spectrum",
    "kernel_eval",
    "metric_curvature",
    "optimal_matching_distance",
    "phi",
    "pick_matrix",
    "pseudo_distance",
    "psi",
    "round_trip",
    "spectral_perturbation_check",
    "stratum",
    "symmetric_distance",
]
