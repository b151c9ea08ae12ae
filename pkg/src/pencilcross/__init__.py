"""Level crossings of random matrix pencils ``A + lambda B``."""
from .ensemble import EnsembleSpec, Kind, MatrixPair, apply_so2, apply_su2, parse_ensemble, sample, sample_arrays
from .monodromy import TranspositionSeq, enumerate_admissible, monodromy_complex, monodromy_hermitian
from .pencil import CrossingBatch, CrossingSet, PencilThresholds, crossings_batch, discriminant_in_lambda, level_crossings
from .polynomial import ComplexPolynomial, aberth

__version__ = "0.1.0"

__all__ = [
    "ComplexPolynomial",
    "CrossingBatch",
    "CrossingSet",
    "EnsembleSpec",
    "Kind",
    "MatrixPair",
    "PencilThresholds",
    "TranspositionSeq",
    "aberth",
    "apply_so2",
    "apply_su2",
    "crossings_batch",
    "discriminant_in_lambda",
    "enumerate_admissible",
    "level_crossings",
    "monodromy_complex",
    "monodromy_hermitian",
    "parse_ensemble",
    "sample",
    "sample_arrays",
]
