"""Classification of sequences under distribution uncertainty with MMD statistics."""

__version__ = "0.1.0"

from .classifiers import (CENSORED, NULL, ArraySource, Case, GaussianSource, Phase, TestConfig, TestKind,
                          Verdict, classify_fixed, rank, run_fixed, run_sequential, run_two_phase)
from .clusters import ClusterSpec, GaussianModel, MeanInterval, MmdBall, Problem, mmd2_population, benchmark_problem
from .errors import (ArityError, DomainError, LengthError, MissingNull, MmdClassError, ParseError,
                     SeparationError, SourceExhausted, UnsupportedKernel, UnsupportedUncertainty, ValidationError)
from .exponents import ExponentParams, achievable_exponents, finite_n_envelope
from .kernel import KernelSpec
from .mmd import MmdAccumulator, MmdBank, mmd2_batch
from .montecarlo import ExperimentSpec, QPolicy, estimate, sweep

__all__ = [
    "__version__",
    "CENSORED",
    "NULL",
    "ArraySource",
    "Case",
    "GaussianSource",
    "Phase",
    "TestConfig",
    "TestKind",
    "Verdict",
    "classify_fixed",
    "rank",
    "run_fixed",
    "run_sequential",
    "run_two_phase",
    "ClusterSpec",
    "GaussianModel",
    "MeanInterval",
    "MmdBall",
    "Problem",
    "mmd2_population",
    "benchmark_problem",
    "ArityError",
    "DomainError",
    "LengthError",
    "MissingNull",
    "MmdClassError",
    "ParseError",
    "SeparationError",
    "SourceExhausted",
    "UnsupportedKernel",
    "UnsupportedUncertainty",
    "ValidationError",
    "ExponentParams",
    "achievable_exponents",
    "finite_n_envelope",
    "KernelSpec",
    "MmdAccumulator",
    "MmdBank",
    "mmd2_batch",
    "ExperimentSpec",
    "QPolicy",
    "estimate",
    "sweep",
]
