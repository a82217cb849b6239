"""Unbiased observable estimation from circuits with known coherent errors."""

from chanmix.circuits import (
    CircuitSpec,
    ParamRotation,
    SampledInstance,
    attach_errors,
    build_trotter_ising,
    compile_to_rz,
    sample_instance,
)
from chanmix.estimator import (
    EstimatorResult,
    estimate,
    estimate_unmitigated,
    exact_expectation,
    noisy_expectation,
    shot_bound,
    t_overhead,
    variance_bound,
)
from chanmix.mixture import GammaTriple, gamma_default, gamma_general, one_norm_closed_form
from chanmix.noise import ErrorModel, build_unstructured
from chanmix.pauli import PauliString

__all__ = [
    "CircuitSpec",
    "ErrorModel",
    "EstimatorResult",
    "GammaTriple",
    "ParamRotation",
    "PauliString",
    "SampledInstance",
    "attach_errors",
    "build_trotter_ising",
    "build_unstructured",
    "compile_to_rz",
    "estimate",
    "estimate_unmitigated",
    "exact_expectation",
    "gamma_default",
    "gamma_general",
    "noisy_expectation",
    "one_norm_closed_form",
    "sample_instance",
    "shot_bound",
    "t_overhead",
    "variance_bound",
]
