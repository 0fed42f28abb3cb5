"""Photonic circuit simulation: Gaussian, pure-Fock and boson-sampling simulators.

The matrix functions behind photon-counting probabilities live in
:mod:`photonsim.kernels` (compiled extension with a numpy fallback).
"""

from .fockspace import FockStateVector
from .gaussian import GaussianState, vacuum_state
from .program import (
    CircuitProgram,
    ExecutionConfig,
    ExecutionResult,
    Instruction,
    NumericalError,
    OracleKernels,
    ValidationError,
    execute,
    kernel_provider,
    validate,
)
from .samples import SampleBatch

__version__ = "0.1.0"

__all__ = [
    "CircuitProgram",
    "ExecutionConfig",
    "ExecutionResult",
    "FockStateVector",
    "GaussianState",
    "Instruction",
    "NumericalError",
    "OracleKernels",
    "SampleBatch",
    "ValidationError",
    "execute",
    "kernel_provider",
    "validate",
    "vacuum_state",
]
