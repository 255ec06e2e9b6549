"""Exact-penalty surrogates for zero-norm and rank problems, with a low-rank plus sparse solver."""
from .errors import (DimensionMismatch, DomainError, ExactPenError, Infeasible, InvalidParameter,
                     MaxIterReached, SvdFailure, ValidationFailure)
from .scalar_phi import PhiKind, PhiSpec, make_phi, psi_star, scalar_penalty_value
from .vector_surrogates import GroupPartition
from .solver import DecompositionInstance, Schedule, SolverOptions, SolverReport, gep_mscra
from .experiments import ExperimentConfig, run_trials

__version__ = "0.1.0"
