"""First Laplace-Dirichlet eigenpair by fictitious-time continuation, with a POD reduced model."""

from ._eigenrom import (
    LSHAPE_LAMBDA,
    SQUARE_LAMBDA,
    EigenromError,
    IoError,
    NonConvergenceError,
    ParameterError,
    ValidationError,
    compute_rate,
    pod,
    run_experiment,
    select_dim,
    solve,
)

__all__ = [
    "LSHAPE_LAMBDA",
    "SQUARE_LAMBDA",
    "EigenromError",
    "IoError",
    "NonConvergenceError",
    "ParameterError",
    "ValidationError",
    "compute_rate",
    "pod",
    "run_experiment",
    "select_dim",
    "solve",
]
