"""First-order convex optimization toolkit.

Solvers: cutting-plane (ellipsoid, LP), subgradient (plain and switching),
smooth gradient methods in the inexact-model framework (adaptive,
accelerated, universal, restarted), Frank-Wolfe, plus an applications
layer (optimal design, entropic transport, truss topology, signal
approximation) and a benchmark CLI.
"""

from .core import (
    DomainError,
    EvaluationError,
    FirstOrderOracle,
    InputError,
    ModelMismatchError,
    ModelOracle,
    OptikitError,
    ProtocolError,
    Report,
    Status,
    Trace,
    UnsupportedSetError,
    check_model,
    perturb_oracle,
)

__all__ = [
    "DomainError",
    "EvaluationError",
    "FirstOrderOracle",
    "InputError",
    "ModelMismatchError",
    "ModelOracle",
    "OptikitError",
    "ProtocolError",
    "Report",
    "Status",
    "Trace",
    "UnsupportedSetError",
    "check_model",
    "perturb_oracle",
]

__version__ = "0.1.0"
