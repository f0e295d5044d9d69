"""Quasi-stationary distributions of perturbed discrete-time semi-Markov
processes and their asymptotic power-series expansions."""

from .errors import QsdError
from .expand import MomentSeriesTable, QsdExpansion, compute_qsd_expansion
from .model import (
    ConcreteKernel,
    PerturbedSemiMarkovModel,
    evaluate_at,
    from_markov_chain,
    load_model,
    validate_conditions,
)
from .oracle import QsdPoint, qsd_direct, qsd_iterative, remainder_report
from .rootfind import RootResult, detect_zero_root, solve_characteristic
from .series import PowerSeries

__all__ = [
    "ConcreteKernel",
    "MomentSeriesTable",
    "PerturbedSemiMarkovModel",
    "PowerSeries",
    "QsdError",
    "QsdExpansion",
    "QsdPoint",
    "RootResult",
    "compute_qsd_expansion",
    "detect_zero_root",
    "evaluate_at",
    "from_markov_chain",
    "load_model",
    "qsd_direct",
    "qsd_iterative",
    "remainder_report",
    "solve_characteristic",
    "validate_conditions",
]

__version__ = "0.1.0"
