"""Multi-block nonconvex ADMM with an increasing penalty and a decreasing Moreau smoothing."""

__version__ = "0.1.0"

from .linblock import BlockOperator, MatrixMap, ScaledIdentity, SpectralInfo, estimate_spectral
from .moreau import MoreauEnvelope, smoothed_prox_step
from .schedule import FixedSchedule, IpdsSchedule, Regime, RegimeParams, experiment_defaults, select_params
from .solver import CompositeProblem, SolveResult, StoppingRule, TraceRecord, crit_bound, solve, step

__all__ = [
    "BlockOperator",
    "MatrixMap",
    "ScaledIdentity",
    "SpectralInfo",
    "estimate_spectral",
    "MoreauEnvelope",
    "smoothed_prox_step",
    "FixedSchedule",
    "IpdsSchedule",
    "Regime",
    "RegimeParams",
    "experiment_defaults",
    "select_params",
    "CompositeProblem",
    "SolveResult",
    "StoppingRule",
    "TraceRecord",
    "crit_bound",
    "solve",
    "step",
]
