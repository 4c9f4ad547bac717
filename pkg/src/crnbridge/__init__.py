"""Guided simulation of reaction networks conditioned on partial observations."""

from .network import (
    Species,
    Reaction,
    ReactionNetwork,
    MassAction,
    CustomIntensity,
    CLECoefficients,
    cle_coefficients,
    total_intensity,
)
from .observations import Observation, ObservationScheme
from .paths import JumpPath, GuidedPath, WeightedPath
from .rng import RngStream
from .forward import simulate_forward, next_reaction_homogeneous, next_reaction_thinning
from . import errors
from .guiding import (
    Trend,
    GuidingTerm,
    TimeRescaledGuide,
    BackwardFilter,
    MBlockFilter,
    filter_backward,
    g_epsilon,
    g_zero_C,
    g_euler_cle,
    g_lna_restart,
    g_poisson_hybrid,
    OdeControl,
    check_greedy,
)
from .guided import (
    DeltaPolicy,
    NoJumpBeforeEnd,
    delta_analytic,
    guided_next_reaction,
    simulate_guided,
)
from .weights import (
    log_psi,
    log_weight_single,
    log_weight_multi,
    estimate_pmf,
    logmeanexp,
    MISS,
)
from .config import ExperimentConfig, load_config
from .experiment import (
    RunSummary,
    run_experiment,
    tune_a_grid,
    export_paths,
    parse_paths,
    write_outputs,
)

__version__ = "0.1.0"

__all__ = [
    "Species",
    "Reaction",
    "ReactionNetwork",
    "MassAction",
    "CustomIntensity",
    "CLECoefficients",
    "cle_coefficients",
    "total_intensity",
    "Observation",
    "ObservationScheme",
    "JumpPath",
    "GuidedPath",
    "WeightedPath",
    "RngStream",
    "simulate_forward",
    "next_reaction_homogeneous",
    "next_reaction_thinning",
    "errors",
    "Trend",
    "GuidingTerm",
    "TimeRescaledGuide",
    "BackwardFilter",
    "MBlockFilter",
    "filter_backward",
    "g_epsilon",
    "g_zero_C",
    "g_euler_cle",
    "g_lna_restart",
    "g_poisson_hybrid",
    "OdeControl",
    "check_greedy",
    "DeltaPolicy",
    "NoJumpBeforeEnd",
    "delta_analytic",
    "guided_next_reaction",
    "simulate_guided",
    "log_psi",
    "log_weight_single",
    "log_weight_multi",
    "estimate_pmf",
    "logmeanexp",
    "MISS",
    "ExperimentConfig",
    "load_config",
    "RunSummary",
    "run_experiment",
    "tune_a_grid",
    "export_paths",
    "parse_paths",
    "write_outputs",
    "__version__",
]
