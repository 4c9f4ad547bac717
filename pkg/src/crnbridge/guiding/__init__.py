from .base import Trend, GuidingTerm, TimeRescaledGuide, exp_capped
from .filters import BackwardFilter, MBlockFilter, filter_backward
from .epsilon import GEpsilon, g_epsilon
from .zero_c import GZeroC, g_zero_C
from .cle import GEulerCLE, g_euler_cle
from .lna import GLNARestart, OdeControl, g_lna_restart
from .poisson import GPoissonHybrid, g_poisson_hybrid
from .greedy import check_greedy

__all__ = [
    "Trend",
    "GuidingTerm",
    "TimeRescaledGuide",
    "exp_capped",
    "BackwardFilter",
    "MBlockFilter",
    "filter_backward",
    "GEpsilon",
    "g_epsilon",
    "GZeroC",
    "g_zero_C",
    "GEulerCLE",
    "g_euler_cle",
    "GLNARestart",
    "OdeControl",
    "g_lna_restart",
    "GPoissonHybrid",
    "g_poisson_hybrid",
    "check_greedy",
]
