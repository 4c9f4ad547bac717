"""Shared evaluation contract for guiding functions.

All guiding terms work in the log domain: g = 0 is represented by -inf.
The jump ratio alpha(ell, t, x) = g(t, x + xi_ell) / g(t, x) multiplies the
base intensity to give the guided rate; its time trend drives the choice of
thinning bound in the guided simulator.
"""

import enum
import math

from ..errors import EvaluationAtMiss

NEG_INF = float("-inf")

# exp() overflow guard: rates above e^700 fire "immediately" anyway
LOG_RATE_CAP = 700.0


def exp_capped(logv):
    if logv > LOG_RATE_CAP:
        return math.exp(LOG_RATE_CAP)
    if logv == NEG_INF:
        return 0.0
    return math.exp(logv)


class Trend(enum.Enum):
    DECREASING = "decreasing"
    INCREASING = "increasing"
    UNKNOWN = "unknown"


class GuidingTerm:
    """Abstract guiding function over [0, t_n].

    Subclasses provide ``log_g`` (right-continuous at observation times) and
    may override ``alpha``/``trend`` with closed forms. ``log_g_left`` is the
    left limit, differing from ``log_g`` only at observation times.
    """

    scheme = None

    @property
    def horizon(self):
        return self.scheme.horizon

    def log_g(self, t, x):
        raise NotImplementedError

    def log_g_left(self, t, x):
        return self.log_g(t, x)

    def alpha(self, ell, t, x, x_next=None):
        if x_next is None:
            x_next = self._apply(x, ell)
        den = self.log_g(t, x)
        if den == NEG_INF:
            raise EvaluationAtMiss(f"g(t={t}, x={x}) = 0: jump ratio undefined")
        num = self.log_g(t, x_next)
        return exp_capped(num - den)

    def trend(self, ell, t, x):
        return Trend.UNKNOWN

    def alpha_fn(self, ell, x, x_next):
        """Callable t -> alpha(ell, t, x) for a frozen state.

        Quadrature along a constant-state segment evaluates the jump ratio
        many times; subclasses override this with closures that hoist the
        state-dependent work out of the time loop.
        """
        return lambda t: self.alpha(ell, t, x, x_next)

    def analytic_delta_info(self, ell, t, x):
        """(dist_sq_increment, epsilon, T) when the closed-form window size
        applies to this reaction, else None."""
        return None

    def _apply(self, x, ell):
        xi = self.net.reactions[ell].xi
        return tuple(x[k] + xi[k] for k in range(len(x)))


class TimeRescaledGuide(GuidingTerm):
    """Wraps a guide with g -> kappa(t) * g.

    Jump ratios are unchanged (kappa cancels), so the induced guided law and
    all realized importance weights are invariant. Used to exercise exactly
    that invariance.
    """

    def __init__(self, base, log_kappa):
        self.base = base
        self.log_kappa = log_kappa
        self.net = base.net
        self.scheme = base.scheme

    def log_g(self, t, x):
        lg = self.base.log_g(t, x)
        return lg if lg == NEG_INF else lg + self.log_kappa(t)

    def log_g_left(self, t, x):
        lg = self.base.log_g_left(t, x)
        return lg if lg == NEG_INF else lg + self.log_kappa(t)

    def alpha(self, ell, t, x, x_next=None):
        return self.base.alpha(ell, t, x, x_next)

    def alpha_fn(self, ell, x, x_next):
        return self.base.alpha_fn(ell, x, x_next)

    def trend(self, ell, t, x):
        return self.base.trend(ell, t, x)

    def analytic_delta_info(self, ell, t, x):
        return self.base.analytic_delta_info(ell, t, x)
