"""Exact-hit guiding: the C_k = 0 limit of the Gaussian filter.

g vanishes at an observation time off the target set, so the guided rates of
distance-decreasing reactions diverge as t approaches t_k, forcing the path
onto the conditioning. log g is nonincreasing in t everywhere off the
observation times. Under the greedy property of the network this choice makes
the guided law equivalent to the conditioned law.
"""

import math

import numpy as np

from ..errors import EvaluationAtMiss, ModelDefinitionError, SingularMetric
from .base import GuidingTerm, NEG_INF, Trend, exp_capped
from .filters import MBlockFilter, _normalize_a_list


class GZeroC(GuidingTerm):
    def __init__(self, net, scheme, a):
        if not scheme.zero_c:
            raise ModelDefinitionError("g_zero_C needs a scheme with zero_c=True")
        self.net = net
        self.scheme = scheme
        self.a_list = _normalize_a_list(a, scheme.n, net.d)
        self.single = scheme.is_single()
        if self.single:
            o = scheme.observations[0]
            self.T = o.time
            self.obs = o
            LaL = o.L @ self.a_list[0] @ o.L.T
            try:
                gamma = np.linalg.inv(LaL)
            except np.linalg.LinAlgError:
                raise SingularMetric("L a L' is singular")
            self.gamma = 0.5 * (gamma + gamma.T)
            self._Lrows = [list(map(float, row)) for row in o.L]
            self._vv = list(map(float, o.v))
            self._G = [list(map(float, row)) for row in self.gamma]
            self._w = []
            self._c = []
            for r in net.reactions:
                Lxi = o.L @ np.asarray(r.xi, dtype=float)
                w = 2.0 * (o.L.T @ (self.gamma @ Lxi))
                c = float(Lxi @ self.gamma @ Lxi - 2.0 * Lxi @ self.gamma @ o.v)
                self._w.append(list(map(float, w)))
                self._c.append(c)
        else:
            self.filter = MBlockFilter(scheme, self.a_list, zero_c=True)

    def _dist_sq(self, x):
        r = [self._vv[i] - sum(Lrow[j] * x[j] for j in range(len(x)))
             for i, Lrow in enumerate(self._Lrows)]
        G = self._G
        return sum(r[i] * sum(G[i][j] * r[j] for j in range(len(r))) for i in range(len(r)))

    def dist_sq_increment(self, ell, x):
        w = self._w[ell]
        return sum(w[k] * x[k] for k in range(len(x))) + self._c[ell]

    def log_g(self, t, x):
        if self.single:
            if t == self.T:
                return 0.0 if self.obs.hit(x) else NEG_INF
            return -self._dist_sq(x) / (2.0 * (self.T - t))
        return self.filter.log_g(t, x)

    def log_g_left(self, t, x):
        # the left limit at every observation time coincides with the
        # right-continuous value on the target set and is -inf off it
        return self.log_g(t, x)

    def alpha(self, ell, t, x, x_next=None):
        if self.single and t < self.T:
            return exp_capped(-self.dist_sq_increment(ell, x) / (2.0 * (self.T - t)))
        if x_next is None:
            x_next = self._apply(x, ell)
        den = self.log_g(t, x)
        if den == NEG_INF:
            raise EvaluationAtMiss(f"g(t={t}, x={x}) = 0: jump ratio undefined")
        num = self.log_g(t, x_next)
        return exp_capped(num - den)

    def alpha_fn(self, ell, x, x_next):
        if not self.single:
            return super().alpha_fn(ell, x, x_next)
        half_inc = -0.5 * self.dist_sq_increment(ell, x)

        def a(t, _exp=math.exp, _hi=half_inc, _T=self.T):
            v = _hi / (_T - t)
            return _exp(v if v < 700.0 else 700.0)

        return a

    def trend(self, ell, t, x):
        if self.single:
            return (
                Trend.DECREASING
                if self.dist_sq_increment(ell, x) >= 0.0
                else Trend.INCREASING
            )
        return Trend.UNKNOWN

    def analytic_delta_info(self, ell, t, x):
        if not self.single:
            return None
        inc = self.dist_sq_increment(ell, x)
        if inc >= 0.0:
            return None
        return inc, 0.0, self.T


def g_zero_C(net, scheme, a):
    """Guiding term with C_k = 0 (exact-hit limit)."""
    return GZeroC(net, scheme, a)
