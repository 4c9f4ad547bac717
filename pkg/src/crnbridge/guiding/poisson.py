"""Hybrid guiding for networks with one monotone component.

One coordinate y moves in only one direction; the remaining coordinates z
are guided by a scaled Brownian term while y is guided as a homogeneous
Poisson process of intensity theta counting the moves still required:

    log g(t, x) = -d(z_T, z)^2 / (2 (T - t))
                  + r log(theta (T - t)) - log(r!) - theta (T - t)

with r the number of remaining monotone moves. g vanishes when the target
is overshot (r < 0), so the reaction driving y toward the target gets rate
zero once y sits on it; no guided path can overshoot.
"""

import math

import numpy as np

from ..errors import ModelDefinitionError, SingularMetric
from .base import GuidingTerm, NEG_INF, Trend


class GPoissonHybrid(GuidingTerm):
    def __init__(self, net, scheme, a_sub, theta, monotone_index):
        if not scheme.is_single():
            raise ModelDefinitionError("the Poisson-hybrid guide supports a single observation")
        o = scheme.observations[0]
        if o.m != net.d or not np.array_equal(o.L, np.eye(net.d)):
            raise ModelDefinitionError("the Poisson-hybrid guide needs a full observation (L = I)")
        if theta <= 0.0:
            raise ModelDefinitionError("theta must be positive")
        self.net = net
        self.scheme = scheme
        self.obs = o
        self.T = o.time
        self.theta = float(theta)
        m = int(monotone_index)
        if not 0 <= m < net.d:
            raise ModelDefinitionError("monotone_index out of range")
        self.monotone_index = m
        signs = {int(np.sign(r.xi[m])) for r in net.reactions if r.xi[m] != 0}
        if len(signs) != 1:
            raise ModelDefinitionError(
                f"component {m} is not monotone: reaction increments differ in sign"
            )
        self.sign = signs.pop()
        self._v_mono = float(o.v[m])
        self._other = [k for k in range(net.d) if k != m]
        if self._other:
            a_sub = np.atleast_2d(np.asarray(a_sub, dtype=float))
            p = len(self._other)
            if a_sub.shape != (p, p):
                raise ModelDefinitionError(f"a_sub must be {p}x{p}")
            if not np.all(np.isfinite(a_sub)):
                raise SingularMetric("a_sub has non-finite entries")
            # conservation laws can make the non-monotone block exactly
            # rank-deficient; state differences stay inside its range, so
            # the pseudo-inverse metric is the right degenerate limit
            if np.linalg.matrix_rank(a_sub) < p:
                gamma = np.linalg.pinv(a_sub)
            else:
                gamma = np.linalg.inv(a_sub)
            self._G = [list(map(float, row)) for row in 0.5 * (gamma + gamma.T)]
            self._z_T = [float(o.v[k]) for k in self._other]
        else:
            self._G = []
            self._z_T = []

    def _remaining(self, x):
        """Monotone moves still needed; negative means overshoot."""
        return self.sign * (self._v_mono - x[self.monotone_index])

    def _dz_sq(self, x):
        r = [self._z_T[i] - x[k] for i, k in enumerate(self._other)]
        G = self._G
        return sum(r[i] * sum(G[i][j] * r[j] for j in range(len(r))) for i in range(len(r)))

    def log_g(self, t, x):
        rem = self._remaining(x)
        if rem < 0:
            return NEG_INF
        span = self.T - t
        if span <= 0.0:
            return 0.0 if self.obs.hit(x) else NEG_INF
        mu = self.theta * span
        out = -mu - math.lgamma(rem + 1.0)
        if rem > 0:
            out += rem * math.log(mu)
        if self._other:
            out -= self._dz_sq(x) / (2.0 * span)
        return out

    def alpha_fn(self, ell, x, x_next):
        rem0 = self._remaining(x)
        rem1 = self._remaining(x_next)
        if rem1 < 0 or rem0 < 0:
            return lambda t: 0.0
        A = 0.5 * (self._dz_sq(x) - self._dz_sq(x_next)) if self._other else 0.0
        B = rem1 - rem0
        K = math.lgamma(rem0 + 1.0) - math.lgamma(rem1 + 1.0)

        def a(t, _exp=math.exp, _log=math.log, _T=self.T, _th=self.theta):
            dt = _T - t
            if dt <= 0.0:
                if A < 0.0 or (A == 0.0 and B > 0):
                    return 0.0
                if A == 0.0 and B == 0:
                    return _exp(K)
                return _exp(700.0)
            v = A / dt + B * _log(_th * dt) + K
            return _exp(v if v < 700.0 else 700.0)

        return a

    def trend(self, ell, t, x):
        return Trend.UNKNOWN


def g_poisson_hybrid(net, scheme, a_sub, theta, monotone_index):
    return GPoissonHybrid(net, scheme, a_sub, theta, monotone_index)
