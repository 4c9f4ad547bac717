"""Scaled-Brownian guiding with observation covariance C_k = eps * L a L'.

For a single observation the jump ratio has the closed form

    alpha_ell(t, x) = exp(-(d(v, L(x+xi))^2 - d(v, Lx)^2) / (2 (eps + T - t)))

with d the metric induced by (L a L')^{-1}; the squared-distance increment
is linear in x and is precomputed per reaction. The map t -> alpha is
monotone, which the guided simulator exploits for tight thinning bounds.
Multiple observations are handled through the backward filter.
"""

import math

import numpy as np

from ..errors import ModelDefinitionError, SingularMetric
from .base import GuidingTerm, Trend, exp_capped
from .filters import BackwardFilter, _normalize_a_list


class GEpsilon(GuidingTerm):
    def __init__(self, net, scheme, a):
        if scheme.epsilon is None:
            raise ModelDefinitionError("g_epsilon needs a scheme with epsilon > 0")
        self.net = net
        self.scheme = scheme
        self.a_list = _normalize_a_list(a, scheme.n, net.d)
        self.single = scheme.is_single()
        if self.single:
            o = scheme.observations[0]
            self.T = o.time
            self.eps = scheme.epsilon
            LaL = o.L @ self.a_list[0] @ o.L.T
            try:
                gamma = np.linalg.inv(LaL)
            except np.linalg.LinAlgError:
                raise SingularMetric("L a L' is singular")
            if not np.all(np.isfinite(gamma)):
                raise SingularMetric("L a L' is singular")
            self.gamma = 0.5 * (gamma + gamma.T)
            self.L = o.L
            self.v = o.v
            # residual form of the squared distance, as python floats
            self._Lrows = [list(map(float, row)) for row in o.L]
            self._vv = list(map(float, o.v))
            self._G = [list(map(float, row)) for row in self.gamma]
            # dist-sq increment is linear in x: delta_ell(x) = w_ell . x + c_ell
            self._w = []
            self._c = []
            for r in net.reactions:
                Lxi = o.L @ np.asarray(r.xi, dtype=float)
                w = 2.0 * (o.L.T @ (self.gamma @ Lxi))
                c = float(Lxi @ self.gamma @ Lxi - 2.0 * Lxi @ self.gamma @ o.v)
                self._w.append(list(map(float, w)))
                self._c.append(c)
        else:
            self.filter = BackwardFilter(scheme, self.a_list)
            self._xi = [np.asarray(r.xi, dtype=float) for r in net.reactions]

    # -- single observation -------------------------------------------------

    def _dist_sq(self, x):
        r = [self._vv[i] - sum(Lrow[j] * x[j] for j in range(len(x)))
             for i, Lrow in enumerate(self._Lrows)]
        G = self._G
        return sum(r[i] * sum(G[i][j] * r[j] for j in range(len(r))) for i in range(len(r)))

    def dist_sq_increment(self, ell, x):
        """d(v, L(x+xi_ell))^2 - d(v, Lx)^2."""
        w = self._w[ell]
        return sum(w[k] * x[k] for k in range(len(x))) + self._c[ell]

    # -- contract ------------------------------------------------------------

    def log_g(self, t, x):
        if self.single:
            return -self._dist_sq(x) / (2.0 * (self.eps + self.T - t))
        return self.filter.log_g(t, x)

    def log_g_left(self, t, x):
        if self.single:
            return self.log_g(t, x)
        return self.filter.log_g(t, x, left=True)

    def alpha(self, ell, t, x, x_next=None):
        if self.single:
            return exp_capped(
                -self.dist_sq_increment(ell, x) / (2.0 * (self.eps + self.T - t))
            )
        H, F = self.filter.HF(t)
        xi = self._xi[ell]
        xv = np.asarray(x, dtype=float)
        Hxi = H @ xi
        return exp_capped(float(-Hxi @ xv - 0.5 * Hxi @ xi + F @ xi))

    def alpha_fn(self, ell, x, x_next):
        if not self.single:
            return super().alpha_fn(ell, x, x_next)
        half_inc = -0.5 * self.dist_sq_increment(ell, x)
        off = self.eps + self.T

        def a(t, _exp=math.exp, _hi=half_inc, _off=off):
            v = _hi / (_off - t)
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
        return inc, self.eps, self.T


def g_epsilon(net, scheme, a):
    """Guiding term from a scaled Brownian filter, C_k = eps * L_k a_k L_k'."""
    return GEpsilon(net, scheme, a)
