"""Guiding from one Euler step of the diffusion approximation.

g(t, x) is the Gaussian density of the observation under a single Euler
step of the chemical Langevin dynamics frozen at (t, x):

    N(v; L(x + b(t,x)(T-t)), L a(t,x) L' (T-t) + C)
"""

import math

import numpy as np

from ..errors import ModelDefinitionError, SingularCovariance
from ..network import cle_coefficients
from .base import GuidingTerm, Trend

_LOG2PI = math.log(2.0 * math.pi)


class GEulerCLE(GuidingTerm):
    def __init__(self, net, scheme, C):
        if not scheme.is_single():
            raise ModelDefinitionError("the Euler guide supports a single observation")
        self.net = net
        self.scheme = scheme
        o = scheme.observations[0]
        self.obs = o
        self.T = o.time
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        if self.C.shape != (o.m, o.m):
            raise ModelDefinitionError("C must be m x m")
        self.cle = cle_coefficients(net)
        self._scalar = net.d == 1 and o.m == 1
        if self._scalar:
            self._Ls = float(o.L[0, 0])
            self._vs = float(o.v[0])
            self._Cs = float(self.C[0, 0])

    def log_g(self, t, x):
        dt = self.T - t
        if self._scalar:
            lam_terms = [
                (r.intensity.value_real(x), r.xi[0]) for r in self.net.reactions
            ]
            b = sum(lam * xi for lam, xi in lam_terms)
            a = sum(max(lam, 0.0) * xi * xi for lam, xi in lam_terms)
            mean = self._Ls * (x[0] + b * dt)
            var = self._Ls * self._Ls * a * dt + self._Cs
            if var <= 0.0:
                raise SingularCovariance(f"degenerate variance at t={t}, x={x}")
            r = self._vs - mean
            return -0.5 * (_LOG2PI + math.log(var) + r * r / var)
        xv = np.asarray(x, dtype=float)
        mean = self.obs.L @ (xv + self.cle.drift(t, xv) * dt)
        cov = self.obs.L @ self.cle.covariance(t, xv) @ self.obs.L.T * dt + self.C
        r = self.obs.v - mean
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise SingularCovariance(f"degenerate covariance at t={t}, x={x}")
        w = np.linalg.solve(chol, r)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return -0.5 * (self.obs.m * _LOG2PI + logdet + float(w @ w))

    def trend(self, ell, t, x):
        return Trend.UNKNOWN


def g_euler_cle(net, scheme, C):
    return GEulerCLE(net, scheme, C)
