"""Guiding from the linear noise approximation restarted at the current state.

From (t, x), mean and covariance of the diffusion approximation are
integrated over the remaining time with zero initial covariance:

    dz/ds = b(z),   dV/ds = J_b(z) V + V J_b(z)' + a(z),   z(0) = x, V(0) = 0

and g(t, x) = N(v; L z(T-t), L V(T-t) L' + C).

Networks here have state-only intensities, so the flow from x depends on the
elapsed time alone. Each state is integrated once over the full horizon on a
dense grid and the guide interpolates that solution; the interpolant itself
defines the guide, which keeps simulation and weighting consistent. An exact
per-point solve is kept for accuracy checks.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import ModelDefinitionError, OdeFailure, SingularCovariance
from ..network import cle_coefficients
from .base import GuidingTerm, Trend

_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class OdeControl:
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "RK45"
    grid_points: int = 513
    max_cached_states: int = 4096


class GLNARestart(GuidingTerm):
    def __init__(self, net, scheme, C, ode_control=None):
        if not scheme.is_single():
            raise ModelDefinitionError("the restarted-LNA guide supports a single observation")
        self.net = net
        self.scheme = scheme
        self.control = ode_control or OdeControl()
        o = scheme.observations[0]
        self.obs = o
        self.T = o.time
        self.C = np.atleast_2d(np.asarray(C, dtype=float))
        if self.C.shape != (o.m, o.m):
            raise ModelDefinitionError("C must be m x m")
        self.cle = cle_coefficients(net)
        d = net.d
        self.d = d
        self._cache = {}
        self._scalar = d == 1 and o.m == 1
        if self._scalar:
            self._Ls = float(o.L[0, 0])
            self._Ls2 = self._Ls * self._Ls
            self._vs = float(o.v[0])
            self._Cs = float(self.C[0, 0])
            self._n_grid = self.control.grid_points
            self._inv_h = (self._n_grid - 1) / self.T

    def _rhs(self, s, y):
        d = self.d
        z = y[:d]
        V = y[d:].reshape(d, d)
        b = self.cle.drift(s, z)
        a = self.cle.covariance(s, z)
        J = self.cle.drift_jacobian(s, z)
        dV = J @ V + V @ J.T + a
        return np.concatenate([b, dV.ravel()])

    def solve_ode(self, t, x):
        """Integrate (z, V) from (t, x) to the observation time with the
        configured tolerances; one fresh solve per call."""
        d = self.d
        span = self.T - t
        y0 = np.concatenate([np.asarray(x, dtype=float), np.zeros(d * d)])
        if span == 0.0:
            return y0[:d], np.zeros((d, d))
        sol = solve_ivp(
            self._rhs,
            (0.0, span),
            y0,
            method=self.control.method,
            rtol=self.control.rtol,
            atol=self.control.atol,
        )
        if not sol.success:
            raise OdeFailure(f"mean/covariance integration failed from x={x}: {sol.message}")
        yT = sol.y[:, -1]
        V = yT[d:].reshape(d, d)
        return yT[:d], 0.5 * (V + V.T)

    def _flow(self, x):
        """Dense-grid solution of (z, V) over the full horizon from x.

        The grid is uniform; scalar networks store plain float lists so the
        interpolation below stays out of numpy."""
        key = tuple(x)
        flow = self._cache.get(key)
        if flow is not None:
            return flow
        d = self.d
        n = self.control.grid_points
        grid = np.linspace(0.0, self.T, n)
        y0 = np.concatenate([np.asarray(x, dtype=float), np.zeros(d * d)])
        sol = solve_ivp(
            self._rhs,
            (0.0, self.T),
            y0,
            method=self.control.method,
            rtol=self.control.rtol,
            atol=self.control.atol,
            t_eval=grid,
        )
        if not sol.success:
            raise OdeFailure(f"mean/covariance integration failed from x={x}: {sol.message}")
        if self._scalar:
            flow = (list(map(float, sol.y[0])), list(map(float, sol.y[1])))
        else:
            flow = (grid, sol.y)
        if len(self._cache) >= self.control.max_cached_states:
            self._cache.clear()
        self._cache[key] = flow
        return flow

    def _zV_at(self, x, span):
        grid, Y = self._flow(x)
        d = self.d
        if span <= 0.0:
            return Y[:d, 0], Y[d:, 0].reshape(d, d)
        j = int(np.searchsorted(grid, span))
        if j >= len(grid):
            j = len(grid) - 1
        if j == 0:
            j = 1
        s0, s1 = grid[j - 1], grid[j]
        w = (span - s0) / (s1 - s0)
        y = Y[:, j - 1] * (1.0 - w) + Y[:, j] * w
        return y[:d], y[d:].reshape(d, d)

    def _log_g_scalar(self, span, x):
        if span <= 0.0:
            z, V = float(x[0]), 0.0
        else:
            zs, Vs = self._flow(x)
            pos = span * self._inv_h
            j = int(pos)
            if j >= self._n_grid - 1:
                j = self._n_grid - 2
            w = pos - j
            z = zs[j] * (1.0 - w) + zs[j + 1] * w
            V = Vs[j] * (1.0 - w) + Vs[j + 1] * w
        var = self._Ls2 * V + self._Cs
        if var <= 0.0:
            raise SingularCovariance(f"degenerate variance at state {x}")
        r = self._vs - self._Ls * z
        return -0.5 * (_LOG2PI + math.log(var) + r * r / var)

    def log_g(self, t, x):
        span = self.T - t
        if self._scalar:
            return self._log_g_scalar(span, x)
        z, V = self._zV_at(x, span)
        mean = self.obs.L @ z
        cov = self.obs.L @ V @ self.obs.L.T + self.C
        r = self.obs.v - mean
        try:
            chol = np.linalg.cholesky(0.5 * (cov + cov.T))
        except np.linalg.LinAlgError:
            raise SingularCovariance(f"degenerate covariance at t={t}, x={x}")
        w = np.linalg.solve(chol, r)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return -0.5 * (self.obs.m * _LOG2PI + logdet + float(w @ w))

    def alpha_fn(self, ell, x, x_next):
        if not self._scalar:
            return super().alpha_fn(ell, x, x_next)
        z0, V0 = self._flow(x)
        z1, V1 = self._flow(x_next)
        n2 = self._n_grid - 2

        def a(
            t,
            _exp=math.exp,
            _log=math.log,
            _T=self.T,
            _ih=self._inv_h,
            _Ls=self._Ls,
            _Ls2=self._Ls2,
            _vs=self._vs,
            _Cs=self._Cs,
        ):
            pos = (_T - t) * _ih
            j = int(pos)
            if j > n2:
                j = n2
            w = pos - j
            u = 1.0 - w
            za = z1[j] * u + z1[j + 1] * w
            Va = V1[j] * u + V1[j + 1] * w
            zb = z0[j] * u + z0[j + 1] * w
            Vb = V0[j] * u + V0[j + 1] * w
            va = _Ls2 * Va + _Cs
            vb = _Ls2 * Vb + _Cs
            ra = _vs - _Ls * za
            rb = _vs - _Ls * zb
            d = 0.5 * (_log(vb / va) + rb * rb / vb - ra * ra / va)
            return _exp(d if d < 700.0 else 700.0)

        return a

    def log_g_exact(self, t, x):
        """log g evaluated with a fresh ODE solve instead of the grid."""
        z, V = self.solve_ode(t, x)
        mean = self.obs.L @ z
        cov = self.obs.L @ V @ self.obs.L.T + self.C
        r = self.obs.v - mean
        try:
            chol = np.linalg.cholesky(0.5 * (cov + cov.T))
        except np.linalg.LinAlgError:
            raise SingularCovariance(f"degenerate covariance at t={t}, x={x}")
        w = np.linalg.solve(chol, r)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        return -0.5 * (self.obs.m * _LOG2PI + logdet + float(w @ w))

    def trend(self, ell, t, x):
        return Trend.UNKNOWN


def g_lna_restart(net, scheme, C, ode_control=None):
    return GLNARestart(net, scheme, C, ode_control)
