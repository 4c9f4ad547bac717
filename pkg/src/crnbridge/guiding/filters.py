"""Backward filters for Gaussian guiding over multiple observations.

Two equivalent representations are kept:

* :class:`BackwardFilter`: quadratic-form parameters (H, F) of log g, solved
  in closed form per interval. Matrix sizes stay d x d regardless of the
  number of observations; preferred whenever every C_k is invertible.
* :class:`MBlockFilter`: the stacked-observation form with the block
  precision matrix; dimensions grow with the remaining observations but it
  stays meaningful when C_k = 0.
"""

import numpy as np
from scipy.linalg import solve_triangular

from ..errors import ModelDefinitionError, SingularC
from .base import NEG_INF


def _normalize_a_list(a_list, n, d):
    if isinstance(a_list, (list, tuple)):
        mats = [np.atleast_2d(np.asarray(a, dtype=float)) for a in a_list]
    else:
        mats = [np.atleast_2d(np.asarray(a_list, dtype=float))] * n
    if len(mats) != n:
        raise ModelDefinitionError("need one a-matrix per observation interval")
    for a in mats:
        if a.shape != (d, d):
            raise ModelDefinitionError(f"a-matrix must be {d}x{d}")
    return mats


class BackwardFilter:
    """Closed-form (H, F) over [0, t_n] with jump updates at each t_k.

    Within interval k (t in [t_{k-1}, t_k)): H(t) = z_k(t) H_k with
    z_k(t) = (I + H_k a_k (t_k - t))^{-1}, and the end condition
    H_k = L_k' C_k^{-1} L_k + H(t_k+). Right-continuous at interior
    observation times.
    """

    def __init__(self, scheme, a_list):
        obs = scheme.observations
        d = obs[0].L.shape[1]
        self.scheme = scheme
        self.d = d
        self.a = _normalize_a_list(a_list, scheme.n, d)
        self.times = [o.time for o in obs]
        self.H_end = []
        self.F_end = []
        H_after = np.zeros((d, d))
        F_after = np.zeros(d)
        for k in range(scheme.n - 1, -1, -1):
            o = obs[k]
            C = scheme.covariance(k, self.a[k])
            try:
                Cinv = np.linalg.inv(C)
            except np.linalg.LinAlgError:
                raise SingularC(f"C_{k} is singular; use the zero-C guide instead")
            if not np.all(np.isfinite(Cinv)):
                raise SingularC(f"C_{k} is singular; use the zero-C guide instead")
            Hk = o.L.T @ Cinv @ o.L + H_after
            Fk = o.L.T @ (Cinv @ o.v) + F_after
            self.H_end.insert(0, Hk)
            self.F_end.insert(0, Fk)
            if k > 0:
                dt = self.times[k] - self.times[k - 1]
                z = np.linalg.inv(np.eye(d) + Hk @ self.a[k] * dt)
                H_after = z @ Hk
                H_after = 0.5 * (H_after + H_after.T)
                F_after = z @ Fk
        self._cache = {}

    def interval_index(self, t, left=False):
        """Interval k containing t; right-continuous at interior t_k unless
        ``left``. t == t_n always belongs to the last interval."""
        n = len(self.times)
        if t > self.times[-1] or t < 0.0:
            raise ModelDefinitionError(f"t={t} outside [0, {self.times[-1]}]")
        for k, tk in enumerate(self.times):
            if t < tk or (t == tk and (left or k == n - 1)):
                return k
        return n - 1

    def HF(self, t, left=False):
        key = (t, left)
        out = self._cache.get(key)
        if out is not None:
            return out
        k = self.interval_index(t, left=left)
        Hk, Fk = self.H_end[k], self.F_end[k]
        dt = self.times[k] - t
        if dt == 0.0:
            out = (Hk, Fk)
        else:
            z = np.linalg.inv(np.eye(self.d) + Hk @ self.a[k] * dt)
            H = z @ Hk
            out = (0.5 * (H + H.T), z @ Fk)
        if len(self._cache) > 256:
            self._cache.clear()
        self._cache[key] = out
        return out

    def log_g(self, t, x, left=False):
        H, F = self.HF(t, left=left)
        x = np.asarray(x, dtype=float)
        return float(-0.5 * x @ H @ x + F @ x)


def filter_backward(scheme, a_list):
    """Build the closed-form backward filter; every C_k must be invertible."""
    return BackwardFilter(scheme, a_list)


class MBlockFilter:
    """Stacked-observation representation of log g.

    For t in interval q, log g(t, x) = -1/2 (v(t) - L(t) x)' M(t) (v(t) - L(t) x)
    where L(t), v(t) stack the remaining observations and M(t) is the inverse
    of the block covariance of the auxiliary process at the observation times.
    """

    def __init__(self, scheme, a_list, zero_c=None):
        obs = scheme.observations
        d = obs[0].L.shape[1]
        self.scheme = scheme
        self.d = d
        self.n = scheme.n
        self.a = _normalize_a_list(a_list, scheme.n, d)
        self.times = [o.time for o in obs]
        self.zero_c = scheme.zero_c if zero_c is None else zero_c
        self.L_stack = [np.vstack([o.L for o in obs[q:]]) for q in range(self.n)]
        self.v_stack = [np.concatenate([o.v for o in obs[q:]]) for q in range(self.n)]
        if self.zero_c:
            self.C = [np.zeros((o.m, o.m)) for o in obs]
        else:
            self.C = [scheme.covariance(k, self.a[k]) for k in range(self.n)]
        # cross-block Gram pieces L_i a_l L_j' are assembled per evaluation;
        # precompute L_i a_l for reuse
        self._La = [[obs[i].L @ self.a[l] for l in range(self.n)] for i in range(self.n)]
        self._cache = {}

    def interval_index(self, t, left=False):
        n = len(self.times)
        if t > self.times[-1] or t < 0.0:
            raise ModelDefinitionError(f"t={t} outside [0, {self.times[-1]}]")
        for q, tq in enumerate(self.times):
            if t < tq or (t == tq and left):
                return q
        return n  # t == t_n, right side: filter exhausted

    def m_dagger(self, t, q):
        """Block covariance of the remaining observations given time t in
        interval q."""
        obs = self.scheme.observations
        sizes = [o.m for o in obs[q:]]
        offs = np.concatenate([[0], np.cumsum(sizes)])
        tot = offs[-1]
        M = np.zeros((tot, tot))
        for ii, i in enumerate(range(q, self.n)):
            for jj, j in enumerate(range(q, self.n)):
                m = min(i, j)
                block = self._La[i][q] * (self.times[q] - t)
                for l in range(q + 1, m + 1):
                    block = block + self._La[i][l] * (self.times[l] - self.times[l - 1])
                block = block @ obs[j].L.T
                if i == j:
                    block = block + self.C[i]
                M[offs[ii]:offs[ii + 1], offs[jj]:offs[jj + 1]] = block
        return 0.5 * (M + M.T)

    def quad_form(self, t, x, q=None, left=False):
        """(v(t) - L(t) x)' M(t) (v(t) - L(t) x); requires t strictly inside
        an interval for the zero-C case."""
        if q is None:
            q = self.interval_index(t, left=left)
        x = np.asarray(x, dtype=float)
        r = self.v_stack[q] - self.L_stack[q] @ x
        key = (t, q)
        chol = self._cache.get(key)
        if chol is None:
            Md = self.m_dagger(t, q)
            chol = np.linalg.cholesky(Md)
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[key] = chol
        w = solve_triangular(chol, r, lower=True)
        return float(w @ w)

    def log_g(self, t, x, left=False):
        """Right-continuous log g; -inf on the miss set at observation times
        when C = 0."""
        obs = self.scheme.observations
        if self.zero_c:
            if t in self.times:
                # on the target set the left limit equals the right value;
                # off it g vanishes (both sides)
                k = self.times.index(t)
                if not obs[k].hit(x):
                    return NEG_INF
                if k == self.n - 1:
                    return 0.0
                return -0.5 * self.quad_form(t, x, q=k + 1)
            return -0.5 * self.quad_form(t, x)
        if t == self.times[-1]:
            # continuous at t_n when C > 0: covariance reduces to C_n
            r = obs[-1].v - obs[-1].L @ np.asarray(x, dtype=float)
            return float(-0.5 * r @ np.linalg.solve(self.C[-1], r))
        return -0.5 * self.quad_form(t, x, left=left)
