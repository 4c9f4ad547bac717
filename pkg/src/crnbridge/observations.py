"""Observation schemes: ordered linear conditionings (t_k, L_k, v_k)."""

import numpy as np

from .errors import ModelDefinitionError


class Observation:
    """A single conditioning event L x(t) = v."""

    __slots__ = ("time", "L", "v", "m")

    def __init__(self, time, L, v):
        self.time = float(time)
        self.L = np.atleast_2d(np.asarray(L, dtype=float))
        self.v = np.atleast_1d(np.asarray(v, dtype=float))
        self.m = self.L.shape[0]
        if self.v.shape != (self.m,):
            raise ModelDefinitionError("observation vector length must match rows of L")
        if np.linalg.matrix_rank(self.L) < self.m:
            raise ModelDefinitionError("observation matrix L must have full row rank")

    def hit(self, x, tol=1e-9):
        return bool(np.all(np.abs(self.L @ np.asarray(x, dtype=float) - self.v) <= tol))


class ObservationScheme:
    """Ordered conditionings with their (possibly zero) covariances.

    The covariance convention is one of:
      * ``epsilon``: C_k = epsilon * L_k a_k L_k' with the guide's a_k,
      * ``zero_c=True``: C_k = 0 (exact-hit limit),
      * explicit per-observation matrices ``C_list``.
    """

    def __init__(self, observations, epsilon=None, C_list=None, zero_c=False):
        obs = sorted(observations, key=lambda o: o.time)
        times = [o.time for o in obs]
        if times != [o.time for o in observations]:
            raise ModelDefinitionError("observations must be given in time order")
        if any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
            raise ModelDefinitionError("observation times must satisfy 0 < t_1 < ... < t_n")
        if sum(x is not None and x is not False for x in (epsilon, C_list, zero_c or None)) > 1:
            raise ModelDefinitionError("specify at most one of epsilon, C_list, zero_c")
        self.observations = tuple(obs)
        self.epsilon = None if epsilon is None else float(epsilon)
        if self.epsilon is not None and self.epsilon <= 0:
            raise ModelDefinitionError("epsilon must be positive")
        self.zero_c = bool(zero_c)
        self.C_list = None
        if C_list is not None:
            self.C_list = [np.atleast_2d(np.asarray(C, dtype=float)) for C in C_list]
            if len(self.C_list) != len(obs):
                raise ModelDefinitionError("need one covariance per observation")

    @property
    def n(self):
        return len(self.observations)

    @property
    def times(self):
        return [o.time for o in self.observations]

    @property
    def horizon(self):
        return self.observations[-1].time

    def is_single(self):
        return self.n == 1

    def covariance(self, k, a_k):
        """C_k for the given interval diffusion matrix a_k."""
        if self.zero_c:
            o = self.observations[k]
            return np.zeros((o.m, o.m))
        if self.C_list is not None:
            return self.C_list[k]
        if self.epsilon is not None:
            o = self.observations[k]
            return self.epsilon * (o.L @ a_k @ o.L.T)
        raise ModelDefinitionError("scheme has no covariance convention")

    def hits(self, net, path):
        """Recompute the per-observation hit flags from a jump path."""
        return tuple(
            o.hit(path.state_at(net, o.time)) for o in self.observations
        )
