"""Exhaustive check of the greedy reachability condition.

The exact-hit (zero-C) guide is equivalent to the conditioned process when
every state off a target set admits an active reaction that strictly
decreases the distance to that target. This verifies the condition state by
state over a finite region.
"""

import numpy as np

from ..errors import TimeDependentRate
from .filters import _normalize_a_list


def check_greedy(net, scheme, a_list, region):
    """Return the violations of the greedy condition over ``region``.

    Each violation is a tuple ``(k, (t_start, t_k), x)``: in the interval
    leading up to observation k, the state x misses the target set yet no
    active reaction decreases the distance d_k(v_k, L_k x) induced by
    (L_k a_k L_k')^{-1}. An empty list means the condition holds on the
    region and the zero-C guided law is equivalent to the conditioned law
    there.
    """
    if not net.time_homogeneous:
        raise TimeDependentRate(
            "the greedy check needs state-only intensities to be exhaustive"
        )
    a_mats = _normalize_a_list(a_list, scheme.n, net.d)
    xi = [np.asarray(r.xi, dtype=float) for r in net.reactions]
    violations = []
    times = scheme.times
    for k, o in enumerate(scheme.observations):
        LaL = o.L @ a_mats[k] @ o.L.T
        gamma = np.linalg.inv(LaL)
        gamma = 0.5 * (gamma + gamma.T)
        t_start = 0.0 if k == 0 else times[k - 1]
        for x in region:
            state = tuple(int(c) for c in x)
            r = o.v - o.L @ np.asarray(state, dtype=float)
            if o.hit(state):
                continue
            base = float(r @ gamma @ r)
            found = False
            for ell, reac in enumerate(net.reactions):
                if reac.intensity.value_real(state) <= 0.0:
                    continue
                rn = r - o.L @ xi[ell]
                if float(rn @ gamma @ rn) < base:
                    found = True
                    break
            if not found:
                violations.append((k, (t_start, times[k]), state))
    return violations
