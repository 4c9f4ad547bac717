"""Exact simulation of the unconditioned jump process.

Time-homogeneous intensities use per-reaction exponential clocks; bounded
time-dependent intensities use per-reaction Poisson thinning. Both sample
the exact reaction-time law.
"""

import math

from .errors import ExplosionGuard, InvalidBound, ModelDefinitionError, TimeDependentRate
from .network import as_state
from .paths import JumpPath

DEFAULT_MAX_EVENTS = 10**6

#: sentinel for a state with zero total intensity
ABSORBED = None


def next_reaction_homogeneous(net, t, x, rng):
    """Draw per-reaction Exp(lambda_ell(x)) times; return (argmin, waiting time).

    Returns ``None`` when the state is absorbing. Raises
    :class:`TimeDependentRate` if any intensity is declared time-dependent.
    """
    if not net.time_homogeneous:
        raise TimeDependentRate("use next_reaction_thinning for time-dependent rates")
    best = math.inf
    best_ell = -1
    for ell, r in enumerate(net.reactions):
        lam = r.intensity(t, x)
        if lam > 0.0:
            tau = rng.exponential(lam)
            if tau < best:
                best = tau
                best_ell = ell
    if best_ell < 0:
        return ABSORBED
    return best_ell, best


def next_reaction_thinning(net, t, x, bounds, rng, horizon=math.inf):
    """Algorithm: per-reaction thinning against constant dominating rates.

    ``bounds[ell]`` must dominate ``lambda_ell(s, x)`` for all s >= t. The
    accepted time for each reaction has survival function
    exp(-int_t^{t+D} lambda_ell(s, x) ds). Proposals past ``horizon`` are
    dropped; returns ``None`` if no reaction fires before the horizon.
    """
    best = math.inf
    best_ell = -1
    for ell, r in enumerate(net.reactions):
        bar = bounds[ell]
        if bar < 0:
            raise ModelDefinitionError("thinning bound must be nonnegative")
        if bar == 0.0:
            continue
        t_star = t
        while True:
            t_star += rng.exponential(bar)
            if t_star >= horizon or t_star - t >= best:
                break
            lam = r.intensity(t_star, x)
            if lam > bar * (1.0 + 1e-12):
                raise InvalidBound(
                    f"reaction {ell}: intensity {lam} exceeds bound {bar} at t={t_star}"
                )
            if rng.uniform() <= lam / bar:
                best = t_star - t
                best_ell = ell
                break
    if best_ell < 0:
        return ABSORBED
    return best_ell, best


def simulate_forward(net, x0, horizon, rng, max_events=DEFAULT_MAX_EVENTS):
    """Simulate the unconditioned process on [0, horizon].

    Raises :class:`ExplosionGuard` (carrying the partial path) if
    ``max_events`` is reached before the horizon.
    """
    if max_events <= 0:
        raise ModelDefinitionError("max_events must be positive")
    x = as_state(x0)
    t = 0.0
    events = []
    if net.time_homogeneous:
        step = lambda t, x: next_reaction_homogeneous(net, t, x, rng)
    else:
        bounds = []
        for ell, r in enumerate(net.reactions):
            if not r.intensity.time_dependent:
                # time-independent reaction: its own value is a tight bound,
                # refreshed per state below
                bounds.append(None)
            elif r.intensity.bound is None:
                raise ModelDefinitionError(
                    f"time-dependent reaction {ell} needs a declared bound for thinning"
                )
            else:
                bounds.append(r.intensity.bound)

        def step(t, x):
            bnds = [
                b if b is not None else net.reactions[ell].intensity(t, x)
                for ell, b in enumerate(bounds)
            ]
            return next_reaction_thinning(net, t, x, bnds, rng, horizon=horizon)

    while True:
        nxt = step(t, x)
        if nxt is ABSORBED:
            break
        ell, tau = nxt
        if t + tau > horizon:
            break
        t = t + tau
        x = net.apply(x, ell)
        events.append((t, ell))
        if len(events) >= max_events and t < horizon:
            partial = JumpPath(as_state(x0), tuple(events), horizon, truncated=True)
            raise ExplosionGuard(
                f"max_events={max_events} reached at t={t} before horizon={horizon}",
                partial,
            )
    return JumpPath(as_state(x0), tuple(events), float(horizon))
