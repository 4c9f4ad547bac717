"""Simulation of the guided process.

Guided rates are lambda_ell^g(t, x) = alpha_ell(t, x) * lambda_ell(x). Jump
times are sampled exactly by Poisson thinning, with the bounding strategy
chosen from the time trend of each guided rate at the current state:

* Decreasing: the current rate bounds the future, ordinary thinning applies
  and the bound is tightened after every rejection.
* Increasing: the rate at the window end bounds the window; window sizes come
  from the closed-form acceptance-rate target when the guide provides the
  squared-distance increment, else half the remaining interval.
* Unknown: windows with the conservative bound max of both endpoint rates;
  a mid-window violation shrinks the window by half and retries.

Proposals are capped strictly below each observation time, so exact-hit
guides can push the state onto the conditioning through diverging rates.
"""

import math
from dataclasses import dataclass

from .errors import ExplosionGuard, InvalidBound, ModelDefinitionError, TimeDependentRate, WrongTrend
from .guiding.base import Trend
from .paths import GuidedPath, JumpPath

_END_GAP = 1e-12
_BOUND_SLACK = 1 + 1e-9
# rates this large fire within one float ulp of the current time
_IMMEDIATE_RATE = 1e12
# cap on bound * window length: keeps the expected number of thinning
# proposals per window bounded when the rate explodes near the window end
_WINDOW_MASS_CAP = 64.0


class _NoJump:
    __slots__ = ()

    def __repr__(self):
        return "NoJumpBeforeEnd"

    def __bool__(self):
        return False


NoJumpBeforeEnd = _NoJump()


@dataclass(frozen=True)
class DeltaPolicy:
    """Window-size rule for increasing or unknown rate trends."""

    mode: str  # "analytic_eta" or "half_remaining"
    eta: float = 0.5

    def __post_init__(self):
        if self.mode not in ("analytic_eta", "half_remaining"):
            raise ModelDefinitionError(f"unknown delta policy {self.mode!r}")
        if self.mode == "analytic_eta" and not 0.0 < self.eta < 1.0:
            raise ModelDefinitionError("eta must lie in (0, 1)")

    @classmethod
    def analytic_eta(cls, eta=0.5):
        return cls("analytic_eta", eta)

    @classmethod
    def half_remaining(cls):
        return cls("half_remaining")


def delta_analytic(eta, epsilon, T, t, dist_sq_increment):
    """Window length achieving per-proposal acceptance ratio at least eta.

    Valid for the scaled-Brownian guide when the reaction decreases the
    squared distance (increasing rate): delta = T + eps - t -
    (2 ln(eta) / increment + 1 / (T + eps - t))^{-1}, clipped to keep
    t + delta < T.
    """
    if not 0.0 < eta < 1.0:
        raise ModelDefinitionError("eta must lie in (0, 1)")
    if dist_sq_increment >= 0.0:
        raise WrongTrend(
            "the closed-form window applies only to distance-decreasing reactions"
        )
    rem = T + epsilon - t
    if rem <= 0.0:
        raise ModelDefinitionError("t must precede the observation time")
    delta = rem - 1.0 / (2.0 * math.log(eta) / dist_sq_increment + 1.0 / rem)
    if t + delta >= T:
        delta = (T - t) * (1.0 - 1e-12)
    return delta


def _thin_decreasing(lam, rate0, alpha_of, ell, t, limit, rng):
    """First accepted jump of a rate that is nonincreasing in time."""
    bound = rate0
    s = t
    while True:
        if bound <= 0.0:
            return None
        s = s + rng.exponential(bound)
        if s >= limit:
            return None
        rate = lam * alpha_of(s)
        if rate > bound * _BOUND_SLACK:
            raise InvalidBound(
                f"guided rate of reaction {ell} rose above its declared decreasing bound at t={s}"
            )
        if rng.uniform() * bound <= rate:
            return s
        bound = rate


def _thin_windows(lam, alpha_of, guide, ell, t, x, interval_end, limit, policy, rng, trend):
    """First accepted jump via per-window constant bounds."""
    s = t
    cap = interval_end - _END_GAP
    hard_limit = min(limit, cap)
    analytic = policy.mode == "analytic_eta"
    while s < hard_limit:
        rate_s = lam * alpha_of(s)
        if rate_s >= _IMMEDIATE_RATE:
            u = s + rng.exponential(rate_s)
            return u if u < limit else None
        tight = False
        if analytic:
            info = guide.analytic_delta_info(ell, s, x)
            if info is not None:
                inc, eps, T = info
                delta = delta_analytic(policy.eta, eps, T, s, inc)
                tight = True
            else:
                delta = (interval_end - s) * 0.5
        else:
            delta = (interval_end - s) * 0.5
        while True:
            w_end = min(s + delta, cap)
            if w_end <= s:
                return None
            rate_end = lam * alpha_of(w_end)
            if trend is Trend.INCREASING:
                bound = rate_end
            else:
                bound = max(rate_s, rate_end)
            # a loose bound makes the expected proposal count bound * length;
            # shrink the window unless the closed-form size already guarantees
            # a fixed acceptance ratio. If no representable window is small
            # enough the rate explodes within one ulp, so the jump is here.
            if not tight and bound * (w_end - s) > _WINDOW_MASS_CAP:
                delta = min(delta * 0.5, _WINDOW_MASS_CAP / bound)
                if s + delta <= s:
                    u = math.nextafter(s, math.inf)
                    return u if u < limit else None
                continue
            try:
                hit = _thin_one_window(lam, alpha_of, ell, s, w_end, bound, rng)
            except InvalidBound:
                if trend is Trend.INCREASING:
                    raise
                delta *= 0.5
                continue
            break
        if hit is not None:
            return hit if hit < limit else None
        s = w_end
    return None


def _thin_one_window(lam, alpha_of, ell, s, w_end, bound, rng):
    """Thinning inside [s, w_end] under a constant bound; None if no jump."""
    u = s
    while True:
        if bound <= 0.0:
            return None
        u = u + rng.exponential(bound)
        if u >= w_end:
            return None
        rate = lam * alpha_of(u)
        if rate > bound * _BOUND_SLACK:
            raise InvalidBound(
                f"guided rate of reaction {ell} exceeded its window bound at t={u}"
            )
        if rng.uniform() * bound <= rate:
            return u


def guided_next_reaction(guide, net, t, x, policy, interval_end, rng):
    """Next guided jump in [t, interval_end), or NoJumpBeforeEnd.

    Returns (reaction_index, waiting_time). Base intensities must be
    time-independent; reactions with zero intensity or zero jump ratio at
    (t, x) are skipped for this step.
    """
    if not net.time_homogeneous:
        raise TimeDependentRate("guided simulation needs state-only base intensities")
    best = interval_end
    best_ell = None
    for ell, reac in enumerate(net.reactions):
        lam = reac.intensity.value_real(x)
        if lam <= 0.0:
            continue
        x_next = guide._apply(x, ell)
        alpha_of = guide.alpha_fn(ell, x, x_next)
        alpha0 = alpha_of(t)
        if alpha0 == 0.0:
            continue
        trend = guide.trend(ell, t, x)
        if trend is Trend.DECREASING:
            cand = _thin_decreasing(lam, lam * alpha0, alpha_of, ell, t, best, rng)
        else:
            cand = _thin_windows(
                lam, alpha_of, guide, ell, t, x, interval_end, best, policy, rng, trend
            )
        if cand is not None and cand < best:
            best = cand
            best_ell = ell
    if best_ell is None:
        return NoJumpBeforeEnd
    return best_ell, best - t


def simulate_guided(guide, net, scheme, x0, policy, rng, max_events=10**6):
    """Sample a guided path over [0, t_n] with per-observation hit flags."""
    if guide.horizon < scheme.horizon:
        raise ModelDefinitionError("guide horizon does not cover the observation scheme")
    x = tuple(int(c) for c in x0)
    t = 0.0
    events = []
    hits = []
    for k, obs in enumerate(scheme.observations):
        end = obs.time
        while True:
            res = guided_next_reaction(guide, net, t, x, policy, end, rng)
            if res is NoJumpBeforeEnd:
                t = end
                break
            ell, wait = res
            t_jump = t + wait
            if events and t_jump <= events[-1][0]:
                t_jump = math.nextafter(events[-1][0], math.inf)
            events.append((t_jump, ell))
            x = net.apply(x, ell)
            t = t_jump
            if len(events) >= max_events:
                partial = JumpPath(tuple(x0), tuple(events), scheme.horizon, truncated=True)
                raise ExplosionGuard(
                    f"guided path exceeded {max_events} events before t={end}", partial
                )
        hits.append(obs.hit(x))
    path = JumpPath(tuple(x0), tuple(events), scheme.horizon)
    return GuidedPath(path, tuple(hits))
