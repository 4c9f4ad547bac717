"""Exact sampling of the guided jump process."""

import math

import numpy as np
import pytest
from scipy import stats

from crnbridge import (
    DeltaPolicy,
    NoJumpBeforeEnd,
    Observation,
    ObservationScheme,
    RngStream,
    delta_analytic,
    g_epsilon,
    g_poisson_hybrid,
    g_zero_C,
    guided_next_reaction,
    simulate_guided,
)
from crnbridge.errors import ExplosionGuard, ModelDefinitionError, WrongTrend
from crnbridge.models import death_process


def eps_guide(net, v=30.0, T=1.0, epsilon=1e-5, a=2.5):
    scheme = ObservationScheme([Observation(T, [[1.0]], [v])], epsilon=epsilon)
    return g_epsilon(net, scheme, np.array([[a]])), scheme


def zero_c_guide(net, v=30.0, T=1.0, a=50.0):
    scheme = ObservationScheme([Observation(T, [[1.0]], [v])], zero_c=True)
    return g_zero_C(net, scheme, np.array([[a]])), scheme


class TestDeltaAnalytic:
    def test_frozen_value(self):
        # rem = 1, increment = -2, eta = 1/2:
        # delta = 1 - 1/(ln 2 + 1) = 0.40938...
        assert delta_analytic(0.5, 0.0, 1.0, 0.0, -2.0) == pytest.approx(
            1.0 - 1.0 / (math.log(2.0) + 1.0), rel=1e-12
        )
        assert delta_analytic(0.5, 0.0, 1.0, 0.0, -2.0) == pytest.approx(0.4094, abs=1e-4)

    def test_larger_eta_gives_smaller_window(self):
        d_lo = delta_analytic(0.3, 1e-5, 1.0, 0.2, -1.5)
        d_hi = delta_analytic(0.9, 1e-5, 1.0, 0.2, -1.5)
        assert d_hi < d_lo

    def test_window_stays_before_observation(self):
        t = 0.2
        d = delta_analytic(0.5, 10.0, 1.0, t, -0.01)
        assert t + d < 1.0

    def test_wrong_trend_rejected(self):
        with pytest.raises(WrongTrend):
            delta_analytic(0.5, 1e-5, 1.0, 0.0, 2.0)

    def test_bad_eta_rejected(self):
        with pytest.raises(ModelDefinitionError):
            delta_analytic(1.5, 1e-5, 1.0, 0.0, -1.0)


def first_jump_sample(guide, net, policy, seed, n, x=(50,)):
    rng = RngStream(seed)
    waits = []
    for _ in range(n):
        res = guided_next_reaction(guide, net, 0.0, x, policy, 1.0, rng)
        assert res is not NoJumpBeforeEnd
        ell, wait = res
        assert ell == 0
        waits.append(wait)
    return waits


def first_jump_cdf(guide, net, x=(50,)):
    from scipy.integrate import quad

    lam = net.reactions[0].intensity.value_real(x)
    alpha_of = guide.alpha_fn(0, x, net.apply(x, 0))

    def cdf(ts):
        ts = np.atleast_1d(np.asarray(ts, float))
        order = np.argsort(ts)
        cum = np.empty(len(ts))
        total, prev = 0.0, 0.0
        for i in order:
            total += quad(lambda s: lam * alpha_of(s), prev, ts[i], limit=200)[0]
            cum[i] = total
            prev = ts[i]
        return 1.0 - np.exp(-cum)

    return cdf


class TestFirstJumpLaw:
    def test_matches_quadrature_survival(self):
        # the accepted waiting time has survival exp(-int lambda alpha)
        net = death_process(0.5)
        guide, _ = eps_guide(net)
        waits = first_jump_sample(guide, net, DeltaPolicy.analytic_eta(), 17, 4000)
        _, p = stats.kstest(waits, first_jump_cdf(guide, net))
        assert p > 0.01

    def test_policy_choice_does_not_change_the_law(self):
        net = death_process(0.5)
        guide, _ = zero_c_guide(net)
        a = first_jump_sample(guide, net, DeltaPolicy.analytic_eta(0.3), 21, 3000)
        b = first_jump_sample(guide, net, DeltaPolicy.half_remaining(), 22, 3000)
        _, p = stats.ks_2samp(a, b)
        assert p > 0.01

    def test_zero_c_law_matches_quadrature(self):
        net = death_process(0.5)
        guide, _ = zero_c_guide(net)
        waits = first_jump_sample(guide, net, DeltaPolicy.half_remaining(), 23, 4000)
        _, p = stats.kstest(waits, first_jump_cdf(guide, net))
        assert p > 0.01


class TestGuidedNextReaction:
    def test_absorbing_state_gives_no_jump(self):
        net = death_process(0.5)
        guide, _ = eps_guide(net)
        res = guided_next_reaction(
            net=net,
            guide=guide,
            t=0.0,
            x=(0,),
            policy=DeltaPolicy.half_remaining(),
            interval_end=1.0,
            rng=RngStream(1),
        )
        assert res is NoJumpBeforeEnd
        assert not NoJumpBeforeEnd

    def test_deterministic_given_stream(self):
        net = death_process(0.5)
        guide, _ = eps_guide(net)
        pol = DeltaPolicy.analytic_eta()
        r1 = guided_next_reaction(guide, net, 0.0, (50,), pol, 1.0, RngStream(8, 2))
        r2 = guided_next_reaction(guide, net, 0.0, (50,), pol, 1.0, RngStream(8, 2))
        assert r1 == r2


class TestSimulateGuided:
    def test_zero_c_hits_unless_overshot(self):
        # the diverging rate forces the state down to the target; the only
        # way to miss a death process is to jump past it, which a scaled
        # Brownian guide cannot forbid
        net = death_process(0.5)
        guide, scheme = zero_c_guide(net)
        rng = RngStream(31)
        n_hit = 0
        for _ in range(50):
            gp = simulate_guided(guide, net, scheme, (50,), DeltaPolicy.analytic_eta(), rng)
            final = gp.path.state_at(net, 1.0)
            assert final[0] <= 30
            assert gp.hits == (final == (30,),)
            n_hit += gp.hits[0]
        assert n_hit > 0

    def test_hit_flags_match_recomputation(self):
        net = death_process(0.5)
        guide, scheme = eps_guide(net)
        rng = RngStream(32)
        for _ in range(20):
            gp = simulate_guided(guide, net, scheme, (50,), DeltaPolicy.analytic_eta(), rng)
            assert gp.hits == scheme.hits(net, gp.path)

    def test_event_times_strictly_increase(self):
        net = death_process(0.5)
        guide, scheme = zero_c_guide(net)
        gp = simulate_guided(guide, net, scheme, (50,), DeltaPolicy.half_remaining(), RngStream(33))
        times = [t for t, _ in gp.path.events]
        assert all(b > a for a, b in zip(times, times[1:]))
        assert times[-1] < 1.0

    def test_poisson_guide_never_overshoots(self):
        net = death_process(0.5)
        scheme = ObservationScheme([Observation(1.0, [[1.0]], [30.0])], zero_c=True)
        guide = g_poisson_hybrid(net, scheme, None, 15.0, 0)
        rng = RngStream(34)
        for _ in range(30):
            gp = simulate_guided(guide, net, scheme, (50,), DeltaPolicy.half_remaining(), rng)
            x = (50,)
            for _, ell in gp.path.events:
                x = net.apply(x, ell)
                assert x[0] >= 30
            assert gp.hits == (True,)

    def test_explosion_guard_carries_partial_path(self):
        net = death_process(0.5)
        guide, scheme = zero_c_guide(net, v=10.0)
        with pytest.raises(ExplosionGuard) as exc:
            simulate_guided(
                guide, net, scheme, (50,), DeltaPolicy.half_remaining(), RngStream(35),
                max_events=5,
            )
        assert exc.value.path.truncated
        assert exc.value.path.n_events == 5
