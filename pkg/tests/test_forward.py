"""Exact simulation of the unconditioned process."""

import math

import numpy as np
import pytest
from scipy import stats

from crnbridge import (
    CustomIntensity,
    MassAction,
    Reaction,
    ReactionNetwork,
    RngStream,
    simulate_forward,
)
from crnbridge.errors import ExplosionGuard, TimeDependentRate
from crnbridge.forward import next_reaction_homogeneous, next_reaction_thinning
from crnbridge.models import death_process


class TestNextReaction:
    def test_absorbing_state_returns_none(self):
        net = death_process()
        assert next_reaction_homogeneous(net, 0.0, (0,), RngStream(1)) is None

    def test_waiting_time_is_exponential(self):
        net = death_process(0.5)
        rng = RngStream(5)
        waits = [next_reaction_homogeneous(net, 0.0, (10,), rng)[1] for _ in range(4000)]
        # total rate 5.0
        _, p = stats.kstest(waits, stats.expon(scale=1 / 5.0).cdf)
        assert p > 0.01

    def test_homogeneous_rejects_time_dependent(self):
        lam = CustomIntensity(lambda t, x: (1 + t) * x[0], time_dependent=True, bound=8.0)
        net = ReactionNetwork(["A"], [Reaction(xi=(-1,), intensity=lam)])
        with pytest.raises(TimeDependentRate):
            next_reaction_homogeneous(net, 0.0, (3,), RngStream(1))

    def test_thinning_matches_homogeneous_law(self):
        # constant rate dressed up as time-dependent: thinning must sample
        # the same first-jump law as the exponential clock
        lam = CustomIntensity(lambda t, x: 2.0, time_dependent=True, bound=2.0)
        net = ReactionNetwork(["A"], [Reaction(xi=(-1,), intensity=lam)])
        rng = RngStream(6)
        waits = [
            next_reaction_thinning(net, 0.0, (1,), [3.0], rng)[1] for _ in range(4000)
        ]
        _, p = stats.kstest(waits, stats.expon(scale=0.5).cdf)
        assert p > 0.01


class TestSimulateForward:
    def test_death_terminal_law_is_binomial(self):
        net = death_process(0.5)
        rng = RngStream(11)
        n = 2000
        survived = [simulate_forward(net, (50,), 1.0, rng).state_at(net, 1.0)[0] for _ in range(n)]
        p_surv = math.exp(-0.5)
        mean = 50 * p_surv
        se = math.sqrt(50 * p_surv * (1 - p_surv) / n)
        assert abs(np.mean(survived) - mean) < 4 * se

    def test_event_times_increase(self):
        net = death_process(0.5)
        p = simulate_forward(net, (50,), 1.0, RngStream(3))
        times = [t for t, _ in p.events]
        assert all(b > a for a, b in zip(times, times[1:]))

    def test_deterministic_given_stream(self):
        net = death_process(0.5)
        p1 = simulate_forward(net, (50,), 1.0, RngStream(9, 4))
        p2 = simulate_forward(net, (50,), 1.0, RngStream(9, 4))
        assert p1 == p2

    def test_explosion_guard_carries_partial_path(self):
        # pure birth at rate 100 x: blows through a tiny event budget
        net = ReactionNetwork(
            ["A"], [Reaction(xi=(1,), intensity=MassAction(100.0, (1,)))]
        )
        with pytest.raises(ExplosionGuard) as exc:
            simulate_forward(net, (5,), 10.0, RngStream(2), max_events=50)
        partial = exc.value.path
        assert partial.truncated
        assert partial.n_events == 50
