"""End-to-end acceptance suite.

Each test pins one deliverable of the package to an external reference:
exact binomial laws, matrix-exponential transition probabilities, ODE
oracles, or quadrature-computed survival functions. Tolerances and sample
sizes are fixed; runtime budgets are asserted where they matter.
"""

import math
import os
import time

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm

import crnbridge
from crnbridge import (
    BackwardFilter,
    DeltaPolicy,
    MBlockFilter,
    Observation,
    ObservationScheme,
    RngStream,
    TimeRescaledGuide,
    cle_coefficients,
    estimate_pmf,
    filter_backward,
    g_epsilon,
    g_euler_cle,
    g_lna_restart,
    g_poisson_hybrid,
    g_zero_C,
    guided_next_reaction,
    load_config,
    log_psi,
    log_weight_single,
    run_experiment,
    simulate_forward,
    simulate_guided,
)
from crnbridge.models import death_process
from crnbridge.network import MassAction, Reaction, ReactionNetwork

PRESETS = os.path.join(os.path.dirname(crnbridge.__file__), "presets")


def preset(name):
    return load_config(os.path.join(PRESETS, name + ".yaml"))


def pooled_chisquare(counts, pmf_fn, n_max, total):
    """Chi-squared GOF with tail bins pooled to expected count >= 5."""
    observed = np.zeros(n_max + 1)
    for k, c in counts.items():
        observed[int(k)] = c
    expected = np.array([pmf_fn(k) * total for k in range(n_max + 1)])
    obs_bins, exp_bins = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= 5.0:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    obs_bins[-1] += o_acc
    exp_bins[-1] += e_acc
    stat = sum((o - e) ** 2 / e for o, e in zip(obs_bins, exp_bins))
    return stats.chi2.sf(stat, df=len(obs_bins) - 1)


class TestForwardExactness:
    def test_death_terminal_law_is_binomial(self):
        t0 = time.perf_counter()
        cfg = preset("death_forward")
        assert cfg.replicates == 10**4
        summary, _ = run_experiment(cfg)
        counts = summary.results["terminal_counts"]
        p_surv = math.exp(-0.5)
        p_value = pooled_chisquare(
            counts, lambda k: stats.binom.pmf(k, 50, p_surv), 50, 10**4
        )
        assert p_value > 1e-3
        assert time.perf_counter() - t0 < 30.0


class TestDeathPmfTable:
    def test_squared_errors_and_poisson_hits(self):
        t0 = time.perf_counter()
        cfg = preset("death_pmf")
        assert cfg.replicates == 15000
        summary, _ = run_experiment(cfg)
        guides = summary.results["guides"]
        for label in ("diffusion", "lna", "poisson"):
            assert guides[label]["sse"] <= 1e-3, (label, guides[label]["sse"])
        for rec in guides["poisson"]["estimates"]:
            assert rec["hit_fraction"] == 1.0, rec
        assert time.perf_counter() - t0 < 900.0


class TestGttBridges:
    def test_single_observation_bridge(self):
        t0 = time.perf_counter()
        summary, _ = run_experiment(preset("gtt_bridge"))
        entry = summary.results["guides"]["diffusion"]
        assert entry["n"] == 1000
        assert entry["hit_fraction"] >= 0.99
        assert time.perf_counter() - t0 < 300.0

    def test_fifteen_observation_bridge(self):
        t0 = time.perf_counter()
        summary, _ = run_experiment(preset("gtt_bridge_15"))
        entry = summary.results["guides"]["diffusion"]
        assert entry["n"] == 1000
        assert entry["hit_fraction"] >= 0.99
        assert time.perf_counter() - t0 < 300.0


@pytest.fixture(scope="module")
def enzyme_grid():
    summary, _ = run_experiment(preset("enzyme_scenarios"))
    return summary.results["grid"]


class TestEnzymeScenarios:
    def test_poisson_strictly_best_in_hardest_scenario(self, enzyme_grid):
        row = enzyme_grid["C"]
        assert row["poisson"]["hit_fraction"] > row["diffusion"]["hit_fraction"]
        assert row["poisson"]["hit_fraction"] > row["lna"]["hit_fraction"]

    def test_poisson_never_overshoots_the_product(self, enzyme_grid):
        for row in enzyme_grid.values():
            assert row["poisson"]["monotone_overshoots"] == 0

    def test_guide_ordering_when_few_product_jumps_remain(self, enzyme_grid):
        # conditioning the monotone product on barely moving is where the
        # guides separate: the Poisson component cannot overshoot, the LNA
        # tracks the drift, the scaled-Brownian guide mostly overshoots
        row = enzyme_grid["A"]
        assert row["poisson"]["hit_fraction"] > row["lna"]["hit_fraction"]
        assert row["lna"]["hit_fraction"] > row["diffusion"]["hit_fraction"]


class TestOracleEquivalences:
    def test_filter_closed_form_vs_ode(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(12)
        d = 2
        B = rng.normal(size=(d, d))
        a = B @ B.T + 0.4 * np.eye(d)
        scheme = ObservationScheme(
            [
                Observation(0.5, [[1.0, 0.0]], [3.0]),
                Observation(1.0, np.eye(d), [2.0, 6.0]),
            ],
            epsilon=0.02,
        )
        f = filter_backward(scheme, [a, a])

        def rhs(t, y):
            H = y[: d * d].reshape(d, d)
            return np.concatenate([(H @ a @ H).ravel(), H @ a @ y[d * d :]])

        for t_hi, t_lo in ((1.0, 0.5), (0.5, 0.0)):
            H0, F0 = f.HF(t_hi, left=t_hi == 0.5)
            probe = np.linspace(t_lo, t_hi, 6)[:-1]
            sol = solve_ivp(
                rhs, (t_hi, t_lo), np.concatenate([H0.ravel(), F0]),
                rtol=1e-12, atol=1e-14, t_eval=probe[::-1],
            )
            for j, t in enumerate(sol.t):
                H, F = f.HF(float(t))
                assert np.allclose(H, sol.y[: d * d, j].reshape(d, d), rtol=1e-8)
                assert np.allclose(F, sol.y[d * d :, j], rtol=1e-8, atol=1e-10)
        assert time.perf_counter() - t0 < 10.0

    def test_two_filter_representations_agree_up_to_time_constant(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(13)
        a = np.array([[1.5, 0.2], [0.2, 0.9]])
        scheme = ObservationScheme(
            [
                Observation(0.4, [[0.0, 1.0]], [4.0]),
                Observation(1.0, [[1.0, 0.0]], [1.0]),
            ],
            epsilon=0.05,
        )
        bf = BackwardFilter(scheme, [a, a])
        mb = MBlockFilter(scheme, [a, a])
        for t in (0.1, 0.4, 0.8):
            diffs = [
                bf.log_g(t, x) - mb.log_g(t, x)
                for x in rng.normal(scale=3.0, size=(8, 2))
            ]
            assert max(diffs) - min(diffs) < 1e-8
        assert time.perf_counter() - t0 < 10.0

    def test_psi_endpoint_route_vs_generator_quadrature(self):
        # log Psi computed from exact log-g endpoint differences must match
        # the direct time integral of (d/dt g + sum lambda (g(x+xi) - g)) / g
        t0 = time.perf_counter()
        net = death_process(0.5)
        scheme = ObservationScheme([Observation(1.0, [[1.0]], [30.0])], epsilon=1e-2)
        guide = g_epsilon(net, scheme, np.array([[50.0]]))
        rng = RngStream(120)
        gp = None
        while gp is None or not gp.hit_all:
            gp = simulate_guided(guide, net, scheme, (50,), DeltaPolicy.analytic_eta(), rng)
        h = 1e-6
        oracle = 0.0
        for a, b, x in gp.path.segments(net):
            b2 = min(b, 1.0 - 2 * h)

            def rate_part(s, x=x):
                lgx = guide.log_g(s, x)
                out = 0.0
                for reac in net.reactions:
                    lam = reac.intensity.value_real(x)
                    if lam > 0.0:
                        y = tuple(int(xi) + dx for xi, dx in zip(x, reac.xi))
                        out += lam * (math.exp(guide.log_g(s, y) - lgx) - 1.0)
                return out

            def integrand(s, x=x):
                ddt = (guide.log_g(s + h, x) - guide.log_g(s - h, x)) / (2 * h)
                return ddt + rate_part(s, x)

            oracle += quad(integrand, a, b2, limit=400)[0]
            if b2 < b:
                # the finite difference cannot straddle the horizon, so the
                # last slice takes the time part from exact endpoint values
                # and integrates the jump part on its own
                oracle += guide.log_g_left(b, x) - guide.log_g(b2, x)
                oracle += quad(rate_part, b2, b - 1e-12, limit=200)[0]
        lp = log_psi(guide, net, gp.path)
        assert lp == pytest.approx(oracle, rel=1e-6)
        assert time.perf_counter() - t0 < 10.0

    def test_alpha_consistency_across_guide_families(self):
        t0 = time.perf_counter()
        net = death_process(0.5)
        obs = Observation(1.0, [[1.0]], [30.0])
        guides = [
            g_epsilon(net, ObservationScheme([obs], epsilon=1e-3), np.array([[50.0]])),
            g_zero_C(net, ObservationScheme([obs], zero_c=True), np.array([[50.0]])),
            g_euler_cle(
                net,
                ObservationScheme([obs], C_list=[np.array([[1e-3]])]),
                np.array([[1e-3]]),
            ),
            g_lna_restart(
                net,
                ObservationScheme([obs], C_list=[np.array([[1e-3]])]),
                np.array([[1e-3]]),
            ),
            g_poisson_hybrid(
                net, ObservationScheme([obs], zero_c=True), None, 15.0, 0
            ),
        ]
        for guide in guides:
            for t in (0.1, 0.55, 0.93):
                for x in ((48,), (36,), (31,)):
                    ref = math.exp(guide.log_g(t, (x[0] - 1,)) - guide.log_g(t, x))
                    assert guide.alpha_fn(0, x, (x[0] - 1,))(t) == pytest.approx(
                        ref, rel=1e-12
                    )
        assert time.perf_counter() - t0 < 10.0

    def test_time_rescaling_weight_invariance(self):
        t0 = time.perf_counter()
        net = death_process(0.5)
        scheme = ObservationScheme([Observation(1.0, [[1.0]], [30.0])], epsilon=1e-2)
        base = g_epsilon(net, scheme, np.array([[50.0]]))
        wrapped = TimeRescaledGuide(base, lambda t: math.cos(0.5 * t))
        rng = RngStream(121)
        checked = 0
        while checked < 3:
            gp = simulate_guided(base, net, scheme, (50,), DeltaPolicy.analytic_eta(), rng)
            if not gp.hit_all:
                continue
            lw = log_weight_single(base, net, gp)
            lw2 = log_weight_single(wrapped, net, gp)
            assert lw2 == pytest.approx(lw, rel=1e-10)
            checked += 1
        assert time.perf_counter() - t0 < 10.0


class TestSmallStateUnbiasedness:
    def test_pmf_matches_matrix_exponential(self):
        # reversible conversion between two species with 4 molecules total:
        # 5 reachable states, exact transition law from the generator
        k1, k2, n, T = 1.0, 0.8, 4, 1.0
        net = ReactionNetwork(
            ["A", "B"],
            [
                Reaction(xi=(-1, 1), intensity=MassAction(k1, (1, 0))),
                Reaction(xi=(1, -1), intensity=MassAction(k2, (0, 1))),
            ],
        )
        x0 = (3, 1)
        Q = np.zeros((n + 1, n + 1))
        for a in range(n + 1):
            if a > 0:
                Q[a, a - 1] = k1 * a
            if a < n:
                Q[a, a + 1] = k2 * (n - a)
            Q[a, a] = -Q[a].sum()
        truth = expm(Q * T)[x0[0]]

        # a weak pull keeps the importance weights bounded; a strong pull
        # makes paths whose last jump lands close to T exponentially rare
        # under the guide, hiding a heavy weight tail that invalidates the
        # sample standard error as an error scale
        metric = 8.0 * cle_coefficients(net).covariance(0.0, np.asarray(x0, float))
        L = np.array([[1.0, 0.0]])

        def factory(v):
            scheme = ObservationScheme(
                [Observation(T, L, [float(v)])], zero_c=True
            )
            return g_zero_C(net, scheme, metric)

        rows = estimate_pmf(factory, net, x0, T, range(n + 1), 20000, RngStream(777))
        for row in rows:
            err = abs(row["estimate"] - truth[row["v"]])
            assert err < 4 * row["se"], (row, truth[row["v"]])
        assert sum(r["estimate"] for r in rows) == pytest.approx(1.0, abs=0.02)


def survival_cdf(rate_fn, t_max):
    def cdf(ts):
        ts = np.atleast_1d(np.asarray(ts, float))
        order = np.argsort(ts)
        out = np.empty(len(ts))
        total, prev = 0.0, 0.0
        for i in order:
            total += quad(rate_fn, prev, min(ts[i], t_max), limit=400)[0]
            out[i] = total
            prev = min(ts[i], t_max)
        return 1.0 - np.exp(-out)

    return cdf


class TestThinningExactness:
    def _sample(self, guide, net, x, policy, seed, n):
        rng = RngStream(seed)
        waits = []
        for _ in range(n):
            res = guided_next_reaction(guide, net, 0.0, x, policy, 1.0, rng)
            assert res is not None and res is not False
            waits.append(res[1])
        return waits

    def test_decreasing_rate_thinning(self):
        # on target the jump rate falls with time: bound-tightening path
        net = death_process(0.5)
        scheme = ObservationScheme([Observation(1.0, [[1.0]], [35.0])], epsilon=1e-2)
        guide = g_epsilon(net, scheme, np.array([[50.0]]))
        x = (35,)
        lam = net.reactions[0].intensity.value_real(x)
        af = guide.alpha_fn(0, x, (34,))
        waits = self._sample(guide, net, x, DeltaPolicy.analytic_eta(), 501, 10**4)
        _, p = stats.kstest(waits, survival_cdf(lambda s: lam * af(s), 1.0 - 1e-9))
        assert p > 0.01

    def test_increasing_rate_window_thinning(self):
        # one step above target the rate rises toward the observation time:
        # delta-window path
        net = death_process(0.5)
        scheme = ObservationScheme([Observation(1.0, [[1.0]], [35.0])], epsilon=1e-2)
        guide = g_epsilon(net, scheme, np.array([[50.0]]))
        x = (36,)
        lam = net.reactions[0].intensity.value_real(x)
        af = guide.alpha_fn(0, x, (35,))
        waits = self._sample(guide, net, x, DeltaPolicy.analytic_eta(), 502, 10**4)
        _, p = stats.kstest(waits, survival_cdf(lambda s: lam * af(s), 1.0 - 1e-9))
        assert p > 0.01
