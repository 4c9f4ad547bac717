"""Seeded experiment orchestration and result serialization.

Every run is a pure function of (config, seed): replicate i draws from the
stream (seed, i) and results are reduced in replicate order regardless of
which worker finished first, so output files are byte-stable. Wall-clock
time is reported on the summary object but never written to disk.
"""

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .config import GuideSpec, resolve_C, resolve_a, resolve_a_sub, resolve_theta
from .errors import ConfigError, ExplosionGuard
from .guided import DeltaPolicy, simulate_guided
from .guiding import g_epsilon, g_euler_cle, g_lna_restart, g_poisson_hybrid, g_zero_C
from .forward import simulate_forward
from .observations import Observation, ObservationScheme
from .paths import JumpPath
from .rng import RngStream
from .weights import estimate_pmf, log_weight_single, logmeanexp, MISS


@dataclass
class RunSummary:
    """Serializable result of one experiment run.

    ``elapsed`` is populated for console reporting only; ``to_dict`` leaves
    it out so that identical config+seed gives identical files.
    """

    name: str
    mode: str
    seed: int
    replicates: int
    results: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def to_dict(self):
        return {
            "name": self.name,
            "mode": self.mode,
            "seed": self.seed,
            "replicates": self.replicates,
            "results": self.results,
        }


def _policy(spec):
    if spec.delta_mode == "analytic_eta":
        return DeltaPolicy.analytic_eta(spec.eta)
    return DeltaPolicy.half_remaining()


def _guide_scheme(spec, net, x0, T, v_full, noise):
    """Observation scheme a guide conditions on, for a full-state target.

    A guide-level L projects the conditioning (used when L a L' would be
    singular for the full state); the hit criterion stays the full target."""
    d = net.d
    if spec.L is not None:
        L = spec.L
        v = L @ np.asarray(v_full, float)
    else:
        L = np.eye(d)
        v = np.asarray(v_full, float)
    obs = Observation(T, L, v)
    if spec.name in ("epsilon",):
        eps = spec.epsilon
        if eps is None:
            eps = noise.get("epsilon") if noise else None
        if eps is None:
            raise ConfigError(f"guide {spec.label}: needs epsilon")
        return ObservationScheme([obs], epsilon=eps)
    if spec.name == "zero_c":
        return ObservationScheme([obs], zero_c=True)
    if spec.name == "poisson_hybrid":
        return ObservationScheme([obs], zero_c=True)
    if spec.C is None:
        raise ConfigError(f"guide {spec.label}: needs C")
    return ObservationScheme([obs], C_list=[resolve_C(spec.C, obs.m)])


def make_guide(spec, net, x0, scheme, v=None):
    """Construct the guiding term a GuideSpec describes for one scheme."""
    if spec.name == "epsilon":
        return g_epsilon(net, scheme, resolve_a(spec.a, net, x0, v))
    if spec.name == "zero_c":
        return g_zero_C(net, scheme, resolve_a(spec.a, net, x0, v))
    if spec.name == "euler_cle":
        o = scheme.observations[0]
        return g_euler_cle(net, scheme, resolve_C(spec.C, o.m))
    if spec.name == "lna_restart":
        o = scheme.observations[0]
        return g_lna_restart(net, scheme, resolve_C(spec.C, o.m))
    a_sub = resolve_a_sub(spec, net, x0)
    theta = resolve_theta(spec.theta, net, x0, v)
    return g_poisson_hybrid(net, scheme, a_sub, theta, spec.monotone_index)


def _map_replicates(fn, n, threads):
    """Apply fn(i) for i in range(n); results always in index order."""
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


# -- runs ---------------------------------------------------------------------


def run_forward(config):
    net = config.net
    t0 = time.perf_counter()

    def one(i):
        return simulate_forward(
            net, config.x0, config.horizon, RngStream(config.seed, i), config.max_events
        )

    paths = _map_replicates(one, config.replicates, config.threads)
    counts = {}
    for p in paths:
        key = ",".join(str(c) for c in p.state_at(net, config.horizon))
        counts[key] = counts.get(key, 0) + 1
    summary = RunSummary(
        name=config.name,
        mode="forward",
        seed=config.seed,
        replicates=config.replicates,
        results={
            "terminal_counts": dict(sorted(counts.items())),
            "mean_events": sum(p.n_events for p in paths) / len(paths),
        },
        elapsed=time.perf_counter() - t0,
    )
    return summary, {"paths": paths}


def _config_scheme(config, spec):
    """Scheme for guided mode, built from the configured events."""
    events = config.observations
    obs = [Observation(e["time"], e["L"], e["v"]) for e in events]
    noise = config.obs_noise
    if spec.name in ("epsilon",):
        eps = spec.epsilon if spec.epsilon is not None else noise.get("epsilon")
        if eps is None:
            raise ConfigError(f"guide {spec.label}: needs epsilon")
        return ObservationScheme(obs, epsilon=eps)
    if spec.name in ("zero_c", "poisson_hybrid"):
        return ObservationScheme(obs, zero_c=True)
    if spec.C is None:
        raise ConfigError(f"guide {spec.label}: needs C")
    return ObservationScheme(obs, C_list=[resolve_C(spec.C, o.m) for o in obs])


def run_guided(config):
    """Hit-fraction study of the configured guides on one observation scheme."""
    net = config.net
    t0 = time.perf_counter()
    results = {}
    artifacts = {}
    last_v = config.observations[-1]["v"]
    target = last_v[0] if (net.d == 1 and len(last_v) == 1) else None
    for spec in config.guides:
        scheme = _config_scheme(config, spec)
        guide = make_guide(spec, net, config.x0, scheme, target)
        pol = _policy(spec)

        def one(i, guide=guide, scheme=scheme, pol=pol):
            try:
                return simulate_guided(
                    guide, net, scheme, config.x0, pol, RngStream(config.seed, i),
                    config.max_events,
                )
            except ExplosionGuard:
                return None

        out = _map_replicates(one, config.replicates, config.threads)
        paths = [g.path for g in out if g is not None]
        hit = sum(1 for g in out if g is not None and g.hit_all)
        truncated = sum(1 for g in out if g is None)
        results[spec.label] = {
            "hit_fraction": hit / config.replicates,
            "n": config.replicates,
            "truncated": truncated,
            "per_observation_hits": [
                sum(1 for g in out if g is not None and g.hits[k]) / config.replicates
                for k in range(scheme.n)
            ],
        }
        artifacts[spec.label] = paths
    summary = RunSummary(
        name=config.name,
        mode="guided",
        seed=config.seed,
        replicates=config.replicates,
        results={"guides": results},
        elapsed=time.perf_counter() - t0,
    )
    return summary, artifacts


def run_scenarios(config):
    """Hit-percentage grid: scenarios x guides, full-state conditioning."""
    net = config.net
    d = net.d
    t0 = time.perf_counter()
    grid = {}
    for scen in config.scenarios:
        v = scen["v"]
        target = Observation(config.horizon, np.eye(d), v)
        row = {}
        for spec in config.guides:
            scheme = _guide_scheme(spec, net, config.x0, config.horizon, v, config.obs_noise)
            guide = make_guide(spec, net, config.x0, scheme, v)
            pol = _policy(spec)

            def one(i, guide=guide, scheme=scheme, pol=pol):
                try:
                    g = simulate_guided(
                        guide, net, scheme, config.x0, pol,
                        RngStream(config.seed, i), config.max_events,
                    )
                    return g.path.state_at(net, config.horizon)
                except ExplosionGuard:
                    return None

            ends = _map_replicates(one, config.replicates, config.threads)
            hit = sum(1 for x in ends if x is not None and target.hit(x))
            entry = {
                "hit_fraction": hit / config.replicates,
                "n": config.replicates,
                "truncated": sum(1 for x in ends if x is None),
            }
            if spec.monotone_index is not None:
                m = spec.monotone_index
                entry["monotone_overshoots"] = sum(
                    1 for x in ends if x is not None and x[m] > v[m]
                )
            row[spec.label] = entry
        grid[scen["name"]] = row
    summary = RunSummary(
        name=config.name,
        mode="scenarios",
        seed=config.seed,
        replicates=config.replicates,
        results={"grid": grid},
        elapsed=time.perf_counter() - t0,
    )
    return summary, {}


def _pmf_scheme(config, spec, v):
    obs = Observation(config.horizon, np.eye(config.net.d), [float(v)])
    if spec.name == "epsilon":
        eps = spec.epsilon if spec.epsilon is not None else config.obs_noise.get("epsilon")
        if eps is None:
            raise ConfigError(f"guide {spec.label}: needs epsilon")
        return ObservationScheme([obs], epsilon=eps)
    if spec.name in ("zero_c", "poisson_hybrid"):
        return ObservationScheme([obs], zero_c=True)
    if spec.C is None:
        raise ConfigError(f"guide {spec.label}: needs C")
    return ObservationScheme([obs], C_list=[resolve_C(spec.C, 1)])


def run_pmf(config):
    """Monte Carlo pmf estimates over the configured support, per guide."""
    net = config.net
    if net.d != 1:
        raise ConfigError("pmf mode supports one-species networks")
    t0 = time.perf_counter()
    ref = None
    if config.reference is not None:
        r = config.reference
        ref = {v: float(binom.pmf(v, r["n"], r["p"])) for v in config.support}
    results = {}
    for gidx, spec in enumerate(config.guides):
        def factory(v, spec=spec):
            scheme = _pmf_scheme(config, spec, v)
            return make_guide(spec, net, config.x0, scheme, v)

        records = estimate_pmf(
            factory,
            net,
            config.x0,
            config.horizon,
            config.support,
            config.replicates,
            RngStream(config.seed, gidx),
            policy=_policy(config.guides[gidx]),
            quad_tol=config.quad_tol,
            max_events=config.max_events,
        )
        entry = {"estimates": records}
        if ref is not None:
            sse = sum((rec["estimate"] - ref[rec["v"]]) ** 2 for rec in records)
            entry["sse"] = sse
            entry["reference"] = [ref[v] for v in config.support]
        results[spec.label] = entry
    summary = RunSummary(
        name=config.name,
        mode="pmf",
        seed=config.seed,
        replicates=config.replicates,
        results={"support": list(config.support), "guides": results},
        elapsed=time.perf_counter() - t0,
    )
    return summary, {}


def run_experiment(config, out_dir=None):
    """Dispatch on config.mode; optionally write artifacts to out_dir."""
    runner = {
        "forward": run_forward,
        "guided": run_guided,
        "pmf": run_pmf,
        "scenarios": run_scenarios,
    }[config.mode]
    summary, artifacts = runner(config)
    if out_dir is not None:
        write_outputs(summary, artifacts, out_dir, config.net)
    return summary, artifacts


# -- a-matrix grid search -----------------------------------------------------


def tune_a_grid(net, x0, T, v, multipliers, N, rng, epsilon=1e-5, base_gap=True,
                policy=None, max_events=10**6):
    """Mean log-weight of the scaled-Brownian guide over a grid of a values.

    For each multiplier c the guide uses a = c * (x0 - v) (scalar networks,
    ``base_gap``) or a = c * a_CLE(0, x0). Reports the Monte Carlo criterion
    (log of the average weight over hit paths, normalized by N) per grid
    point; a grid point where no path hits is reported as -inf. No selection
    is made, the table is the result."""
    from .network import cle_coefficients

    base = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    pol = policy or DeltaPolicy.analytic_eta(0.5)
    rows = []
    for ci, c in enumerate(multipliers):
        if base_gap:
            if net.d != 1:
                raise ConfigError("gap-scaled tuning applies to one-species networks")
            a = np.array([[float(c) * (float(x0[0]) - float(v))]])
        else:
            a = float(c) * cle_coefficients(net).covariance(0.0, np.asarray(x0, float))
        scheme = ObservationScheme(
            [Observation(T, np.eye(net.d), np.atleast_1d(v))], epsilon=epsilon
        )
        guide = g_epsilon(net, scheme, a)
        log_ws = []
        hits = 0
        for i in range(N):
            stream = base.spawn(ci * N + i)
            gp = simulate_guided(guide, net, scheme, x0, pol, stream, max_events)
            if gp.hit_all:
                lw = log_weight_single(guide, net, gp)
                if lw is not MISS:
                    hits += 1
                    log_ws.append(lw)
        criterion = logmeanexp(log_ws, n=N) if log_ws else float("-inf")
        rows.append({
            "multiplier": float(c),
            "a": float(a[0, 0]) if net.d == 1 else a.tolist(),
            "criterion": criterion,
            "hit_fraction": hits / N,
        })
    return rows


# -- serialization ------------------------------------------------------------


def export_paths(paths, path, net):
    """Write jump paths as CSV event records.

    Each replicate starts with a time-0 row (reaction -1) carrying the
    initial state; every later row holds one event with the post-jump state.
    """
    fieldnames = ["replicate", "time", "reaction"] + [s.name for s in net.species]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(fieldnames)
        for rid, p in enumerate(paths):
            w.writerow([rid, repr(0.0), -1] + list(p.x0))
            x = p.x0
            for t, ell in p.events:
                x = net.apply(x, ell)
                w.writerow([rid, repr(float(t)), ell] + list(x))


def parse_paths(path, net, horizon):
    """Inverse of export_paths; returns the list of JumpPath objects."""
    out = []
    current = None
    x0 = None
    events = None

    def flush():
        if current is not None:
            out.append(JumpPath(x0, tuple(events), horizon))

    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        d = len(header) - 3
        for row in r:
            rid = int(row[0])
            t = float(row[1])
            ell = int(row[2])
            state = tuple(int(float(c)) for c in row[3 : 3 + d])
            if ell == -1:
                flush()
                current = rid
                x0 = state
                events = []
            else:
                events.append((t, ell))
        flush()
    return out


def write_outputs(summary, artifacts, out_dir, net):
    """Write summary.json plus one paths CSV per artifact label."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    for label, paths in artifacts.items():
        name = "paths.csv" if label == "paths" else f"paths_{label}.csv"
        export_paths(paths, os.path.join(out_dir, name), net)
    return out_dir
