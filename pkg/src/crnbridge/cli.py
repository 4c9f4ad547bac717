"""Command line entry points.

Exit codes: 0 on success, 2 on configuration/schema errors, 3 on numerical
failures (singular matrices, ODE or quadrature breakdown, event explosions).
"""

import json
import os
import sys
from itertools import product

import click
import numpy as np

from . import errors
from .config import load_config
from .experiment import run_experiment, tune_a_grid, write_outputs
from .guiding import check_greedy
from .observations import Observation, ObservationScheme
from .rng import RngStream

_PRESET_DIR = os.path.join(os.path.dirname(__file__), "presets")

_SCHEMA_ERRORS = (
    errors.ConfigError,
    errors.ModelDefinitionError,
    errors.InvalidReplicates,
    errors.TimeDependentRate,
)
_NUMERICAL_ERRORS = (
    errors.SingularC,
    errors.SingularMetric,
    errors.SingularCovariance,
    errors.OdeFailure,
    errors.NonFiniteWeight,
    errors.InvalidBound,
    errors.ExplosionGuard,
    errors.EvaluationAtMiss,
    errors.WrongTrend,
)


def resolve_config_path(value):
    """A --config value is a file path or the name of a bundled preset."""
    if os.path.exists(value):
        return value
    candidate = os.path.join(_PRESET_DIR, value + ".yaml")
    if os.path.exists(candidate):
        return candidate
    raise errors.ConfigError(
        f"config {value!r} is neither a file nor a bundled preset "
        f"(presets: {', '.join(list_presets())})"
    )


def list_presets():
    if not os.path.isdir(_PRESET_DIR):
        return []
    return sorted(f[:-5] for f in os.listdir(_PRESET_DIR) if f.endswith(".yaml"))


def _load(config, seed, replicates, threads, guide, expected_modes):
    cfg = load_config(resolve_config_path(config))
    if cfg.mode not in expected_modes:
        raise errors.ConfigError(
            f"config has mode {cfg.mode!r}, this command needs one of {expected_modes}"
        )
    if seed is not None:
        cfg.seed = seed
    if replicates is not None:
        if replicates <= 0:
            raise errors.InvalidReplicates(f"replicates must be positive, got {replicates}")
        cfg.replicates = replicates
    if threads is not None:
        cfg.threads = threads
    if guide is not None and cfg.guides:
        keep = [g for g in cfg.guides if g.label == guide or g.name == guide]
        if not keep:
            raise errors.ConfigError(
                f"no guide labelled {guide!r} in config "
                f"(available: {[g.label for g in cfg.guides]})"
            )
        cfg.guides = keep
    return cfg


def _finish(summary, artifacts, cfg, out):
    if out is not None:
        write_outputs(summary, artifacts, out, cfg.net)
    click.echo(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    click.echo(f"elapsed: {summary.elapsed:.2f}s", err=True)


def _run(expected_modes, config, seed, replicates, threads, guide, out):
    cfg = _load(config, seed, replicates, threads, guide, expected_modes)
    summary, artifacts = run_experiment(cfg)
    _finish(summary, artifacts, cfg, out)


def _common(fn):
    fn = click.option("--out", type=click.Path(), default=None, help="Output directory.")(fn)
    fn = click.option("--threads", type=int, default=None, help="Replicate worker count.")(fn)
    fn = click.option("--replicates", type=int, default=None, help="Override replicate count.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Override the RNG seed.")(fn)
    fn = click.option("--config", required=True, help="Config file or bundled preset name.")(fn)
    return fn


@click.group()
def main():
    """Simulation of reaction networks conditioned on partial observations."""


@main.command()
@_common
def forward(config, seed, replicates, threads, out):
    """Simulate unconditioned paths."""
    _run(("forward",), config, seed, replicates, threads, None, out)


@main.command()
@_common
@click.option("--guide", default=None, help="Run only the guide with this label.")
def guided(config, seed, replicates, threads, out, guide):
    """Simulate guided paths; covers observation and scenario-grid configs."""
    _run(("guided", "scenarios"), config, seed, replicates, threads, guide, out)


@main.command()
@_common
@click.option("--guide", default=None, help="Run only the guide with this label.")
def pmf(config, seed, replicates, threads, out, guide):
    """Estimate terminal probabilities over the configured support."""
    _run(("pmf",), config, seed, replicates, threads, guide, out)


@main.command(name="tune-a")
@_common
@click.option("--target", type=float, required=True, help="Terminal target value v.")
@click.option(
    "--grid",
    default="0.5,1.0,1.5,2.0,2.5,3.0,4.0",
    help="Comma-separated multipliers c; a = c * (x0 - v).",
)
@click.option("--epsilon", type=float, default=1e-5, help="Observation noise scale.")
def tune_a(config, seed, replicates, threads, out, target, grid, epsilon):
    """Mean log-weight table of the scaled-Brownian guide over a grid of a."""
    cfg = load_config(resolve_config_path(config))
    if seed is not None:
        cfg.seed = seed
    n = replicates if replicates is not None else cfg.replicates
    if n <= 0:
        raise errors.InvalidReplicates(f"replicates must be positive, got {n}")
    try:
        multipliers = [float(c) for c in grid.split(",") if c.strip()]
    except ValueError:
        raise errors.ConfigError(f"--grid: could not parse {grid!r} as numbers")
    if not multipliers:
        raise errors.ConfigError("--grid: need at least one multiplier")
    rows = tune_a_grid(
        cfg.net, cfg.x0, cfg.horizon, target, multipliers, n,
        RngStream(cfg.seed), epsilon=epsilon, base_gap=cfg.net.d == 1,
        max_events=cfg.max_events,
    )
    doc = {"target": target, "rows": rows, "seed": cfg.seed, "n": n}
    click.echo(json.dumps(doc, indent=2, sort_keys=True))
    if out is not None:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "tune_a.json"), "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")


@main.command(name="check-greedy")
@click.option("--config", required=True, help="Config file or bundled preset name.")
@click.option("--target", default=None, help="Comma-separated terminal target state.")
@click.option("--radius", type=int, default=6, help="Box radius around x0 and target.")
def check_greedy_cmd(config, target, radius):
    """Exhaustively check the distance-decreasing-reaction property on a box."""
    cfg = load_config(resolve_config_path(config))
    net = cfg.net
    from .network import cle_coefficients

    if target is not None:
        try:
            v = [int(c) for c in target.split(",")]
        except ValueError:
            raise errors.ConfigError(f"--target: could not parse {target!r} as integers")
        if len(v) != net.d:
            raise errors.ConfigError(f"--target: expected {net.d} components")
    elif cfg.mode == "scenarios" and cfg.scenarios:
        v = [int(c) for c in cfg.scenarios[0]["v"]]
    elif cfg.mode == "guided" and cfg.observations:
        last = cfg.observations[-1]
        if len(last["v"]) != net.d:
            raise errors.ConfigError("check-greedy needs a full-state target; pass --target")
        v = [int(c) for c in last["v"]]
    else:
        raise errors.ConfigError("check-greedy needs a target state; pass --target")
    scheme = ObservationScheme(
        [Observation(cfg.horizon, np.eye(net.d), v)], epsilon=1e-5
    )
    a0 = cle_coefficients(net).covariance(0.0, np.asarray(cfg.x0, float))
    ranges = []
    for k in range(net.d):
        lo = max(0, min(cfg.x0[k], v[k]) - radius)
        hi = max(cfg.x0[k], v[k]) + radius
        ranges.append(range(lo, hi + 1))
    region = [tuple(s) for s in product(*ranges)]
    violations = check_greedy(net, scheme, [a0], region)
    doc = {
        "region_size": len(region),
        "violations": [
            {"observation": k, "interval": list(interval), "state": list(state)}
            for k, interval, state in violations
        ],
    }
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


def entry():
    try:
        main.main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except _SCHEMA_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except _NUMERICAL_ERRORS as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    entry()
