"""YAML experiment configuration: parsing, validation and resolution.

A config file describes a network, a run mode and its parameters. Guide
parameters that the bundled studies derive from the model (a = a_CLE(0, x0),
per-target scalings, intensities at x0) are written as small rule objects
and resolved here, so preset files stay declarative.
"""

import numpy as np
import yaml

from .errors import ConfigError
from .network import MassAction, Reaction, ReactionNetwork, cle_coefficients

MODES = ("forward", "guided", "pmf", "scenarios")
GUIDE_NAMES = ("epsilon", "zero_c", "euler_cle", "lna_restart", "poisson_hybrid")


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _get(d, key, where, required=True, default=None):
    if key in d:
        return d[key]
    if required:
        raise ConfigError(f"{where}: missing required field '{key}'")
    return default


def _as_number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _as_int(x, where):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    return x


def _as_vector(x, n, where):
    if not isinstance(x, (list, tuple)) or len(x) != n:
        raise ConfigError(f"{where}: expected a list of length {n}, got {x!r}")
    return [_as_number(c, where) for c in x]


def _as_matrix(x, where, cols=None):
    if not isinstance(x, (list, tuple)) or not x:
        raise ConfigError(f"{where}: expected a matrix as a list of rows")
    rows = []
    width = None
    for i, row in enumerate(x):
        if not isinstance(row, (list, tuple)):
            raise ConfigError(f"{where}: row {i} is not a list")
        if width is None:
            width = len(row)
        if len(row) != width:
            raise ConfigError(f"{where}: row {i} has length {len(row)}, expected {width}")
        rows.append([_as_number(c, f"{where} row {i}") for c in row])
    if cols is not None and width != cols:
        raise ConfigError(f"{where}: expected {cols} columns, got {width}")
    return np.asarray(rows, dtype=float)


def parse_network(doc):
    """Build a mass-action network from the ``network`` section."""
    _require(isinstance(doc, dict), "network: expected a mapping")
    species = _get(doc, "species", "network")
    _require(
        isinstance(species, list) and species and all(isinstance(s, str) for s in species),
        "network.species: expected a non-empty list of names",
    )
    d = len(species)
    raw = _get(doc, "reactions", "network")
    _require(isinstance(raw, list) and raw, "network.reactions: expected a non-empty list")
    reactions = []
    for i, r in enumerate(raw):
        where = f"network.reactions[{i}]"
        _require(isinstance(r, dict), f"{where}: expected a mapping")
        xi = _get(r, "xi", where)
        _require(
            isinstance(xi, list) and len(xi) == d and all(isinstance(c, int) for c in xi),
            f"{where}.xi: expected {d} integers",
        )
        kappa = _as_number(_get(r, "kappa", where), f"{where}.kappa")
        _require(kappa >= 0, f"{where}.kappa: must be nonnegative")
        orders = _get(r, "orders", where)
        _require(
            isinstance(orders, list)
            and len(orders) == d
            and all(isinstance(c, int) and c >= 0 for c in orders),
            f"{where}.orders: expected {d} nonnegative integers",
        )
        reactions.append(Reaction(xi=tuple(xi), intensity=MassAction(kappa, tuple(orders))))
    return ReactionNetwork(list(species), reactions)


class GuideSpec:
    """Validated guide description; resolution against a target happens in
    the experiment layer (some parameters are per-target rules)."""

    def __init__(self, doc, d, where):
        _require(isinstance(doc, dict), f"{where}: expected a mapping")
        self.name = _get(doc, "name", where)
        _require(
            self.name in GUIDE_NAMES,
            f"{where}.name: unknown guide {self.name!r}, expected one of {GUIDE_NAMES}",
        )
        self.label = doc.get("label", self.name)
        self.a = doc.get("a", {"rule": "cle0"})
        self.C = doc.get("C")
        self.epsilon = doc.get("epsilon")
        self.theta = doc.get("theta")
        self.monotone_index = doc.get("monotone_index")
        self.a_sub = doc.get("a_sub", {"rule": "cle0_block"})
        self.L = None if "L" not in doc else _as_matrix(doc["L"], f"{where}.L", cols=d)
        delta = doc.get("delta", "half_remaining")
        if isinstance(delta, str):
            delta = {"mode": delta}
        _require(isinstance(delta, dict), f"{where}.delta: expected a name or mapping")
        mode = _get(delta, "mode", f"{where}.delta")
        _require(
            mode in ("analytic_eta", "half_remaining"),
            f"{where}.delta.mode: unknown mode {mode!r}",
        )
        self.delta_mode = mode
        self.eta = _as_number(delta.get("eta", 0.5), f"{where}.delta.eta")
        if self.name == "poisson_hybrid":
            _require(self.monotone_index is not None, f"{where}: poisson_hybrid needs monotone_index")
            _as_int(self.monotone_index, f"{where}.monotone_index")
            _require(self.theta is not None, f"{where}: poisson_hybrid needs theta")


def _parse_rule(value, where, allowed):
    """A parameter is either a literal or a {rule: ...} mapping."""
    if isinstance(value, dict) and "rule" in value:
        rule = value["rule"]
        _require(rule in allowed, f"{where}.rule: unknown rule {rule!r}, expected one of {allowed}")
        return dict(value)
    return value


def resolve_a(spec_a, net, x0, v=None, where="guide.a"):
    """Resolve an a-matrix parameter to a d x d numpy array.

    Rules: ``cle0`` is a_CLE(0, x0); ``gap`` is factor * (x0 - v) for scalar
    networks (the per-target tuning used for the death pmf study)."""
    d = net.d
    val = _parse_rule(spec_a, where, ("cle0", "gap"))
    if isinstance(val, dict):
        if val["rule"] == "cle0":
            return cle_coefficients(net).covariance(0.0, np.asarray(x0, float))
        factor = _as_number(val.get("factor", 1.0), f"{where}.factor")
        _require(d == 1, f"{where}: rule 'gap' applies to one-species networks only")
        _require(v is not None, f"{where}: rule 'gap' needs a target value")
        gap = float(x0[0]) - float(np.atleast_1d(v)[0])
        _require(gap > 0, f"{where}: rule 'gap' needs x0 > v, got gap {gap}")
        return np.array([[factor * gap]])
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        _require(float(val) > 0, f"{where}: scalar a must be positive")
        return float(val) * np.eye(d)
    return _as_matrix(val, where, cols=d)


def resolve_theta(spec_theta, net, x0, v=None, where="guide.theta"):
    """Resolve a Poisson intensity: literal, ``target`` (factor * v for the
    monotone coordinate) or ``intensity0`` (lambda_ell(x0))."""
    val = _parse_rule(spec_theta, where, ("target", "intensity0"))
    if isinstance(val, dict):
        if val["rule"] == "target":
            factor = _as_number(val.get("factor", 1.0), f"{where}.factor")
            _require(v is not None, f"{where}: rule 'target' needs a target value")
            return factor * float(np.atleast_1d(v)[0])
        ell = _as_int(_get(val, "reaction", where), f"{where}.reaction")
        _require(0 <= ell < net.n_reactions, f"{where}.reaction: index out of range")
        return net.reactions[ell].intensity.value_real(tuple(float(c) for c in x0))
    return _as_number(val, where)


def resolve_a_sub(spec, net, x0, where="guide.a_sub"):
    """Non-monotone block for the Poisson-hybrid guide; rule ``cle0_block``
    takes the rows and columns of a_CLE(0, x0) excluding the monotone one."""
    m = spec.monotone_index
    keep = [k for k in range(net.d) if k != m]
    val = _parse_rule(spec.a_sub, where, ("cle0_block",))
    if isinstance(val, dict):
        a0 = cle_coefficients(net).covariance(0.0, np.asarray(x0, float))
        return a0[np.ix_(keep, keep)]
    return _as_matrix(val, where, cols=len(keep))


def resolve_C(value, m, where="guide.C"):
    """Observation covariance: scalar means that multiple of the identity."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        _require(float(value) > 0, f"{where}: scalar C must be positive")
        return float(value) * np.eye(m)
    return _as_matrix(value, where, cols=m)


class ExperimentConfig:
    """Validated experiment description (see the presets for examples)."""

    def __init__(self, doc):
        _require(isinstance(doc, dict), "config: expected a mapping at the top level")
        self.name = doc.get("name", "experiment")
        self.mode = _get(doc, "mode", "config")
        _require(self.mode in MODES, f"config.mode: unknown mode {self.mode!r}, expected one of {MODES}")
        self.net = parse_network(_get(doc, "network", "config"))
        d = self.net.d
        x0 = _get(doc, "x0", "config")
        _require(
            isinstance(x0, list) and len(x0) == d and all(isinstance(c, int) for c in x0),
            f"config.x0: expected {d} integers",
        )
        self.x0 = tuple(x0)
        self.seed = _as_int(doc.get("seed", 0), "config.seed")
        self.replicates = _as_int(_get(doc, "replicates", "config"), "config.replicates")
        _require(self.replicates > 0, "config.replicates: must be positive")
        self.max_events = _as_int(doc.get("max_events", 10**6), "config.max_events")
        self.threads = _as_int(doc.get("threads", 1), "config.threads")
        _require(self.threads >= 1, "config.threads: must be at least 1")
        self.quad_tol = _as_number(doc.get("quad_tol", 1e-8), "config.quad_tol")
        self.horizon = _as_number(_get(doc, "time", "config"), "config.time")
        _require(self.horizon > 0, "config.time: must be positive")

        self.observations = None
        self.obs_noise = None
        self.guides = []
        self.support = None
        self.scenarios = None
        self.reference = None
        self.tune = None

        if self.mode == "forward":
            return

        if self.mode == "guided":
            self.observations, self.obs_noise = self._parse_observations(
                _get(doc, "observations", "config"), d
            )
        elif self.mode == "pmf":
            self.support = self._parse_support(_get(doc, "support", "config"))
            self.obs_noise = self._parse_noise(doc.get("noise", {"epsilon": 1e-5}))
            ref = doc.get("reference")
            if ref is not None:
                self.reference = self._parse_reference(ref)
            self.tune = doc.get("tune")
        elif self.mode == "scenarios":
            raw = _get(doc, "scenarios", "config")
            _require(isinstance(raw, list) and raw, "config.scenarios: expected a non-empty list")
            self.scenarios = []
            for i, s in enumerate(raw):
                where = f"config.scenarios[{i}]"
                _require(isinstance(s, dict), f"{where}: expected a mapping")
                v = _as_vector(_get(s, "v", where), d, f"{where}.v")
                self.scenarios.append({"name": s.get("name", str(i)), "v": v})

        raw_guides = _get(doc, "guides", "config")
        _require(isinstance(raw_guides, list) and raw_guides, "config.guides: expected a non-empty list")
        self.guides = [GuideSpec(g, d, f"config.guides[{i}]") for i, g in enumerate(raw_guides)]
        labels = [g.label for g in self.guides]
        _require(len(set(labels)) == len(labels), "config.guides: labels must be unique")

    def _parse_noise(self, doc):
        _require(isinstance(doc, dict), "config observation noise: expected a mapping")
        keys = [k for k in ("epsilon", "zero_c", "C") if k in doc]
        _require(len(keys) == 1, "observation noise: give exactly one of epsilon, zero_c, C")
        k = keys[0]
        if k == "epsilon":
            eps = _as_number(doc["epsilon"], "observations.epsilon")
            _require(eps > 0, "observations.epsilon: must be positive")
            return {"epsilon": eps}
        if k == "zero_c":
            _require(doc["zero_c"] is True, "observations.zero_c: must be true when present")
            return {"zero_c": True}
        return {"C": doc["C"]}

    def _parse_observations(self, doc, d):
        _require(isinstance(doc, dict), "config.observations: expected a mapping")
        noise = self._parse_noise(doc)
        raw = _get(doc, "events", "config.observations")
        _require(isinstance(raw, list) and raw, "config.observations.events: expected a non-empty list")
        events = []
        for i, e in enumerate(raw):
            where = f"config.observations.events[{i}]"
            _require(isinstance(e, dict), f"{where}: expected a mapping")
            t = _as_number(_get(e, "time", where), f"{where}.time")
            L = _as_matrix(_get(e, "L", where), f"{where}.L", cols=d)
            v = _as_vector(_get(e, "v", where), L.shape[0], f"{where}.v")
            events.append({"time": t, "L": L, "v": v})
        times = [e["time"] for e in events]
        _require(
            all(t > 0 for t in times) and all(b > a for a, b in zip(times, times[1:])),
            "config.observations.events: times must be strictly increasing and positive",
        )
        _require(
            abs(times[-1] - self.horizon) < 1e-12,
            "config.observations.events: the last time must equal config.time",
        )
        return events, noise

    def _parse_support(self, doc):
        if isinstance(doc, list):
            _require(doc and all(isinstance(v, int) for v in doc), "config.support: expected integers")
            return list(doc)
        _require(isinstance(doc, dict), "config.support: expected a list or {start, stop}")
        start = _as_int(_get(doc, "start", "config.support"), "config.support.start")
        stop = _as_int(_get(doc, "stop", "config.support"), "config.support.stop")
        _require(stop >= start, "config.support: stop must be >= start")
        return list(range(start, stop + 1))

    def _parse_reference(self, doc):
        _require(isinstance(doc, dict), "config.reference: expected a mapping")
        kind = _get(doc, "type", "config.reference")
        _require(kind == "binomial", f"config.reference.type: unknown type {kind!r}")
        n = _as_int(_get(doc, "n", "config.reference"), "config.reference.n")
        p = _as_number(_get(doc, "p", "config.reference"), "config.reference.p")
        _require(0.0 < p < 1.0, "config.reference.p: must lie in (0, 1)")
        return {"type": "binomial", "n": n, "p": p}


def load_config(path):
    """Read and validate a config file; raises ConfigError with the reason."""
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}")
    try:
        return ExperimentConfig(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}")
