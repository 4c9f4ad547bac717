"""Importance weights of guided paths and the resulting pmf estimators.

Along a guided path the correction factor Psi satisfies

    log Psi = sum over constant-state segments of
        [log g(seg_end-, x) - log g(seg_start, x)]
        + integral of sum_ell lambda_ell(x) (alpha_ell(s, x) - 1) ds

with segments split at observation times (left limits there, right values
after). The time-derivative part telescopes into exact log-g differences;
only the smooth reaction part needs quadrature.
"""

import math

import numpy as np

from .errors import InvalidReplicates, ModelDefinitionError, NonFiniteWeight
from .guided import DeltaPolicy, simulate_guided
from .paths import GuidedPath, WeightedPath
from .rng import RngStream

_NEG_INF = float("-inf")
_ZERO_C_QUAD_GAP = 1e-9


class _Miss:
    __slots__ = ()

    def __repr__(self):
        return "MISS"

    def __bool__(self):
        return False


MISS = _Miss()


def _adaptive_simpson(f, a, b, tol, depth=30):
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    # absolute target with a relative floor, so segments whose integral is
    # huge (guided rates blowing up near the observation time) still
    # terminate with full float precision instead of recursing to the cap
    if depth <= 0 or abs(err) <= 15.0 * (tol + 1e-13 * abs(left + right)):
        return left + right + err / 15.0
    half = 0.5 * tol
    return _simpson_rec(f, a, m, fa, flm, fm, left, half, depth - 1) + _simpson_rec(
        f, m, b, fm, frm, fb, right, half, depth - 1
    )


def _jump_path(path):
    return path.path if isinstance(path, GuidedPath) else path


def _segment_quad(guide, active, a, b, x, tol):
    fns = [(lam, guide.alpha_fn(ell, x, xn)) for ell, lam, xn in active]
    if len(fns) == 1:
        lam, af = fns[0]

        def f(s):
            return lam * (af(s) - 1.0)

    else:

        def f(s):
            return sum(lam * (af(s) - 1.0) for lam, af in fns)

    return _adaptive_simpson(f, a, b, tol)


def log_psi(guide, net, path, quad_tol=1e-8):
    """log Psi along the path: exact endpoint log-g differences plus
    quadrature of the reaction part per constant-state segment."""
    p = _jump_path(path)
    scheme = guide.scheme
    times = set(scheme.times)
    zero_c = scheme.zero_c
    total = 0.0
    for a, b, x in p.segments(net):
        if b <= a:
            continue
        active = []
        for ell, reac in enumerate(net.reactions):
            lam = reac.intensity.value_real(x)
            if lam > 0.0:
                active.append((ell, lam, guide._apply(x, ell)))
        cuts = sorted(t for t in times if a < t < b)
        pts = [a] + cuts + [b]
        for a2, b2 in zip(pts, pts[1:]):
            la = guide.log_g(a2, x)
            lb = guide.log_g_left(b2, x) if b2 in times else guide.log_g(b2, x)
            if not (math.isfinite(la) and math.isfinite(lb)):
                raise NonFiniteWeight(
                    f"log g not finite on segment [{a2}, {b2}] at state {x}"
                )
            total += lb - la
            # near an exact-hit observation time the divergent part of
            # d/dt log g sits entirely in the endpoint difference; the
            # remaining integrand is bounded, so the quadrature stops short
            b_q = b2 - _ZERO_C_QUAD_GAP if (zero_c and b2 in times) else b2
            if b_q > a2 and active:
                total += _segment_quad(guide, active, a2, b_q, x, quad_tol)
    return total


def _terminal_state(net, p, horizon):
    return p.state_at(net, horizon, left=True)


def log_weight_single(guide, net, path, v=None, L=None, quad_tol=1e-8):
    """log[g(0, x0) Psi / g(T-, X(T-))] for a hit path, MISS otherwise."""
    scheme = guide.scheme
    if not scheme.is_single():
        raise ModelDefinitionError("log_weight_single needs a single-observation scheme")
    p = _jump_path(path)
    x_end = _terminal_state(net, p, scheme.horizon)
    if v is not None:
        Lm = np.eye(len(x_end)) if L is None else np.atleast_2d(np.asarray(L, float))
        hit = bool(
            np.all(np.abs(Lm @ np.asarray(x_end, float) - np.atleast_1d(v)) <= 1e-9)
        )
    elif isinstance(path, GuidedPath):
        hit = path.hit_all
    else:
        hit = scheme.observations[0].hit(x_end)
    if not hit:
        return MISS
    lp = log_psi(guide, net, p, quad_tol)
    lg0 = guide.log_g(0.0, p.x0)
    lgT = guide.log_g_left(scheme.horizon, x_end)
    if not (math.isfinite(lg0) and math.isfinite(lgT)):
        raise NonFiniteWeight("log g not finite at a path endpoint")
    return lg0 + lp - lgT


def log_weight_multi(guide, net, path, scheme=None, quad_tol=1e-8):
    """Multi-observation log weight; MISS unless every conditioning is hit.

    For invertible covariances the exact constant -1/2 sum v_k' C_k^{-1} v_k
    is included; with C_k = 0 the weight is defined only up to a constant.
    """
    scheme = scheme or guide.scheme
    p = _jump_path(path)
    if isinstance(path, GuidedPath):
        hits = path.hits
    else:
        hits = scheme.hits(net, p)
    if not all(hits):
        return MISS
    lp = log_psi(guide, net, p, quad_tol)
    lg0 = guide.log_g(0.0, p.x0)
    if not math.isfinite(lg0):
        raise NonFiniteWeight("log g not finite at the initial state")
    if scheme.zero_c:
        return lg0 + lp
    a_list = getattr(guide, "a_list", None)
    const = 0.0
    for k, o in enumerate(scheme.observations):
        a_k = None if a_list is None else a_list[k]
        C = scheme.covariance(k, a_k)
        const += 0.5 * float(o.v @ np.linalg.solve(C, o.v))
    return lg0 + lp - const


def logmeanexp(values, n=None):
    """log of the mean of exp(values); entries of -inf contribute zero mass.

    ``n`` overrides the denominator (values padded with implicit -inf)."""
    vals = list(values)
    count = len(vals) if n is None else int(n)
    if count <= 0:
        raise InvalidReplicates("need a positive number of terms")
    finite = [v for v in vals if v != _NEG_INF]
    if not finite:
        return _NEG_INF
    top = max(finite)
    return top + math.log(sum(math.exp(v - top) for v in finite) / count)


def _default_policy(guide):
    from .guiding.epsilon import GEpsilon
    from .guiding.zero_c import GZeroC

    base = getattr(guide, "base", guide)
    if isinstance(base, (GEpsilon, GZeroC)):
        return DeltaPolicy.analytic_eta(0.5)
    return DeltaPolicy.half_remaining()


def estimate_pmf(
    guide_factory,
    net,
    x0,
    T,
    support,
    N,
    rng,
    policy=None,
    quad_tol=1e-8,
    max_events=10**6,
):
    """Unbiased Monte Carlo estimate of P(X(T) = v | X(0) = x0) per v.

    For each target v, ``guide_factory(v)`` supplies the guiding term; N
    guided paths are weighted and averaged. Returns one record per v with
    the estimate, its standard error, the hit fraction and a flag for
    targets no path reached. Replicates use disjoint substreams of ``rng``
    and are reduced in a fixed order, so results are reproducible.
    """
    if N <= 0:
        raise InvalidReplicates(f"replicates must be positive, got {N}")
    base = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    out = []
    for vi, v in enumerate(support):
        guide = guide_factory(v)
        scheme = guide.scheme
        pol = policy or _default_policy(guide)
        shifted = []
        log_ws = []
        hits = 0
        for i in range(N):
            stream = base.spawn(vi * N + i)
            gp = simulate_guided(guide, net, scheme, x0, pol, stream, max_events)
            if gp.hit_all:
                hits += 1
                lw = log_weight_single(guide, net, gp, quad_tol=quad_tol)
                log_ws.append(lw if lw is not MISS else _NEG_INF)
            else:
                log_ws.append(_NEG_INF)
        finite = [w for w in log_ws if w != _NEG_INF]
        if finite:
            top = max(finite)
            shifted = [math.exp(w - top) if w != _NEG_INF else 0.0 for w in log_ws]
            mean = sum(shifted) / N
            if N > 1:
                var = sum((s - mean) ** 2 for s in shifted) / (N - 1)
                se = math.exp(top) * math.sqrt(var / N)
            else:
                se = float("nan")
            estimate = math.exp(top) * mean
        else:
            estimate, se = 0.0, 0.0
        out.append(
            {
                "v": v,
                "estimate": estimate,
                "se": se,
                "hit_fraction": hits / N,
                "n": N,
                "no_hits": hits == 0,
            }
        )
    return out
