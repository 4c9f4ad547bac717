"""Reaction networks: species, intensities and the diffusion-limit coefficients.

States are plain tuples of nonnegative integers; the hot simulation loops
work on tuples and Python floats, numpy enters only for the matrix-valued
drift/covariance used by the guiding terms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ModelDefinitionError


@dataclass(frozen=True)
class Species:
    name: str
    index: int


def as_state(x):
    """Validate and normalize a state to a tuple of nonnegative ints."""
    t = tuple(int(v) for v in x)
    if any(v < 0 for v in t):
        raise ModelDefinitionError(f"state {t} has negative counts")
    return t


def _falling_factorial(x, order):
    """x(x-1)...(x-order+1) for real x; 1 when order == 0."""
    out = 1.0
    for i in range(order):
        out *= x - i
    return out


def _falling_factorial_deriv(x, order):
    """d/dx of the falling factorial of given order."""
    total = 0.0
    for i in range(order):
        term = 1.0
        for m in range(order):
            if m != i:
                term *= x - m
        total += term
    return total


def mass_action_intensity(kappa, orders, x):
    """Stochastic mass-action rate: kappa times ordered reactant tuples.

    Uses falling factorials, so the rate is zero whenever a species count
    is below its order.
    """
    out = float(kappa)
    for k, nu in enumerate(orders):
        for i in range(int(nu)):
            out *= x[k] - i
        if out == 0.0:
            return 0.0
    return max(out, 0.0)


class MassAction:
    """Mass-action intensity kappa * prod_k FF(x_k, nu_k)."""

    time_dependent = False

    def __init__(self, kappa, orders):
        if kappa < 0:
            raise ModelDefinitionError("rate constant must be nonnegative")
        self.kappa = float(kappa)
        self.orders = tuple(int(nu) for nu in orders)
        if any(nu < 0 for nu in self.orders):
            raise ModelDefinitionError("reaction orders must be nonnegative")
        # only species with positive order enter the product
        self._terms = tuple((k, nu) for k, nu in enumerate(self.orders) if nu > 0)

    def __call__(self, t, x):
        out = self.kappa
        for k, nu in self._terms:
            xk = x[k]
            if xk < nu:
                return 0.0
            for i in range(nu):
                out *= xk - i
        return out

    def value_real(self, x):
        """Intensity extended to real-valued states (CLE / LNA drift)."""
        out = self.kappa
        for k, nu in self._terms:
            out *= _falling_factorial(x[k], nu)
        return out

    def grad_real(self, x):
        """Gradient of value_real, analytic (polynomial drift)."""
        g = np.zeros(len(x))
        for k, nu in self._terms:
            term = self.kappa * _falling_factorial_deriv(x[k], nu)
            for j, m in self._terms:
                if j != k:
                    term *= _falling_factorial(x[j], m)
            g[k] = term
        return g

    @property
    def bound(self):
        return None


class CustomIntensity:
    """User-supplied intensity evaluator.

    ``time_dependent`` must be declared explicitly: time-independent
    intensities unlock exact exponential sampling in the forward
    simulator; time-dependent ones require a finite uniform ``bound``
    for thinning.
    """

    def __init__(self, evaluator, time_dependent, bound=None):
        self.evaluator = evaluator
        self.time_dependent = bool(time_dependent)
        self.bound = None if bound is None else float(bound)

    def __call__(self, t, x):
        v = self.evaluator(t, x)
        if v < 0:
            raise ModelDefinitionError(f"intensity evaluated negative at t={t}, x={x}")
        return v

    def value_real(self, x):
        return self.evaluator(0.0, x)

    def grad_real(self, x, step_scale=1e-6):
        x = np.asarray(x, dtype=float)
        g = np.zeros(len(x))
        for k in range(len(x)):
            h = step_scale * (1.0 + abs(x[k]))
            xp, xm = x.copy(), x.copy()
            xp[k] += h
            xm[k] -= h
            g[k] = (self.evaluator(0.0, xp) - self.evaluator(0.0, xm)) / (2 * h)
        return g


@dataclass(frozen=True)
class Reaction:
    xi: tuple
    intensity: object  # MassAction or CustomIntensity

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(int(v) for v in self.xi))
        if isinstance(self.intensity, MassAction):
            # a positive rate must never jump below zero: each consumed
            # molecule has to appear among the reactants
            for k, dk in enumerate(self.xi):
                if dk < 0 and self.intensity.orders[k] < -dk:
                    raise ModelDefinitionError(
                        f"reaction consumes {-dk} of species {k} but has order "
                        f"{self.intensity.orders[k]}: positive rate could leave the lattice"
                    )


class ReactionNetwork:
    """Immutable network of species and reactions."""

    def __init__(self, species, reactions):
        if isinstance(species[0], str):
            species = [Species(name, i) for i, name in enumerate(species)]
        self.species = tuple(species)
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ModelDefinitionError("species names must be unique")
        if sorted(s.index for s in self.species) != list(range(len(self.species))):
            raise ModelDefinitionError("species indices must be 0..d-1")
        self.reactions = tuple(reactions)
        d = len(self.species)
        for r in self.reactions:
            if len(r.xi) != d:
                raise ModelDefinitionError("reaction change vector has wrong dimension")
            if isinstance(r.intensity, MassAction) and len(r.intensity.orders) != d:
                raise ModelDefinitionError("mass-action orders have wrong dimension")
        self.d = d
        self.n_reactions = len(self.reactions)
        self.time_homogeneous = all(not r.intensity.time_dependent for r in self.reactions)
        self.xi_matrix = np.array([r.xi for r in self.reactions], dtype=float)

    def intensity(self, ell, t, x):
        return self.reactions[ell].intensity(t, x)

    def intensities(self, t, x):
        return [r.intensity(t, x) for r in self.reactions]

    def apply(self, x, ell):
        xi = self.reactions[ell].xi
        return tuple(x[k] + xi[k] for k in range(self.d))

    def __repr__(self):
        names = ",".join(s.name for s in self.species)
        return f"ReactionNetwork([{names}], {self.n_reactions} reactions)"


def total_intensity(net, t, x):
    """Sum of all reaction intensities; zero iff the state is absorbing at t."""
    return sum(net.intensities(t, x))


@dataclass(frozen=True)
class CLECoefficients:
    """Drift, diffusion factor and covariance of the diffusion limit."""

    drift: object
    diffusion: object
    covariance: object
    drift_jacobian: object


def cle_coefficients(net):
    """Diffusion-limit coefficients: drift sum(lam*xi), covariance sum(lam*xi*xi')."""
    xi = net.xi_matrix  # (p, d)

    def drift(t, x):
        lams = np.array([r.intensity.value_real(x) for r in net.reactions])
        return lams @ xi

    def diffusion(t, x):
        lams = np.array([max(r.intensity.value_real(x), 0.0) for r in net.reactions])
        return xi.T * np.sqrt(lams)

    def covariance(t, x):
        lams = np.array([max(r.intensity.value_real(x), 0.0) for r in net.reactions])
        return (xi.T * lams) @ xi

    def drift_jacobian(t, x):
        jac = np.zeros((net.d, net.d))
        for r in net.reactions:
            jac += np.outer(np.asarray(r.xi, dtype=float), r.intensity.grad_real(x))
        return jac

    return CLECoefficients(drift, diffusion, covariance, drift_jacobian)
