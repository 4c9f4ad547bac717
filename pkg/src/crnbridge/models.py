"""Reference reaction networks used by the bundled experiments."""

from .network import MassAction, Reaction, ReactionNetwork


def death_process(c=0.5):
    """Pure death: A -> 0 at rate c * x."""
    return ReactionNetwork(
        ["A"],
        [Reaction(xi=(-1,), intensity=MassAction(c, (1,)))],
    )


def gtt(kappa1=100.0, kappa2=10.0, d_M=25.0, d_P=1.0):
    """Gene transcription and translation.

    Species (G, M, P): transcription G -> G + M, translation M -> M + P,
    and degradation of M and P. The gene count never changes.
    """
    return ReactionNetwork(
        ["G", "M", "P"],
        [
            Reaction(xi=(0, 1, 0), intensity=MassAction(kappa1, (1, 0, 0))),
            Reaction(xi=(0, 0, 1), intensity=MassAction(kappa2, (0, 1, 0))),
            Reaction(xi=(0, -1, 0), intensity=MassAction(d_M, (0, 1, 0))),
            Reaction(xi=(0, 0, -1), intensity=MassAction(d_P, (0, 0, 1))),
        ],
    )


def enzyme_kinetics(kappa=(5.0, 5.0, 3.0)):
    """Substrate + enzyme binding with product formation.

    Species (S, E, SE, P): S + E -> SE, SE -> S + E, SE -> P + E. The
    product count only ever increases, and states with S = SE = 0 are
    absorbing.
    """
    k1, k2, k3 = kappa
    return ReactionNetwork(
        ["S", "E", "SE", "P"],
        [
            Reaction(xi=(-1, -1, 1, 0), intensity=MassAction(k1, (1, 1, 0, 0))),
            Reaction(xi=(1, 1, -1, 0), intensity=MassAction(k2, (0, 0, 1, 0))),
            Reaction(xi=(0, 1, -1, 1), intensity=MassAction(k3, (0, 0, 1, 0))),
        ],
    )
