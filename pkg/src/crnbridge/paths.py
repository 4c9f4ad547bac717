"""Jump paths and their piecewise-constant trajectories."""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class JumpPath:
    """Initial state plus ordered (time, reaction_index) events up to horizon.

    The implied trajectory is piecewise constant and right-continuous.
    ``truncated`` marks a path cut short by the event guard.
    """

    x0: tuple
    events: tuple
    horizon: float
    truncated: bool = False

    def __post_init__(self):
        times = [t for t, _ in self.events]
        if any(b <= a for a, b in zip(times, times[1:])) or (
            times and (times[0] <= 0.0 or times[-1] > self.horizon)
        ):
            raise ValueError("event times must be strictly increasing in (0, horizon]")

    def states(self, net):
        """States after each event, starting from x0."""
        out = [self.x0]
        x = self.x0
        for _, ell in self.events:
            x = net.apply(x, ell)
            out.append(x)
        return out

    def state_at(self, net, t, left=False):
        """State at time t (left=True gives the pre-jump state at jump times)."""
        x = self.x0
        for s, ell in self.events:
            if s < t or (not left and s == t):
                x = net.apply(x, ell)
            else:
                break
        return x

    def segments(self, net):
        """Yield (t_start, t_end, state) over [0, horizon]."""
        x = self.x0
        t = 0.0
        for s, ell in self.events:
            yield t, s, x
            x = net.apply(x, ell)
            t = s
        yield t, self.horizon, x

    @property
    def n_events(self):
        return len(self.events)


@dataclass(frozen=True)
class GuidedPath:
    """A jump path plus a hit flag per conditioning time."""

    path: JumpPath
    hits: tuple  # bool per observation, in time order

    @property
    def hit_all(self):
        return all(self.hits)


@dataclass(frozen=True)
class WeightedPath:
    """Guided path with its accumulated log importance weight.

    ``log_weight`` is -inf for paths that miss any conditioning.
    ``up_to_constant`` marks zero-covariance schemes where the weight is
    only defined up to a path-independent constant.
    """

    path: GuidedPath
    log_psi: float
    log_weight: float
    up_to_constant: bool = False

    @property
    def hit_all(self):
        return self.path.hit_all
