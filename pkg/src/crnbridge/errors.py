"""Exception hierarchy for crnbridge."""


class CrnBridgeError(Exception):
    """Base class for all crnbridge errors."""


class ModelDefinitionError(CrnBridgeError):
    """A network, intensity or observation scheme is ill-formed."""


class TimeDependentRate(CrnBridgeError):
    """Exact exponential sampling requested for a time-dependent intensity."""


class InvalidBound(CrnBridgeError):
    """A thinning proposal evaluated an intensity above its declared bound."""


class ExplosionGuard(CrnBridgeError):
    """The per-path event cap was reached before the horizon.

    Carries the partial path in ``self.path``.
    """

    def __init__(self, message, path):
        super().__init__(message)
        self.path = path


class SingularC(CrnBridgeError):
    """An observation covariance C_k is not invertible."""


class SingularMetric(CrnBridgeError):
    """L a L' is singular; the observation-space metric is undefined."""


class SingularCovariance(CrnBridgeError):
    """A Gaussian guiding covariance degenerated to a singular matrix."""


class OdeFailure(CrnBridgeError):
    """The ODE integrator failed to reach its tolerance."""


class EvaluationAtMiss(CrnBridgeError):
    """log g requested at an observation time for a state off the target set."""


class WrongTrend(CrnBridgeError):
    """The analytic window formula was called with a non-increasing rate."""


class NonFiniteWeight(CrnBridgeError):
    """log g hit -inf in the interior of a path segment."""


class InvalidReplicates(CrnBridgeError):
    """A replicate count was zero or negative."""


class ConfigError(CrnBridgeError):
    """An experiment configuration failed schema validation."""
