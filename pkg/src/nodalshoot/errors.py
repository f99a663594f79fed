"""Exception hierarchy for nodalshoot."""


class ShootingError(Exception):
    """Base class for all nodalshoot errors."""


class ConfigError(ShootingError):
    """Invalid configuration (bad parameters, m <= 1, inverted ranges, ...)."""


class DomainError(ShootingError):
    """Evaluation outside the domain on which a nonlinearity is defined."""


class HypothesisError(ShootingError):
    """The nonlinearity violates a structural requirement needed to proceed
    (e.g. the primitive never crosses zero inside the search box)."""


class DegenerateStartError(ShootingError):
    """Shooting from an equilibrium value: f(alpha) = 0, the solution is constant."""


class SingularityError(ShootingError):
    """Right-hand side requested at the coordinate singularity r = 0."""


class QuadratureError(ShootingError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved


class BracketError(ShootingError):
    """A root/minimum bracket could not be established or refined."""


class BracketNotFoundError(ShootingError):
    """No sweep pair brackets the requested nodal transition."""


class EventOrderError(ShootingError):
    """Recorded events violate the interleaving structure (zero / turning /
    zero ...); usually means the event tolerance is too loose."""
