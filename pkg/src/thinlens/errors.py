"""Exception hierarchy shared by every solver stage."""


class LensError(Exception):
    """Base class for all errors raised by :mod:`thinlens`."""


class DomainError(LensError, ValueError):
    """Evaluation requested at a point where the model is undefined."""


class UnsupportedRegionError(DomainError):
    """The model only provides formulas outside this region."""


class IntegrabilityError(LensError, ValueError):
    """A density profile violates the integrability requirement."""


class DegenerateConfiguration(LensError):
    """The lens equation has a continuum of solutions (an Einstein ring),
    or a coefficient vanishes so isolated images cannot be reported.

    ``payload`` carries whatever diagnostic the raising stage has: ring
    parameters, converged points or the offending coefficient.
    """

    def __init__(self, message, kind="ring", payload=None):
        super().__init__(message)
        self.kind = kind
        self.payload = payload if payload is not None else {}


class NoRingError(LensError):
    """No admissible Einstein ring exists for the requested model."""


class ContourError(LensError):
    """A winding-number contour passes too close to a zero or pole."""

    def __init__(self, message, suggested_radius=None):
        super().__init__(message)
        self.suggested_radius = suggested_radius


class ClusteringError(LensError):
    """Distinct singularities collapse onto the same image point."""


class InjectivityError(LensError, ValueError):
    """A conformal map failed the sampled injectivity certification."""


class ScenarioError(LensError, ValueError):
    """A CLI scenario failed schema validation."""
