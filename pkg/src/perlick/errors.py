"""Exception hierarchy shared by all modules."""


class PerlickError(Exception):
    """Base class for every error raised by the package."""


class PoleError(PerlickError, ValueError):
    """A κ-tangent (or a chart map) was evaluated where the κ-cosine vanishes."""


class DomainError(PerlickError, ValueError):
    """A phase point or parameter lies outside the chart where it is defined."""


class NoSolutionError(PerlickError, ValueError):
    """The requested energy level is not reachable (E below the potential minimum)."""


class DegenerateOrbitError(PerlickError, ValueError):
    """A constant of motion has no defined phase (planar X±, zero p_φ, l = lz)."""


class StencilDomainError(DomainError):
    """A finite-difference stencil point fell outside the chart."""


class IntegrationError(PerlickError, RuntimeError):
    """The integrator could not continue (step collapse near a singular surface).

    ``last_state`` and ``last_time`` hold the last accepted point.
    """

    def __init__(self, message, last_time=None, last_state=None):
        super().__init__(message)
        self.last_time = last_time
        self.last_state = last_state


class ConfigError(PerlickError, ValueError):
    """Invalid command-line or config-file input."""
