"""Exception hierarchy shared by all solvers."""


class LabError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(LabError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain where an operator is defined."""


class SingularSymbolError(LabError, ArithmeticError):
    """A Fourier symbol evaluated to a non-finite value."""


class ConfigurationError(LabError, ValueError):
    """Inconsistent run configuration, e.g. a CFL violation."""


class BathymetryError(LabError, ValueError):
    """Still-water depth drops below the admissible minimum."""


class DiffeoError(LabError, ArithmeticError):
    """The straightening map of the fluid domain is degenerate."""


class SolverError(LabError, RuntimeError):
    """A linear solve failed or did not converge."""


class MisuseError(LabError, TypeError):
    """An operation was called on a run of the wrong kind."""


class PreconditionError(LabError, ValueError):
    """Input data violate a documented precondition."""


class ConfigFileError(LabError, ValueError):
    """Malformed configuration text, an unknown key, or a value of the wrong type."""
