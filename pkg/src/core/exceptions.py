"""Exception hierarchy for tube-spectra."""

from typing import List, Optional


class TubeSpectraError(Exception):
    """Base class for all errors raised by the laboratory."""


class DomainError(TubeSpectraError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class CurveError(TubeSpectraError):
    """Curvature data violates the admissible curve class."""


class PreconditionError(TubeSpectraError):
    """A mathematical precondition of an operation does not hold."""


class GeometryError(TubeSpectraError):
    """The tube geometry degenerates (the Jacobian h is not positive)."""


class FocalPointError(GeometryError):
    """The Jacobi field of a surface strip reached zero inside the strip."""


class AssemblyError(TubeSpectraError):
    """Geometry and grid do not fit together."""


class CapabilityError(TubeSpectraError):
    """Requested feature or problem size is not supported."""


class DegenerateInputError(TubeSpectraError, ValueError):
    """Input is degenerate (e.g. identically zero)."""


class ArgumentError(TubeSpectraError, ValueError):
    """Invalid solver or analysis arguments."""


class SturmViolationError(TubeSpectraError):
    """An eigenfunction of S does not have the Sturm number of zeros."""

    def __init__(self, index: int, found: int):
        self.index = index
        self.found = found
        super().__init__(
            f"phi_{index} has {found} interior zeros, expected {index - 1} "
            "(under-resolved grid or clustered eigenvalues)"
        )


class PairingAmbiguityError(TubeSpectraError):
    """Eigenvector of T cannot be matched with its comparison eigenvector."""

    def __init__(self, index: int, overlap: float):
        self.index = index
        self.overlap = overlap
        super().__init__(
            f"|<psi_{index}, psi0_{index}>| = {abs(overlap):.3g} < 0.5; "
            "epsilon is outside the asymptotic regime"
        )


class RateFitError(TubeSpectraError):
    """Too few usable points to fit a convergence rate."""


class ConfigError(TubeSpectraError):
    """Configuration could not be parsed or validated."""

    def __init__(self, message: str, diagnostics: Optional[List[str]] = None):
        self.diagnostics = list(diagnostics or [])
        detail = "\n  ".join(self.diagnostics)
        super().__init__(f"{message}\n  {detail}" if detail else message)
