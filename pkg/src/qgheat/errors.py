"""Exception hierarchy shared by every module of the package."""


class QGHeatError(Exception):
    """Base class for all package errors."""


class GraphError(QGHeatError, ValueError):
    """Invalid graph, potential or point specification.

    ``line`` carries the 1-based line number when the error comes from
    parsing a GRAPH file.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshError(QGHeatError, ValueError):
    """Mesh too coarse or otherwise degenerate."""


class NumericalError(QGHeatError, RuntimeError):
    """A numerical routine failed to deliver a trustworthy result."""


class ConvergenceError(NumericalError):
    """The eigensolver did not converge within its iteration cap."""


class TruncationError(NumericalError):
    """Spectral truncation tail is too large relative to the computed value."""
