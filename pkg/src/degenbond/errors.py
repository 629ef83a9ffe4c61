"""Exception hierarchy for the solver and its front end.

Numerical failures (everything derived from SolverError) map to CLI exit
code 3; configuration problems (ConfigError subtree) map to exit code 2.
"""


class DegenBondError(Exception):
    """Base class for all package errors."""


class SolverError(DegenBondError):
    """Base class for numerical / model failures."""


class InvalidMesh(SolverError):
    """Mesh construction violated a precondition (too few cells, non-monotone nodes)."""


class AmbiguousCase(SolverError):
    """The drift function matches none of the four degeneracy factorizations."""


class DegenerateFactor(SolverError):
    """The volatility factor w0 is not bounded away from zero on [0, R]."""


class NumericalOverflow(SolverError):
    """A flux weight evaluated to a non-finite number."""


class AssemblyError(SolverError):
    """An assembled off-diagonal entry violated the proven sign pattern."""


class SingularSystem(SolverError):
    """A forward-elimination pivot vanished in the tridiagonal solve."""


class NonFiniteSolution(SolverError):
    """A time step produced NaN or infinity."""


class NonUniformMesh(SolverError):
    """The reference scheme was asked to run on a non-uniform grid."""


class MissingExact(SolverError):
    """Error norms requested without an exact solution."""


class RateUndefined(SolverError):
    """A convergence-rate formula hit a zero denominator or zero error."""


class SnapshotMissing(SolverError):
    """Plot data requested at a time level that was not captured."""


class ConfigError(DegenBondError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Malformed config text or coefficient expression."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)


class ValidationError(ConfigError):
    """Config parsed but a field value is inadmissible."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
