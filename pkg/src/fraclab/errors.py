"""Exception hierarchy shared by all fraclab modules.

Every error carries a short machine-readable ``kind`` tag; the command line
front end serialises it into a single-line JSON payload and maps the class
to an exit code (argument/resource/numeric failures all exit 3, usage
errors exit 2 via argparse).
"""


class FraclabError(Exception):
    kind = "error"


class ArgumentError(FraclabError, ValueError):
    """Caller passed a value outside an operation's documented domain."""

    kind = "argument"


class NonTriadicError(ArgumentError):
    kind = "non-triadic"


class LevelCapError(FraclabError):
    """A construction would exceed its level cap; message names the cap."""

    kind = "level-cap"


class UnsupportedKindError(ArgumentError):
    kind = "unsupported-kind"


class NumericError(FraclabError):
    kind = "numeric"


class SolverError(NumericError):
    """Linear solve failed to reach the required residual."""

    kind = "solver"

    def __init__(self, message, residual=None, rhs_norm=None):
        super().__init__(message)
        self.residual = residual
        self.rhs_norm = rhs_norm


class QuadratureError(NumericError):
    """Adaptive quadrature ran out of subdivisions.

    ``achieved`` is the error estimate at the point the budget ran out and
    ``value`` the best integral estimate so far.
    """

    kind = "quadrature"

    def __init__(self, message, value=None, achieved=None):
        super().__init__(message)
        self.value = value
        self.achieved = achieved


class GlueInfeasibleError(NumericError):
    kind = "glue-infeasible"
