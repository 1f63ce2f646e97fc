"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the command-line
front end prints on stderr.  ``numerical`` separates solver failures (exit 1)
from bad input (exit 2).
"""


class WeldFactorError(Exception):
    code = "ERROR"
    numerical = True


class PointOnCurve(WeldFactorError):
    code = "POINT_ON_CURVE"
    numerical = False


class QuadratureAmbiguous(WeldFactorError):
    code = "QUADRATURE_AMBIGUOUS"


class OutOfChart(WeldFactorError):
    code = "OUT_OF_CHART"


class NoConvergence(WeldFactorError):
    code = "NO_CONVERGENCE"

    def __init__(self, message, *, stage=None, diagnostics=None):
        super().__init__(message)
        self.stage = stage
        self.diagnostics = diagnostics or {}


class EmptyList(WeldFactorError):
    code = "EMPTY_LIST"
    numerical = False


class TraceMismatch(WeldFactorError):
    code = "TRACE_MISMATCH"


class BadNormalization(WeldFactorError):
    code = "BAD_NORMALIZATION"
    numerical = False


class NonMonotoneInput(WeldFactorError):
    code = "NON_MONOTONE_INPUT"
    numerical = False


class AmbiguousMatch(WeldFactorError):
    code = "AMBIGUOUS_MATCH"


class NotBijective(WeldFactorError):
    code = "NOT_BIJECTIVE"


class ProjectionDefect(WeldFactorError):
    code = "PROJECTION_DEFECT"


class CannotCertify(WeldFactorError):
    code = "CANNOT_CERTIFY"


class BoundViolated(WeldFactorError):
    code = "BOUND_VIOLATED"
    numerical = False


class DomainInvalid(WeldFactorError):
    code = "DOMAIN_INVALID"
    numerical = False


class SchemaError(WeldFactorError):
    code = "SCHEMA_INVALID"
    numerical = False
