"""Exception hierarchy shared by all analysis modules.

Every analysis failure carries a stable machine-readable ``code`` that the
service layer and the CLI surface verbatim.
"""

from __future__ import annotations

from typing import Any


class AnalysisError(Exception):
    """Base class for analysis failures with a stable error code."""

    code = "ANALYSIS_ERROR"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        doc: dict = {"error": self.code, "message": self.message}
        if self.details:
            doc["details"] = self.details
        return doc


class NetFormatError(AnalysisError):
    """The net document violates the JSON schema or the rational grammar."""

    code = "SCHEMA_VIOLATION"

    def __init__(self, message: str, path: str = "", **details: Any):
        super().__init__(message, path=path, **details)
        self.path = path


class NetSyntaxError(NetFormatError):
    code = "SYNTAX_ERROR"


class DimensionMismatch(AnalysisError):
    code = "DIMENSION_MISMATCH"


class NotEnabled(AnalysisError):
    code = "NOT_ENABLED"


class StateBudgetExceeded(AnalysisError):
    code = "STATE_BUDGET_EXCEEDED"


class NotErgodic(AnalysisError):
    code = "NOT_ERGODIC"


class MultiContinuous(AnalysisError):
    code = "MULTI_CONTINUOUS"


class Unstable(AnalysisError):
    code = "UNSTABLE"


class EigenCountMismatch(AnalysisError):
    code = "EIGEN_COUNT_MISMATCH"


class NumericFailure(AnalysisError):
    code = "NUMERIC_FAILURE"


class PartitionNotStable(AnalysisError):
    code = "PARTITION_NOT_STABLE"


class TerminalMarking(AnalysisError):
    code = "TERMINAL"


class UnknownKind(AnalysisError):
    code = "UNKNOWN_KIND"


class ParameterMismatch(AnalysisError):
    code = "PARAMETER_MISMATCH"


class DivisionByZero(AnalysisError):
    code = "DIVISION_BY_ZERO"


class FormulaSyntaxError(AnalysisError):
    code = "FORMULA_SYNTAX"

    def __init__(self, message: str, position: int = -1):
        super().__init__(message, position=position)
        self.position = position
