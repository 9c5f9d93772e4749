"""Exception hierarchy shared across the package."""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from .model import ValidationReport


class MsaverifyError(Exception):
    """Base class for all package errors."""


class ModelInvariantError(MsaverifyError):
    """A model failed structural validation where a valid one was required."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(f"model violates invariants:\n{report}")


class IngestError(MsaverifyError):
    """Base for model-file and DSL ingestion failures."""


class ModelSyntaxError(IngestError):
    """Malformed document; carries the 1-based position when known."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class ModelSchemaError(IngestError):
    """Well-formed document with a field or type outside the schema."""


class ModelSemanticError(IngestError):
    """Document decoded fine but the resulting model fails validation."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(f"model fails validation:\n{report}")


class DslError(IngestError):
    """Base for DSL diagnostics; always carries a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class DslSyntaxError(DslError):
    pass


class DslReferenceError(DslError):
    """A call or access names something that was never declared."""


class ConstraintConfigError(MsaverifyError):
    """Constraint generation requested without its required inputs."""


class ConstraintModelMismatch(MsaverifyError):
    """A constraint atom references an element absent from the model."""


class RepairGuardError(MsaverifyError):
    """Brute-force enumeration refused: instance exceeds the size guard."""


class SolverLaunchError(MsaverifyError):
    """The external solver executable could not be started."""


class SolverOutputError(MsaverifyError):
    """The external solver produced output this driver cannot parse."""

    def __init__(self, message: str, output: str = ""):
        self.output = output
        super().__init__(message)
