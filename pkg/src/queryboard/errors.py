"""Shared exception hierarchy.

Every error raised by the engine derives from EngineError so the service
and CLI layers can map failures to HTTP status codes / exit codes in one
place.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine-level failures."""

    code = "engine_error"


# --- relational store ---------------------------------------------------


class FormatError(EngineError):
    """Malformed CSV input (ragged rows, duplicate headers, bad cells)."""

    code = "format_error"


class EmptyTableError(EngineError):
    """CSV file with a header but no data rows."""

    code = "empty_table"


class UnknownColumnError(EngineError):
    code = "unknown_column"


class UnknownTableError(EngineError):
    code = "unknown_table"


class TypeMismatchError(EngineError):
    """Operation applied to a value of the wrong column type."""

    code = "type_mismatch"


class UnboundChoiceError(EngineError):
    """A query submitted for execution still contains a choice node."""

    code = "unbound_choice"


# --- SQL parsing --------------------------------------------------------


class SqlSyntaxError(EngineError):
    """Parse failure with source position."""

    code = "parse_error"

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class UnsupportedFeatureError(EngineError):
    """Syntactically valid SQL outside the supported subset."""

    code = "unsupported_feature"

    def __init__(self, feature: str, line: int = 0, column: int = 0):
        self.feature = feature
        self.line = line
        self.column = column
        suffix = f" (line {line}, column {column})" if line else ""
        super().__init__(f"unsupported feature: {feature}{suffix}")


# --- difftrees ----------------------------------------------------------


class SchemaIncompatibleError(EngineError):
    """Result schemas are not union compatible."""

    code = "schema_incompatible"


class NotDynamicError(EngineError):
    """Node schema requested for a node that carries no variation."""

    code = "not_dynamic"


class BindingError(EngineError):
    code = "binding_error"


class IncompleteBindingError(BindingError):
    """A reachable choice node has no selection."""

    code = "incomplete_binding"


class IndexOutOfRangeError(BindingError):
    """A selection references a child index that does not exist."""

    code = "index_out_of_range"


# --- transformations ----------------------------------------------------


class NotApplicableError(EngineError):
    """Transformation preconditions do not hold on the target."""

    code = "not_applicable"


# --- cost / search ------------------------------------------------------


class NotExpressiveError(EngineError):
    """An interface cannot express one of the input queries."""

    code = "not_expressive"

    def __init__(self, sql: str):
        self.sql = sql
        super().__init__(f"interface cannot express: {sql}")


class BudgetExceededError(EngineError):
    """Exhaustive search state budget exhausted."""

    code = "budget_exceeded"
