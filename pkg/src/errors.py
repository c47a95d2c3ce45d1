# ============================================================
# src/errors.py
# Exception hierarchy shared by every module and the CLI
# ============================================================
from __future__ import annotations

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ANALYSIS = 3
EXIT_BUDGET = 4


class CausalForgeError(RuntimeError):
    """Base error. `exit_code` is what the CLI returns when this escapes a command."""

    exit_code: int = EXIT_ANALYSIS
    kind: str = "error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_payload(self) -> Dict[str, Any]:
        return {
            "error": self.kind,
            "message": self.message,
            "exit_code": self.exit_code,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in value]
    return str(value)


# --------- config / input (exit 2) ----------
class ConfigError(CausalForgeError):
    exit_code = EXIT_CONFIG
    kind = "config"


class InputError(CausalForgeError, ValueError):
    exit_code = EXIT_CONFIG
    kind = "input"


class RuleSyntaxError(InputError):
    kind = "syntax"

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})", line=line, column=column)
        self.line = line
        self.column = column


# --------- analysis (exit 3) ----------
class AnalysisError(CausalForgeError):
    kind = "analysis"


class ValidationError(AnalysisError):
    kind = "validation"


class ConflictError(AnalysisError):
    """A match or event no longer applies to the state it is used on."""

    kind = "conflict"


class DomainError(AnalysisError, ValueError):
    kind = "domain"


class UnreachableError(AnalysisError):
    kind = "unreachable"


class TransportInfeasibleError(AnalysisError):
    kind = "transport_infeasible"


class DegenerateGeometryError(AnalysisError):
    kind = "degenerate_geometry"


class FitError(AnalysisError):
    kind = "fit"

    def __init__(self, message: str, best: Optional[Dict[str, float]] = None, **details: Any):
        super().__init__(message, best=best, **details)
        self.best = best


# --------- budgets (exit 4) ----------
class BudgetExceeded(CausalForgeError):
    exit_code = EXIT_BUDGET
    kind = "budget"


__all__ = [
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_ANALYSIS",
    "EXIT_BUDGET",
    "CausalForgeError",
    "ConfigError",
    "InputError",
    "RuleSyntaxError",
    "AnalysisError",
    "ValidationError",
    "ConflictError",
    "DomainError",
    "UnreachableError",
    "TransportInfeasibleError",
    "DegenerateGeometryError",
    "FitError",
    "BudgetExceeded",
]
