"""Exception hierarchy shared by every module."""

from __future__ import annotations


class BlochOpError(Exception):
    """Base class; the CLI maps every subclass to exit code 3."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class PointOutsideDomain(BlochOpError):
    code = "point_outside_domain"


class BoundaryClamp(BlochOpError):
    code = "boundary_clamp"


class ExprSyntaxError(BlochOpError):
    code = "syntax_error"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["position"] = self.position
        return d


class UnknownIdentifier(BlochOpError):
    code = "unknown_identifier"

    def __init__(self, name: str):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name


class ArityError(BlochOpError):
    code = "arity_error"


class SingularityError(BlochOpError):
    code = "singularity"

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class NonpositiveWeight(BlochOpError):
    code = "nonpositive_weight"


class DomainMismatch(BlochOpError):
    code = "domain_mismatch"


class SelfMapViolation(BlochOpError):
    code = "self_map_violation"


class SearchBudgetExceeded(BlochOpError):
    code = "search_budget_exceeded"

    def __init__(self, message: str, best_value: float = float("nan"), best_point=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_point = best_point
