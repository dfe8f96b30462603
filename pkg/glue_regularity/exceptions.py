"""Custom exceptions for GLUE scheme analysis"""

from typing import Optional

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_DOMAIN = 2
EXIT_INCONCLUSIVE = 3


class GlueError(Exception):
    """Base exception for all analysis operations"""

    def __init__(self, exit_code: int = EXIT_FAILURE, detail: str = "Analysis error"):
        super().__init__(detail)
        self.exit_code = exit_code
        self.detail = detail


class DomainError(GlueError):
    """Raised when an operation is called outside its domain"""
    def __init__(self, detail: str = "Domain error"):
        super().__init__(exit_code=EXIT_DOMAIN, detail=detail)


class ChainFormatError(DomainError):
    """Raised when a chain file cannot be parsed"""
    def __init__(self, detail: str = "Malformed chain", index: Optional[int] = None):
        if index is not None:
            detail = f"{detail} (point {index})"
        super().__init__(detail=detail)
        self.index = index


class DegenerateChainError(DomainError):
    """Raised when a chain has a constant linear component"""
    def __init__(self, detail: str = "Chain has constant linear component"):
        super().__init__(detail=detail)


class SchemeEvaluationError(DomainError):
    """Raised when a subdivision rule cannot be evaluated on concrete data"""
    def __init__(self, detail: str = "Rule evaluation failed", index: Optional[int] = None):
        if index is not None:
            detail = f"{detail} at output point {index}"
        super().__init__(detail=detail)
        self.index = index


class DifferenceSchemeError(DomainError):
    """Raised when a difference scheme of the requested order does not exist"""
    def __init__(self, order: int, residual: float):
        super().__init__(
            detail=(
                f"difference scheme of order {order} does not exist "
                f"(residual {residual:.3e})"
            )
        )
        self.order = order
        self.residual = residual


class StructureViolationError(DomainError):
    """Raised when the derivative at the standard chain lacks the diagonal form"""
    def __init__(self, detail: str = "Derivative structure violated"):
        super().__init__(detail=detail)


class CertificateMismatchError(DomainError):
    """Raised when a certificate does not belong to the scheme or chain"""
    def __init__(self, detail: str = "Certificate does not match"):
        super().__init__(detail=detail)


class InconclusiveError(GlueError):
    """Raised when a bound could not be certified within the budget"""
    def __init__(self, detail: str = "Inconclusive", best_bound: Optional[float] = None):
        if best_bound is not None:
            detail = f"{detail} (best bound {best_bound:.6g})"
        super().__init__(exit_code=EXIT_INCONCLUSIVE, detail=detail)
        self.best_bound = best_bound


class UndecidableBoxError(GlueError):
    """Raised by interval operations that cannot be certified on a box"""
    def __init__(self, detail: str = "Box undecidable"):
        super().__init__(exit_code=EXIT_INCONCLUSIVE, detail=detail)
