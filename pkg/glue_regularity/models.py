"""Pydantic records exchanged through files: chains, masks, certificates, verdicts"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ChainFile(BaseModel):
    """On-disk chain: ``{"dim": d, "points": [[x, ...], ...]}``"""

    dim: int = Field(..., ge=1)
    points: List[List[float]]


class MaskFile(BaseModel):
    """On-disk linear scheme: half-width, shift and the two weight rows"""

    m: int = Field(..., ge=1)
    tau: float = Field(0.0, ge=0.0, lt=1.0)
    a0: List[float]
    a1: List[float]
    nu: float = Field(1.0, gt=0.0, le=1.0)
    name: Optional[str] = None


class Timing(BaseModel):
    """Wall-clock data kept apart from the deterministic payload"""

    created: str
    wall_time: float


class Certificate(BaseModel):
    """Certified straightening of all chains within relative distortion gamma"""

    scheme: str
    dim: int
    delta: float = Field(..., gt=0.0)
    gamma: float = Field(..., gt=0.0)
    ell: int = Field(..., ge=1)
    gamma_bound: float = Field(..., ge=0.0, lt=1.0)
    k: Optional[int] = None
    annulus_bound: Optional[float] = None
    alpha: float = Field(..., gt=0.0)
    boxes: int = 0
    unresolved_fraction: float = 0.0
    version: str = ""
    config: Dict[str, Any] = {}
    timing: Optional[Timing] = None


class Attempt(BaseModel):
    """One bound computation made while searching for a certificate"""

    kind: str
    depth: int
    delta: float
    gamma: Optional[float] = None
    bound: Optional[float] = None
    status: str
    boxes: int = 0


class InconclusiveReport(BaseModel):
    """Written instead of a certificate when the search runs out of budget"""

    scheme: str
    dim: int
    status: str = "inconclusive"
    best_bound: Optional[float] = None
    attempts: List[Attempt] = []
    version: str = ""
    config: Dict[str, Any] = {}
    timing: Optional[Timing] = None


class VerdictLevel:
    """Supported regularity levels, weakest first"""

    UNKNOWN = "unknown"
    CONVERGENT = "convergent"
    C1 = "C1"
    C1_ALPHA = "C1_alpha"
    ALMOST_C2 = "almost_C2"

    ORDER = [UNKNOWN, CONVERGENT, C1, C1_ALPHA, ALMOST_C2]

    @classmethod
    def rank(cls, level: str) -> int:
        return cls.ORDER.index(level)


class Justification(BaseModel):
    """A single inequality backing a verdict"""

    name: str
    value: Optional[float] = None
    theorem: str
    detail: Optional[str] = None


class Verdict(BaseModel):
    """Regularity conclusion for a scheme, optionally at a concrete chain"""

    scheme: str
    level: str = "unknown"
    exponent: Optional[float] = None
    almost: bool = False
    conditional: bool = False
    rounds: Optional[int] = None
    justification: List[Justification] = []
    version: str = ""
    config: Dict[str, Any] = {}


class CompanionReport(BaseModel):
    """Derivative schemes at the standard chain with their regularity bounds"""

    scheme: str
    dim: int
    locally_linear: bool
    deviation: float
    companion: Optional[str] = None
    A0: List[List[float]]
    A1: List[List[float]]
    B0: List[List[float]]
    B1: List[List[float]]
    jsr: Dict[str, List[float]] = {}
    verdict: Optional[Verdict] = None
    version: str = ""
