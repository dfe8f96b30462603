"""
glue_regularity - Smoothness certificates for GLUE subdivision schemes via relative distortion
"""

__version__ = "0.1.0"
__author__ = "Rishabh"

from .certify import (
    BoundResult,
    certify_rate,
    check_chain,
    distortion_sequence,
    gamma_annulus,
    gamma_star_delta,
    gamma_star_zero,
    rate_from_gamma,
)
from .chain import (
    Similarity,
    kappa,
    kappa_chain,
    load_chain,
    normalize,
    save_chain,
    standard_chain,
)
from .companion import DerivativePair, regularity_verdict, remainder_ratio, tangent_normal
from .config import RunConfig, load_config
from .exceptions import (
    CertificateMismatchError,
    DomainError,
    GlueError,
    InconclusiveError,
    SchemeEvaluationError,
    StructureViolationError,
)
from .intervals import Dual, Interval
from .limits import empirical_holder, empirical_kappa_decay, limit_samples
from .models import Certificate, InconclusiveReport, Verdict
from .registry import get_scheme
from .schemes import GlueScheme, LinearScheme, iterate, subdivide

__all__ = [
    "BoundResult",
    "Certificate",
    "CertificateMismatchError",
    "DerivativePair",
    "DomainError",
    "Dual",
    "GlueError",
    "GlueScheme",
    "InconclusiveError",
    "InconclusiveReport",
    "Interval",
    "LinearScheme",
    "RunConfig",
    "SchemeEvaluationError",
    "Similarity",
    "StructureViolationError",
    "Verdict",
    "certify_rate",
    "check_chain",
    "distortion_sequence",
    "empirical_holder",
    "empirical_kappa_decay",
    "gamma_annulus",
    "gamma_star_delta",
    "gamma_star_zero",
    "get_scheme",
    "iterate",
    "kappa",
    "kappa_chain",
    "limit_samples",
    "load_chain",
    "load_config",
    "normalize",
    "rate_from_gamma",
    "regularity_verdict",
    "remainder_ratio",
    "save_chain",
    "standard_chain",
    "subdivide",
    "tangent_normal",
]
