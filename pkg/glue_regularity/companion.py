"""
Derivatives of GLUE schemes at the standard chain.

The derivative of ``g_lam`` at ``e`` acts on the first coordinate of a
perturbation through a tangential matrix A_lam and on every other coordinate
through a normal matrix B_lam. A scheme with ``A = B`` is locally linear and
the linear scheme A is its linear companion.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .chain import Chain, as_chain, kappa_chain, seminorm, standard_chain
from .config import Tolerances
from .exceptions import DomainError, SchemeEvaluationError, StructureViolationError
from .linear import OrderBound, difference_scheme, jsr_table, linear_regularity, max_order
from .models import Certificate, CompanionReport, Justification, Verdict, VerdictLevel
from .rigor import jacobian_of, seed_identity
from .schemes import RULE_ERRORS, GlueScheme, LinearScheme, bspline_tau, chaikin, four_point

logger = logging.getLogger(__name__)

STRUCTURE_TOL = Tolerances().structure

COMPANION_NAMES = {
    "chaikin": "Chaikin corner cutting",
    "fps": "four-point",
    "bspline_tau:0.0": "cubic B-spline",
    "bspline_tau:0.5": "quartic B-spline",
}

Pair = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class DerivativePair:
    """Tangential (A) and normal (B) derivative matrices of both window maps at e"""

    A0: np.ndarray
    A1: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    locally_linear: bool
    deviation: float
    dim: int

    @property
    def A(self) -> Pair:
        return self.A0, self.A1

    @property
    def B(self) -> Pair:
        return self.B0, self.B1


def _jacobian_at_e(scheme: GlueScheme, lam: int, dim: int) -> np.ndarray:
    seeded = seed_identity(standard_chain(scheme.n, dim).tolist())
    try:
        image = scheme.map_window(lam, seeded)
    except RULE_ERRORS as exc:
        raise SchemeEvaluationError(f"{scheme.name}: derivative at e: {exc}") from exc
    return jacobian_of(image).lo


def tangent_normal(scheme: GlueScheme, dim: Optional[int] = None,
                   tolerance: float = STRUCTURE_TOL) -> DerivativePair:
    """
    Split the derivative of the window maps at e into tangential and normal parts.

    Raises:
        StructureViolationError: coordinates are coupled, or the normal
            coordinates are treated differently, beyond ``tolerance``
    """
    dim = dim or scheme.default_dim()
    scheme.check_dim(dim)
    n = scheme.n
    tangential, normal = [], []
    for lam in (0, 1):
        L = _jacobian_at_e(scheme, lam, dim).reshape(n, dim, n, dim)
        for c in range(dim):
            for c2 in range(dim):
                if c != c2 and np.max(np.abs(L[:, c, :, c2])) > tolerance:
                    raise StructureViolationError(
                        f"{scheme.name}: derivative couples coordinates {c2} and {c} "
                        f"in g_{lam}"
                    )
        for c in range(2, dim):
            if np.max(np.abs(L[:, c, :, c] - L[:, 1, :, 1])) > tolerance:
                raise StructureViolationError(
                    f"{scheme.name}: normal coordinates {c} and 1 differ in g_{lam}"
                )
        tangential.append(L[:, 0, :, 0].copy())
        normal.append(L[:, 1, :, 1].copy() if dim > 1 else L[:, 0, :, 0].copy())
    deviation = max(float(np.max(np.abs(a - b))) for a, b in zip(tangential, normal))
    logger.debug("%s: |A - B| = %.3e", scheme.name, deviation)
    return DerivativePair(
        tangential[0], tangential[1], normal[0], normal[1],
        locally_linear=deviation <= tolerance, deviation=deviation, dim=dim,
    )


def companion_scheme(scheme: GlueScheme, pair: Optional[DerivativePair] = None) -> LinearScheme:
    """The linear scheme with the tangential matrices of ``scheme``"""
    pair = pair or tangent_normal(scheme)
    A0 = pair.A0
    m = scheme.m
    return LinearScheme(
        f"companion:{scheme.name}", m=m, tau=scheme.tau,
        a0=A0[0, : m + 1].tolist(), a1=A0[1, : m + 1].tolist(), nu=scheme.nu,
    )


def identify_companion(matrices: Pair, tolerance: float = STRUCTURE_TOL) -> Optional[str]:
    """Name of the built-in linear scheme with these window matrices, if any"""
    n = matrices[0].shape[0]
    candidates: List[LinearScheme] = [chaikin(), four_point()]
    if n == 5:
        tau = 8.0 * float(matrices[0][0, 2])
        if 0.0 <= tau < 1.0:
            candidates.append(bspline_tau(round(tau, 12)))
    for candidate in candidates:
        if candidate.n != n:
            continue
        own = candidate.matrices()
        if all(np.max(np.abs(a - b)) <= tolerance for a, b in zip(own, matrices)):
            return candidate.name
    return None


def describe(name: Optional[str]) -> str:
    if name is None:
        return "no built-in companion"
    return COMPANION_NAMES.get(name, name)


def _almost_exponent(bounds: List[OrderBound], order: int) -> Optional[float]:
    """Exponent alpha in (0, 1] with the scheme almost C^{order, alpha}, if certified"""
    for bound in bounds:
        if bound.order > order and bound.almost:
            return 1.0
    for bound in bounds:
        if bound.order == order and bound.almost:
            return min(bound.exponent, 1.0)
    return None


def _bound_evidence(label: str, bounds: List[OrderBound]) -> List[Justification]:
    return [
        Justification(
            name=f"rho({label}_{b.order + 1})",
            value=b.rho,
            theorem="linear scheme is almost C^{k,alpha} when the joint spectral radius "
                    "of its (k+1)-th difference scheme is at most 2^(-k-alpha)",
            detail=f"depth {b.depth}: exponent {b.exponent:.6g} for order {b.order}",
        )
        for b in bounds
    ]


def regularity_verdict(
    scheme: GlueScheme,
    cert: Optional[Certificate] = None,
    pair: Optional[DerivativePair] = None,
    depth: int = 8,
    tolerances: Optional[Tolerances] = None,
) -> Verdict:
    """
    Compose the regularity verdict from the derivative schemes and a certificate.

    Locally linear schemes whose companion is almost C^{2,alpha} are reported
    almost C^{2,beta} with ``beta = min(alpha, nu)``. Otherwise the stronger
    of the certificate's C^{1,alpha} and the almost C^{1,alpha} shared by A
    and B is reported. Verdicts that still need a straightening certificate
    for the chain are flagged ``conditional``.
    """
    from . import __version__

    tolerances = tolerances or Tolerances()
    pair = pair or tangent_normal(scheme, tolerance=tolerances.structure)
    bounds_A = linear_regularity(pair.A, max_depth=depth, tolerance=tolerances.difference)
    evidence = _bound_evidence("A", bounds_A)
    evidence.append(Justification(
        name="|A - B|", value=pair.deviation, theorem="locally linear when A equals B",
        detail="locally linear" if pair.locally_linear else "not locally linear",
    ))
    conditional = cert is None
    if cert is not None:
        evidence.append(Justification(
            name="alpha", value=cert.alpha,
            theorem="straightening at rate alpha implies a C^{1,alpha} limit curve",
            detail=f"certificate: Gamma_{cert.ell}[{cert.delta:g}] <= {cert.gamma_bound:.6g}",
        ))

    if pair.locally_linear:
        second = _almost_exponent(bounds_A, 2)
        if second is not None:
            beta = min(second, scheme.nu)
            evidence.append(Justification(
                name="beta", value=beta,
                theorem="locally linear scheme with almost C^{2,alpha} companion is "
                        "almost C^{2,beta}, beta = min(alpha, nu)",
                detail=f"alpha = {second:.6g}, nu = {scheme.nu:g}",
            ))
            return Verdict(scheme=scheme.name, level=VerdictLevel.ALMOST_C2, exponent=beta,
                           almost=True, conditional=conditional, justification=evidence,
                           version=__version__)

    candidates = []
    first_A = _almost_exponent(bounds_A, 1)
    if pair.locally_linear:
        first = first_A
    else:
        bounds_B = linear_regularity(pair.B, max_depth=depth, tolerance=tolerances.difference)
        evidence.extend(_bound_evidence("B", bounds_B))
        first_B = _almost_exponent(bounds_B, 1)
        first = None if first_A is None or first_B is None else min(first_A, first_B)
    if first is not None:
        evidence.append(Justification(
            name="alpha_AB", value=first,
            theorem="G is almost C^{1,alpha} when both derivative schemes are",
        ))
        candidates.append((first, True))
    if cert is not None:
        candidates.append((cert.alpha, False))
    if not candidates:
        return Verdict(scheme=scheme.name, conditional=conditional, justification=evidence,
                       version=__version__)
    exponent, almost = max(candidates, key=lambda item: (item[0], not item[1]))
    return Verdict(
        scheme=scheme.name,
        level=VerdictLevel.C1_ALPHA,
        exponent=exponent,
        almost=almost,
        conditional=conditional and almost,
        justification=evidence,
        version=__version__,
    )


def remainder_ratio(scheme: GlueScheme, A: LinearScheme, P: Chain) -> float:
    """
    ``|G P - A P|_0 / (kappa(P)**nu * |P|_2)``, which stays bounded as P
    approaches a linear chain when A is the linear companion of G.
    """
    P = as_chain(P)
    if A.n != scheme.n:
        raise DomainError("companion must have the spread of the scheme")
    curvature = seminorm(P, 2)
    if curvature == 0:
        return 0.0
    distortion = kappa_chain(P, scheme.n)
    if not math.isfinite(distortion):
        raise DomainError("relative distortion of the chain is infinite")
    remainder = scheme.subdivide(P) - A.subdivide(P)
    size = float(np.max(np.linalg.norm(remainder, axis=1)))
    return size / (distortion**scheme.nu * curvature)


def jsr_report(pair: DerivativePair, max_depth: int = 8,
               tolerance: float = Tolerances().difference) -> Dict[str, List[float]]:
    """Joint spectral radius bounds of the order-2 and order-3 difference schemes"""
    report: Dict[str, List[float]] = {}
    for label, mats in (("A", pair.A), ("B", pair.B)):
        top = max_order(mats, tolerance)
        for order in (2, 3):
            if order <= top:
                table = jsr_table(difference_scheme(mats, order, tolerance), max_depth)
                report[f"{label}{order}"] = table
    return report


def companion_report(scheme: GlueScheme, cert: Optional[Certificate] = None,
                     depth: int = 8, dim: Optional[int] = None,
                     tolerances: Optional[Tolerances] = None) -> CompanionReport:
    from . import __version__

    tolerances = tolerances or Tolerances()
    pair = tangent_normal(scheme, dim=dim, tolerance=tolerances.structure)
    return CompanionReport(
        scheme=scheme.name,
        dim=pair.dim,
        locally_linear=pair.locally_linear,
        deviation=pair.deviation,
        companion=identify_companion(pair.A, tolerances.structure) if pair.locally_linear else None,
        A0=pair.A0.tolist(),
        A1=pair.A1.tolist(),
        B0=pair.B0.tolist(),
        B1=pair.B1.tolist(),
        jsr=jsr_report(pair, depth, tolerances.difference),
        verdict=regularity_verdict(scheme, cert, pair, depth, tolerances),
        version=__version__,
    )
