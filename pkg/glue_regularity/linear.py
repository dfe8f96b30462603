"""
Linear scheme machinery: difference schemes, joint spectral radius bounds,
Hoelder exponents and basic limit functions.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import DifferenceSchemeError, DomainError
from .limits import Generator
from .schemes import LinearScheme, MAX_DEPTH

logger = logging.getLogger(__name__)

MatrixPair = Tuple[np.ndarray, np.ndarray]

RESIDUAL_TOL = 1e-10

# exponents within roundoff of zero do not count as positive
EXPONENT_TOL = 1e-9

# products deeper than this are enumerated head by head
_VECTORIZED_DEPTH = 10


def _as_pair(source: Union[LinearScheme, Sequence[np.ndarray]]) -> MatrixPair:
    if isinstance(source, LinearScheme):
        return source.matrices()
    mats = [np.atleast_2d(np.asarray(M, dtype=float)) for M in source]
    if len(mats) != 2 or mats[0].shape != mats[1].shape:
        raise DomainError("expected two square matrices of equal size")
    return mats[0], mats[1]


def difference_matrix(n: int, order: int) -> np.ndarray:
    """Matrix of the order-th forward difference on chains of length n"""
    return np.diff(np.eye(n), n=order, axis=0)


def difference_scheme(
    source: Union[LinearScheme, Sequence[np.ndarray]],
    order: int,
    tolerance: float = RESIDUAL_TOL,
) -> MatrixPair:
    """
    Matrices (A_{j,0}, A_{j,1}) with ``D_j A_lam = A_{j,lam} D_j``.

    Args:
        source: Linear scheme or its window matrices (A_0, A_1)
        order: Difference order j, ``0 <= j < n``
        tolerance: Largest accepted residual of the defining identity

    Raises:
        DifferenceSchemeError: no solution within tolerance
    """
    A0, A1 = _as_pair(source)
    n = A0.shape[0]
    if not 0 <= order < n:
        raise DomainError(f"difference order must lie in 0..{n - 1}")
    if order == 0:
        return A0.copy(), A1.copy()
    D = difference_matrix(n, order)
    result = []
    for A in (A0, A1):
        target = D @ A
        solution, *_ = np.linalg.lstsq(D.T, target.T, rcond=None)
        X = solution.T
        residual = float(np.max(np.abs(X @ D - target)))
        if residual > tolerance:
            raise DifferenceSchemeError(order, residual)
        result.append(X)
    return result[0], result[1]


def divided_difference_scheme(
    source: Union[LinearScheme, Sequence[np.ndarray]], order: int
) -> MatrixPair:
    """Difference scheme of the given order scaled by 2**order"""
    A0, A1 = difference_scheme(source, order)
    return A0 * 2.0**order, A1 * 2.0**order


def max_order(
    source: Union[LinearScheme, Sequence[np.ndarray]], tolerance: float = RESIDUAL_TOL
) -> int:
    """Largest order for which a difference scheme exists"""
    n = _as_pair(source)[0].shape[0]
    best = 0
    for order in range(1, n):
        try:
            difference_scheme(source, order, tolerance)
        except DifferenceSchemeError:
            break
        best = order
    return best


def _products(mats: MatrixPair, depth: int) -> np.ndarray:
    size = mats[0].shape[0]
    prods = np.eye(size)[None, ...]
    for _ in range(depth):
        prods = np.concatenate([np.matmul(M, prods) for M in mats])
    return prods


def jsr_upper(mats: Sequence[np.ndarray], depth: int) -> float:
    """
    Upper bound on the joint spectral radius: max over all products of length
    ``depth`` of the row-sum norm, to the power ``1/depth``.
    """
    pair = _as_pair(mats)
    if not 1 <= depth <= MAX_DEPTH:
        raise DomainError(f"product depth must lie in 1..{MAX_DEPTH}")
    tail_depth = min(depth, _VECTORIZED_DEPTH)
    tails = _products(pair, tail_depth)
    best = 0.0
    for head in itertools.product((0, 1), repeat=depth - tail_depth):
        H = np.eye(pair[0].shape[0])
        for lam in head:
            H = pair[lam] @ H
        norms = np.abs(np.matmul(tails, H)).sum(axis=2).max()
        best = max(best, float(norms))
    return best ** (1.0 / depth)


def jsr_table(mats: Sequence[np.ndarray], max_depth: int) -> List[float]:
    """``jsr_upper`` for every depth 1..max_depth"""
    return [jsr_upper(mats, depth) for depth in range(1, max_depth + 1)]


def hoelder_from_jsr(rho: float, order: int) -> float:
    """Exponent alpha with ``rho = 2**(-order - alpha)``"""
    if rho <= 0:
        return math.inf
    return -order - math.log2(rho)


@dataclass(frozen=True)
class OrderBound:
    """Best JSR bound of the difference scheme of order ``order + 1``"""

    order: int
    rho: float
    depth: int
    exponent: float

    @property
    def almost(self) -> bool:
        """Scheme is almost C^{order, alpha} with alpha = min(exponent, 1) > 0"""
        return self.exponent > EXPONENT_TOL


def linear_regularity(
    source: Union[LinearScheme, Sequence[np.ndarray]],
    max_depth: int = 8,
    tolerance: float = RESIDUAL_TOL,
) -> List[OrderBound]:
    """
    Hoelder bounds from difference schemes of order 2, 3, ...

    Every depth gives a valid upper bound on the joint spectral radius, so the
    smallest one is kept.
    """
    bounds = []
    top = max_order(source, tolerance)
    for diff_order in range(2, top + 1):
        table = jsr_table(difference_scheme(source, diff_order, tolerance), max_depth)
        depth = int(np.argmin(table)) + 1
        rho = table[depth - 1]
        exponent = hoelder_from_jsr(rho, diff_order - 1)
        logger.debug("difference order %d: rho <= %.6g at depth %d", diff_order, rho, depth)
        bounds.append(OrderBound(diff_order - 1, rho, depth, exponent))
    return bounds


def mask_coefficients(scheme: LinearScheme) -> dict:
    """Mask of the refinement equation: ``psi(x) = sum_s mask[s] psi(2x - s)``"""
    mask: dict = {}
    for lam in (0, 1):
        for j, weight in enumerate(scheme.weights[lam]):
            if weight != 0:
                mask[lam - 2 * j] = float(weight)
    return mask


def basic_function(scheme: LinearScheme, level: int = 10,
                   name: Optional[str] = None) -> Generator:
    """
    Refinable function of a linear scheme, tabulated on the dyadic grid of
    the given level and interpolated linearly in between.

    Values at integers come from the eigenvector of the refinement operator
    for eigenvalue 1 (normalized to sum 1); finer levels follow from the
    refinement equation, so tabulated values are exact up to roundoff.
    """
    if not 0 <= level <= MAX_DEPTH:
        raise DomainError(f"tabulation level must lie in 0..{MAX_DEPTH}")
    mask = mask_coefficients(scheme)
    lo, hi = -2 * scheme.m, 1
    nodes = np.arange(lo, hi + 1)
    T = np.zeros((len(nodes), len(nodes)))
    for a, i in enumerate(nodes):
        for b, k in enumerate(nodes):
            T[a, b] = mask.get(int(2 * i - k), 0.0)
    eigvals, eigvecs = np.linalg.eig(T)
    pick = int(np.argmin(np.abs(eigvals - 1.0)))
    if abs(eigvals[pick] - 1.0) > 1e-8:
        raise DomainError(f"scheme {scheme.name} has no refinable function")
    values = np.real(eigvecs[:, pick])
    values = values / values.sum()

    for L in range(1, level + 1):
        half = 2 ** (L - 1)
        grid = np.arange(lo * 2**L, hi * 2**L + 1)
        refined = np.zeros(len(grid))
        for s, weight in mask.items():
            idx = grid - s * half - lo * half
            valid = (idx >= 0) & (idx < len(values))
            refined[valid] += weight * values[idx[valid]]
        values = refined

    xs = np.arange(lo * 2**level, hi * 2**level + 1) / 2.0**level
    return Generator.tabulated(xs, values, name=name or f"basic:{scheme.name}")
