"""
Chains of points in R^d: differences, seminorms, projection onto linear
chains, relative distortion, similarities and normalization.

A chain is a float array of shape ``(N, d)``; row ``i`` is the point p_i.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import ValidationError

from .exceptions import ChainFormatError, DegenerateChainError, DomainError
from .models import ChainFile
from .utils import dumps, model_to_dict, model_validate, read_json

logger = logging.getLogger(__name__)

Chain = np.ndarray

# |dPi p| below this (relative to 1 + |p|_0) counts as a constant linear part
DEGENERACY_TOL = 1e-14
ORTHOGONALITY_TOL = 1e-12


def as_chain(points: Any, dim: Optional[int] = None) -> Chain:
    """
    Validate and convert array-like data into an ``(N, d)`` float chain.

    One-dimensional input is read as N points in R^1.

    Raises:
        ChainFormatError: ragged or non-finite data
        DomainError: empty chain or dimension mismatch
    """
    try:
        arr = np.array(points, dtype=float)
    except (TypeError, ValueError):
        raise ChainFormatError("points must form a rectangular array of numbers")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DomainError("a chain needs at least one point of dimension >= 1")
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        raise ChainFormatError("non-finite coordinate", index=int(bad[0][0]))
    if dim is not None and arr.shape[1] != dim:
        raise DomainError(f"expected points in dimension {dim}, got {arr.shape[1]}")
    return arr


def standard_chain(count: int, dim: int = 1) -> Chain:
    """The equispaced chain [e; 2e; ...; count*e] with e the first unit vector"""
    if count < 1 or dim < 1:
        raise DomainError("standard chain needs count >= 1 and dim >= 1")
    chain = np.zeros((count, dim))
    chain[:, 0] = np.arange(1, count + 1)
    return chain


def truncate(P: Chain, n: int, i: int) -> Chain:
    """The window of ``n`` consecutive points starting at index ``i``"""
    if not 0 <= i <= len(P) - n:
        raise DomainError(f"window {i} of length {n} outside chain of length {len(P)}")
    return np.array(P[i : i + n])


def windows(P: Chain, n: int) -> np.ndarray:
    """All windows of length ``n`` as a read-only array of shape ``(N-n+1, n, d)``"""
    if n < 1 or len(P) < n:
        raise DomainError(f"chain of length {len(P)} has no windows of length {n}")
    return np.swapaxes(sliding_window_view(P, n, axis=0), 1, 2)


def diff(P: Chain, k: int) -> Chain:
    """k-th forward difference; ``diff(P, 0)`` is a copy of P"""
    P = as_chain(P)
    if not 0 <= k < len(P):
        raise DomainError(f"difference of order {k} needs more than {k} points")
    return np.diff(P, n=k, axis=0)


def seminorm(P: Chain, j: int) -> float:
    """|P|_j: largest Euclidean norm among the points of the j-th difference"""
    return float(np.max(np.linalg.norm(diff(P, j), axis=1)))


def inner_n(p: Chain, q: Chain) -> float:
    """Inner product on chains of equal shape: sum of pointwise dot products"""
    if p.shape != q.shape:
        raise DomainError("inner product needs chains of equal shape")
    return float(np.sum(p * q))


@lru_cache(maxsize=None)
def linear_basis(n: int) -> np.ndarray:
    """Orthonormal ``(n, 2)`` basis of the constant and ramp sequences"""
    if n < 3:
        raise DomainError("spread must be at least 3")
    vander = np.column_stack([np.ones(n), np.arange(n, dtype=float)])
    basis, _ = np.linalg.qr(vander)
    basis.setflags(write=False)
    return basis


@lru_cache(maxsize=None)
def slope_weights(n: int) -> np.ndarray:
    """Weights w with ``w @ p`` equal to the common difference of the projection"""
    offsets = np.arange(n, dtype=float) - (n - 1) / 2
    weights = offsets / np.sum(offsets**2)
    weights.setflags(write=False)
    return weights


def project_linear(p: Chain) -> Chain:
    """Orthogonal projection of a window onto the linear chains"""
    p = as_chain(p)
    n = len(p)
    basis = linear_basis(n)
    return basis @ (basis.T @ p)


def m_matrices(n: int, exact: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Matrices recovering a chain orthogonal to the linear chains from its differences.

    For every such d: ``d = M1 @ diff(d, 1)`` and ``diff(d, 1) = M2 @ diff(d, 2)``.

    Args:
        n: Spread, at least 3
        exact: Return object arrays of ``Fraction`` instead of floats

    Returns:
        ``(M1, M2)`` with shapes ``(n, n-1)`` and ``(n-1, n-2)``
    """
    if n < 3:
        raise DomainError("spread must be at least 3")

    def first(i: int, j: int) -> Fraction:
        c = Fraction(j + 1, n)
        return c - 1 if i <= j else c

    def second(i: int, j: int) -> Fraction:
        c = Fraction((j + 1) * (j + 2) * (2 * j + 3 - 3 * n), n * (1 + n) * (1 - n))
        return c - 1 if i <= j else c

    m1 = np.array([[first(i, j) for j in range(n - 1)] for i in range(n)], dtype=object)
    m2 = np.array(
        [[second(i, j) for j in range(n - 2)] for i in range(n - 1)], dtype=object
    )
    if exact:
        return m1, m2
    return m1.astype(float), m2.astype(float)


@lru_cache(maxsize=None)
def _k_matrix_exact(n: int) -> np.ndarray:
    m1, m2 = m_matrices(n, exact=True)
    return m1.dot(m2)


def k_matrix(n: int, exact: bool = False) -> np.ndarray:
    """K = M1 M2, the right inverse of the second difference on centred chains"""
    k = _k_matrix_exact(n)
    return k.copy() if exact else k.astype(float)


def window_kappas(W: np.ndarray, degeneracy: float = DEGENERACY_TOL) -> np.ndarray:
    """
    Relative distortion of every window in a stack of shape ``(count, n, d)``.

    Windows whose slope is below ``degeneracy * (1 + |p|_0)`` get infinity.
    """
    n = W.shape[1]
    if n < 3:
        raise DomainError("relative distortion needs windows of length >= 3")
    num = np.linalg.norm(np.diff(W, n=2, axis=1), axis=2).max(axis=1)
    den = np.linalg.norm(np.einsum("i,kid->kd", slope_weights(n), W), axis=1)
    scale = np.linalg.norm(W, axis=2).max(axis=1)
    degenerate = den < degeneracy * (1.0 + scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(degenerate, np.inf, num / np.where(degenerate, 1.0, den))


def kappa(p: Chain, degeneracy: float = DEGENERACY_TOL) -> float:
    """Relative distortion |p|_2 / |Pi p|_1 of a single window (inf if degenerate)"""
    p = as_chain(p)
    return float(window_kappas(p[None, ...], degeneracy)[0])


def kappa_chain(P: Chain, n: int, degeneracy: float = DEGENERACY_TOL) -> float:
    """Largest relative distortion over all windows of length ``n``"""
    if len(P) < n:
        raise DomainError(f"chain of length {len(P)} is shorter than spread {n}")
    return float(np.max(window_kappas(windows(as_chain(P), n), degeneracy)))


class Similarity:
    """
    Similarity transform acting on row-vector points as ``p -> scale * p @ Q + s``.

    Instances are immutable; the rotation is validated to be orthogonal.
    """

    __slots__ = ("_scale", "_rotation", "_shift")

    def __init__(self, scale: float, rotation: Any, shift: Any):
        rotation = np.atleast_2d(np.array(rotation, dtype=float))
        shift = np.array(shift, dtype=float).reshape(-1)
        dim = rotation.shape[0]
        if rotation.shape != (dim, dim) or shift.shape != (dim,):
            raise DomainError("similarity needs a square rotation and matching shift")
        if not (np.isfinite(scale) and scale > 0):
            raise DomainError("similarity scale must be positive")
        deviation = np.max(np.abs(rotation.T @ rotation - np.eye(dim)))
        if deviation > ORTHOGONALITY_TOL:
            raise DomainError(f"rotation is not orthogonal (deviation {deviation:.2e})")
        rotation.setflags(write=False)
        shift.setflags(write=False)
        self._scale = float(scale)
        self._rotation = rotation
        self._shift = shift

    @classmethod
    def identity(cls, dim: int) -> "Similarity":
        return cls(1.0, np.eye(dim), np.zeros(dim))

    @property
    def scale(self) -> float:
        return self._scale

    @property
    def rotation(self) -> np.ndarray:
        return self._rotation

    @property
    def shift(self) -> np.ndarray:
        return self._shift

    @property
    def dim(self) -> int:
        return self._rotation.shape[0]

    def __call__(self, P: Chain) -> Chain:
        return apply_similarity(self, P)

    def compose(self, inner: "Similarity") -> "Similarity":
        """The similarity ``self o inner``"""
        if inner.dim != self.dim:
            raise DomainError("cannot compose similarities of different dimension")
        return Similarity(
            self.scale * inner.scale,
            inner.rotation @ self.rotation,
            self.scale * inner.shift @ self.rotation + self.shift,
        )

    def inverse(self) -> "Similarity":
        back = self.rotation.T
        return Similarity(1.0 / self.scale, back, -(self.shift @ back) / self.scale)

    def __repr__(self) -> str:
        return f"Similarity(scale={self.scale!r}, dim={self.dim})"


def apply_similarity(S: Similarity, P: Chain) -> Chain:
    """Apply ``S`` to every point of ``P``"""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[1] != S.dim:
        raise DomainError(f"similarity of dimension {S.dim} applied to {P.shape} chain")
    return S.scale * (P @ S.rotation) + S.shift


def _reflector(direction: np.ndarray) -> np.ndarray:
    """Householder matrix mapping the unit row vector ``direction`` to e_1"""
    dim = direction.shape[0]
    w = direction.copy()
    w[0] -= 1.0
    norm2 = float(w @ w)
    if norm2 < 1e-30:
        return np.eye(dim)
    return np.eye(dim) - 2.0 * np.outer(w, w) / norm2


def normalize(p: Chain, degeneracy: float = DEGENERACY_TOL) -> Tuple[Chain, Similarity]:
    """
    Map a window by a similarity so that its linear part becomes the standard chain.

    Returns:
        ``(q, S)`` with ``q = S(p)`` and ``project_linear(q) == standard_chain(n, d)``

    Raises:
        DegenerateChainError: the linear part of ``p`` is constant
    """
    p = as_chain(p)
    n, dim = p.shape
    slope = slope_weights(n) @ p
    length = float(np.linalg.norm(slope))
    if length < degeneracy * (1.0 + float(np.max(np.linalg.norm(p, axis=1)))):
        raise DegenerateChainError()
    first = p.mean(axis=0) - (n - 1) / 2 * slope
    rotation = _reflector(slope / length)
    scale = 1.0 / length
    target = np.zeros(dim)
    target[0] = 1.0
    S = Similarity(scale, rotation, target - scale * (first @ rotation))
    return apply_similarity(S, p), S


def _error_index(exc: ValidationError) -> Optional[int]:
    for error in exc.errors():
        for part in error.get("loc", ()):
            if isinstance(part, int):
                return part
    return None


def chain_from_record(record: ChainFile) -> Chain:
    """Validate a parsed chain file against its declared dimension"""
    for i, point in enumerate(record.points):
        if len(point) != record.dim:
            raise ChainFormatError(
                f"expected {record.dim} coordinates, got {len(point)}", index=i
            )
    if not record.points:
        raise ChainFormatError("chain has no points")
    return as_chain(record.points, dim=record.dim)


def load_chain(path: Union[str, Path]) -> Chain:
    """Read a chain JSON file"""
    data = read_json(path)
    try:
        record = model_validate(ChainFile, data)
    except ValidationError as exc:
        raise ChainFormatError(f"{path}: malformed chain", index=_error_index(exc))
    chain = chain_from_record(record)
    logger.debug("loaded chain of %d points in R^%d from %s", *chain.shape, path)
    return chain


def save_chain(P: Chain, path: Union[str, Path, None] = None) -> str:
    """Serialize a chain to JSON text, writing it to ``path`` when given"""
    record = ChainFile(dim=int(P.shape[1]), points=np.asarray(P, dtype=float).tolist())
    text = dumps(model_to_dict(record))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
