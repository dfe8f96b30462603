"""
GLUE subdivision schemes: geometric, local, uniform and equilinear.

A scheme refines a chain by ``p'_{2i+lam} = g_lam(p_i, ..., p_{i+m})``. Rules
are written against generic scalars (float, ``Interval`` or ``Dual``) and
points are plain sequences of such scalars, so the same rule serves plain,
interval and derivative evaluation.
"""

import itertools
import logging
from abc import ABC, abstractmethod
from typing import Any, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .chain import Chain, as_chain, standard_chain, windows
from .exceptions import DomainError, SchemeEvaluationError
from .intervals import cross, norm, sign, sqr, sqrt

logger = logging.getLogger(__name__)

Point = List[Any]
IndexVector = Tuple[int, ...]

# Failures of plain float rules that mean "not evaluable at this chain"
RULE_ERRORS = (ZeroDivisionError, ValueError, OverflowError, ArithmeticError)

MAX_DEPTH = 20


def _sub(a: Sequence[Any], b: Sequence[Any]) -> Point:
    return [x - y for x, y in zip(a, b)]


def combine(weights: Sequence[float], points: Sequence[Sequence[Any]]) -> Point:
    """Affine combination ``sum_j w_j p_j`` of generic points"""
    out = []
    for c in range(len(points[0])):
        acc = None
        for w, p in zip(weights, points):
            if w == 0:
                continue
            term = p[c] * w
            acc = term if acc is None else acc + term
        out.append(acc if acc is not None else points[0][c] * 0.0)
    return out


def index_vectors(depth: int) -> Iterator[IndexVector]:
    """All index vectors of the given length, first step first"""
    if not 1 <= depth <= MAX_DEPTH:
        raise DomainError(f"index vector length must be in 1..{MAX_DEPTH}")
    return itertools.product((0, 1), repeat=depth)


class GlueScheme(ABC):
    """
    Base class for binary subdivision schemes with two rules on m+1 points.

    Attributes:
        name: Registry id of the scheme
        m: Half-width; rules read m+1 consecutive points
        tau: Shift of the equilinear property, in [0, 1)
        nu: Regularity parameter of the nonlinear remainder, in (0, 1]
        dim: Fixed point dimension, or None when any dimension works
    """

    def __init__(self, name: str, m: int, tau: float, nu: float = 1.0,
                 dim: Optional[int] = None):
        if m < 1:
            raise DomainError("half-width m must be at least 1")
        if not 0.0 <= tau < 1.0:
            raise DomainError(f"shift tau must lie in [0, 1), got {tau}")
        if not 0.0 < nu <= 1.0:
            raise DomainError(f"regularity parameter nu must lie in (0, 1], got {nu}")
        self.name = name
        self.m = m
        self.tau = float(tau)
        self.nu = float(nu)
        self.dim = dim

    @property
    def n(self) -> int:
        """Spread: length of the windows all analysis runs on"""
        return 2 * self.m + 1

    def default_dim(self) -> int:
        return self.dim if self.dim is not None else 2

    def check_dim(self, dim: int) -> None:
        if self.dim is not None and dim != self.dim:
            raise DomainError(f"scheme {self.name} works in dimension {self.dim}, not {dim}")

    @abstractmethod
    def rule(self, lam: int, points: Sequence[Sequence[Any]]) -> Point:
        """Evaluate g_lam on m+1 generic points"""

    def map_window(self, lam: int, window: Sequence[Sequence[Any]]) -> List[Point]:
        """The self-map g_lam on a window of n generic points"""
        out = []
        for r in range(self.n):
            j = r + lam
            start = j // 2
            out.append(self.rule(j % 2, window[start : start + self.m + 1]))
        return out

    def subdivide(self, P: Chain) -> Chain:
        """One round of refinement; the result has 2N - n + 1 points"""
        P = as_chain(P)
        self.check_dim(P.shape[1])
        if len(P) < self.n:
            raise DomainError(f"chain of length {len(P)} is shorter than spread {self.n}")
        points = P.tolist()
        out = []
        for i in range(len(P) - self.m):
            window = points[i : i + self.m + 1]
            for lam in (0, 1):
                try:
                    out.append(self.rule(lam, window))
                except RULE_ERRORS as exc:
                    raise SchemeEvaluationError(
                        f"{self.name}: {exc}", index=2 * i + lam
                    ) from exc
        return np.array(out, dtype=float)

    def validate(self, tolerance: float = 1e-10) -> "GlueScheme":
        """Check the equilinear property and that constants are fixed"""
        dim = self.default_dim()
        e = standard_chain(self.n, dim)
        expected = standard_chain(self.n + 1, dim)
        expected[:, 0] += self.m + self.tau
        expected /= 2
        deviation = float(np.max(np.abs(self.subdivide(e) - expected)))
        if deviation > tolerance:
            raise DomainError(
                f"scheme {self.name} is not equilinear (deviation {deviation:.2e})"
            )
        constant = [0.375 * (c + 1) - 1.0 for c in range(dim)]
        for lam in (0, 1):
            try:
                image = self.rule(lam, [constant] * (self.m + 1))
            except RULE_ERRORS:
                # rules normalizing by point distances are undefined there
                logger.debug("%s: g_%d undefined on constant chains", self.name, lam)
                continue
            if max(abs(x - y) for x, y in zip(image, constant)) > 1e-12:
                raise DomainError(f"scheme {self.name} does not fix constant chains")
        return self

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, n={self.n}, tau={self.tau})"


class LinearScheme(GlueScheme):
    """Scheme whose rules are fixed affine combinations of the m+1 points"""

    def __init__(self, name: str, m: int, tau: float, a0: Sequence[float],
                 a1: Sequence[float], nu: float = 1.0):
        super().__init__(name, m, tau, nu)
        weights = np.array([a0, a1], dtype=float)
        if weights.shape != (2, m + 1):
            raise DomainError(f"mask rows need {m + 1} weights each")
        sums = weights.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > 1e-12:
            raise DomainError(f"mask rows must sum to 1, got {sums.tolist()}")
        weights.setflags(write=False)
        self.weights = weights

    def rule(self, lam: int, points: Sequence[Sequence[Any]]) -> Point:
        return combine(self.weights[lam].tolist(), points)

    def subdivide(self, P: Chain) -> Chain:
        P = as_chain(P)
        if len(P) < self.n:
            raise DomainError(f"chain of length {len(P)} is shorter than spread {self.n}")
        W = windows(P, self.m + 1)
        out = np.empty((2 * len(W), P.shape[1]))
        out[0::2] = np.einsum("j,kjd->kd", self.weights[0], W)
        out[1::2] = np.einsum("j,kjd->kd", self.weights[1], W)
        return out

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """The n x n matrices A_0, A_1 with T_{2i+lam} A P = A_lam T_i P"""
        mats = []
        for lam in (0, 1):
            A = np.zeros((self.n, self.n))
            for r in range(self.n):
                j = r + lam
                A[r, j // 2 : j // 2 + self.m + 1] = self.weights[j % 2]
            mats.append(A)
        return mats[0], mats[1]


class CirclePreservingScheme(GlueScheme):
    """
    Planar interpolating four-point scheme that reproduces circles.

    The new point between B and C lies on the circle through B and C whose
    signed curvature is the mean of those of the circles ABC and BCD, at the
    position where ``|BX| / |CX| = sqrt(|AC| / |BD|)``.
    """

    def __init__(self):
        super().__init__("cps2d", m=3, tau=0.0, nu=1.0, dim=2)

    def rule(self, lam: int, points: Sequence[Sequence[Any]]) -> Point:
        if lam == 0:
            return list(points[1])
        return circle_insert(*points)


def circle_insert(a: Sequence[Any], b: Sequence[Any], c: Sequence[Any],
                  d: Sequence[Any]) -> Point:
    """Point inserted between ``b`` and ``c`` by the circle-preserving rule"""
    ab, bc, cd = _sub(b, a), _sub(c, b), _sub(d, c)
    if sign(norm(bc)) == 0:
        raise ZeroDivisionError("coincident points b and c")
    ac, bd = _sub(c, a), _sub(d, b)
    # mean signed curvature times |bc|
    bend = cross(ab, bc) / (norm(ab) * norm(ac)) + cross(bc, cd) / (norm(cd) * norm(bd))
    cosine = sqrt(1.0 - sqr(bend * 0.5))
    ratio2 = norm(ac) / norm(bd)
    ratio = sqrt(ratio2)
    den = 1.0 + ratio * cosine * 2.0 + ratio2
    along = (ratio2 - 1.0) / (den * 2.0)
    across = ratio * bend / (den * 2.0)
    return [
        (b[0] + c[0]) * 0.5 + bc[0] * along + bc[1] * across,
        (b[1] + c[1]) * 0.5 + bc[1] * along - bc[0] * across,
    ]


class SpoilerScheme(GlueScheme):
    """
    Perturbed quartic B-spline scheme that is locally linear but nonsmooth.

    The even rule adds ``(|D2| / |c - a|) D2`` with D2 the second difference of
    the three input points.
    """

    def __init__(self):
        super().__init__("spoiler", m=2, tau=0.5, nu=1.0)

    def rule(self, lam: int, points: Sequence[Sequence[Any]]) -> Point:
        if lam == 1:
            return combine((1 / 16, 10 / 16, 5 / 16), points)
        a, b, c = points
        second = [x - y * 2.0 + z for x, y, z in zip(a, b, c)]
        base = combine((5 / 16, 10 / 16, 1 / 16), points)
        weight = norm(second) / norm(_sub(c, a))
        return [x + s * weight for x, s in zip(base, second)]


def chaikin() -> LinearScheme:
    return LinearScheme("chaikin", m=1, tau=0.5, a0=(0.75, 0.25), a1=(0.25, 0.75))


def four_point() -> LinearScheme:
    """The interpolating four-point scheme"""
    return LinearScheme(
        "fps", m=3, tau=0.0,
        a0=(0.0, 1.0, 0.0, 0.0),
        a1=(-1 / 16, 9 / 16, 9 / 16, -1 / 16),
    )


def bspline_tau(tau: float) -> LinearScheme:
    """
    Linear schemes of spread 5 with shift tau.

    tau = 0 is cubic and tau = 1/2 quartic B-spline subdivision.
    """
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"shift tau must lie in [0, 1), got {tau}")
    return LinearScheme(
        f"bspline_tau:{float(tau)!r}", m=2, tau=tau,
        a0=((4 - 3 * tau) / 8, (4 + 2 * tau) / 8, tau / 8),
        a1=((1 - tau) / 8, (6 - 2 * tau) / 8, (1 + 3 * tau) / 8),
    )


BUILTINS = ("chaikin", "fps", "cps2d", "bspline_tau", "spoiler")


def builtin(name: str, tau: Optional[float] = None) -> GlueScheme:
    """
    Construct and validate a built-in scheme.

    Args:
        name: One of ``chaikin``, ``fps``, ``cps2d``, ``bspline_tau``, ``spoiler``
        tau: Shift, required by ``bspline_tau`` only

    Raises:
        DomainError: unknown name or shift out of range
    """
    if name == "bspline_tau":
        scheme: GlueScheme = bspline_tau(0.0 if tau is None else tau)
    elif tau is not None:
        raise DomainError(f"scheme {name} takes no shift parameter")
    elif name == "chaikin":
        scheme = chaikin()
    elif name == "fps":
        scheme = four_point()
    elif name == "cps2d":
        scheme = CirclePreservingScheme()
    elif name == "spoiler":
        scheme = SpoilerScheme()
    else:
        raise DomainError(f"unknown scheme {name!r}; choose from {', '.join(BUILTINS)}")
    return scheme.validate()


def subdivide(scheme: GlueScheme, P: Chain) -> Chain:
    """One round of refinement of ``P``"""
    return scheme.subdivide(P)


def iterate(scheme: GlueScheme, P: Chain, rounds: int) -> Chain:
    """
    Apply ``rounds`` rounds of refinement.

    The result has ``2**rounds * (N - n + 1) + n - 1`` points.
    """
    if rounds < 0:
        raise DomainError("number of rounds must be non-negative")
    P = as_chain(P)
    for level in range(rounds):
        P = scheme.subdivide(P)
        logger.debug("%s round %d: %d points", scheme.name, level + 1, len(P))
    return P


def _check_window(scheme: GlueScheme, p: Chain) -> Chain:
    p = as_chain(p)
    if len(p) != scheme.n:
        raise DomainError(f"window must have {scheme.n} points, got {len(p)}")
    scheme.check_dim(p.shape[1])
    return p


def window_map(scheme: GlueScheme, lam: int, p: Chain) -> Chain:
    """The self-map g_lam on a window of n points"""
    return compose_windows(scheme, (lam,), p)


def compose_windows(scheme: GlueScheme, Lambda: Sequence[int], p: Chain) -> Chain:
    """g_Lambda = g_{lam_l} o ... o g_{lam_1}, applying ``Lambda[0]`` first"""
    if len(Lambda) < 1:
        raise DomainError("index vector must not be empty")
    window = _check_window(scheme, p).tolist()
    for lam in Lambda:
        if lam not in (0, 1):
            raise DomainError(f"index vector entries must be 0 or 1, got {lam}")
        try:
            window = scheme.map_window(lam, window)
        except RULE_ERRORS as exc:
            raise SchemeEvaluationError(f"{scheme.name}: {exc}") from exc
    return np.array(window, dtype=float)
