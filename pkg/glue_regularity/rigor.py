"""
Rigorous evaluation over boxes of second differences.

A window ``q = e + K u`` near the standard chain is parametrized by its second
difference ``u`` (shape ``(n-2, d)``); boxes of ``u`` are mapped to interval
chains, pushed through scheme windows with interval derivatives, and handled
by a deterministic branch-and-bound driver.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Generic, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .chain import k_matrix
from .exceptions import DomainError, UndecidableBoxError
from .intervals import Dual, Interval
from .schemes import RULE_ERRORS, GlueScheme, index_vectors

logger = logging.getLogger(__name__)

Window = List[List[Any]]
ResultT = TypeVar("ResultT")


@dataclass(frozen=True)
class UBox:
    """Axis-aligned box of second differences, shape ``(n-2, d)``"""

    lo: np.ndarray
    hi: np.ndarray
    depth: int = 0

    @classmethod
    def cube(cls, n: int, dim: int, radius: float) -> "UBox":
        if n < 3 or dim < 1 or radius < 0:
            raise DomainError("box needs n >= 3, dim >= 1 and a non-negative radius")
        edge = np.full((n - 2, dim), float(radius))
        return cls(-edge, edge.copy())

    @classmethod
    def point(cls, u: np.ndarray) -> "UBox":
        u = np.array(u, dtype=float)
        return cls(u, u.copy())

    @property
    def shape(self) -> Tuple[int, int]:
        return self.lo.shape  # type: ignore[return-value]

    @property
    def n(self) -> int:
        return self.lo.shape[0] + 2

    @property
    def dim(self) -> int:
        return self.lo.shape[1]

    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    def center(self) -> np.ndarray:
        return 0.5 * self.lo + 0.5 * self.hi

    def relative_volume(self) -> float:
        """Volume as a fraction of the root box"""
        return 2.0**-self.depth

    def as_interval(self) -> Interval:
        return Interval(self.lo.ravel(), self.hi.ravel())

    def norm_bounds(self) -> Tuple[float, float]:
        """Lower and upper bounds of ``max_i |u_i|`` over the box"""
        box = Interval(self.lo, self.hi)
        squares = box.sqr().sum(axis=1).sqrt()
        return float(np.max(squares.lo)), float(np.max(squares.hi))


def split(box: UBox) -> Tuple[UBox, UBox]:
    """Bisect the widest coordinate (first one on ties)"""
    flat = int(np.argmax(box.widths()))
    row, col = divmod(flat, box.dim)
    mid = 0.5 * box.lo[row, col] + 0.5 * box.hi[row, col]
    left_hi = box.hi.copy()
    left_hi[row, col] = mid
    right_lo = box.lo.copy()
    right_lo[row, col] = mid
    return (UBox(box.lo.copy(), left_hi, box.depth + 1),
            UBox(right_lo, box.hi.copy(), box.depth + 1))


def _enclose(value: Fraction) -> Tuple[float, float]:
    approx = float(value)
    if Fraction(approx) == value:
        return approx, approx
    return float(np.nextafter(approx, -np.inf)), float(np.nextafter(approx, np.inf))


@lru_cache(maxsize=None)
def k_enclosure(n: int) -> Interval:
    """Interval enclosure of the exact K = M1 M2"""
    exact = k_matrix(n, exact=True)
    lo = np.empty(exact.shape)
    hi = np.empty(exact.shape)
    for idx, value in np.ndenumerate(exact):
        lo[idx], hi[idx] = _enclose(value)
    return Interval(lo, hi)


def embed_u(box: UBox, n: Optional[int] = None, dim: Optional[int] = None) -> Window:
    """Interval chain ``e + K u`` enclosing every window whose second difference lies in the box"""
    n = n or box.n
    dim = dim or box.dim
    if box.shape != (n - 2, dim):
        raise DomainError(f"box of shape {box.shape} does not fit n={n}, d={dim}")
    K = k_enclosure(n)
    columns = [Interval(box.lo[:, c], box.hi[:, c]) for c in range(dim)]
    window = []
    for i in range(n):
        row = K[i]
        point = []
        for c in range(dim):
            value = (row * columns[c]).sum()
            point.append(value + float(i + 1) if c == 0 else value)
        window.append(point)
    return window


def embed_dual(box: UBox) -> List[List[Dual]]:
    """``embed_u`` with derivatives with respect to the flattened ``u``"""
    n, dim = box.n, box.dim
    size = (n - 2) * dim
    K = k_enclosure(n)
    values = embed_u(box)
    window = []
    for i in range(n):
        point = []
        for c in range(dim):
            lo = np.zeros(size)
            hi = np.zeros(size)
            lo[c::dim] = K.lo[i]
            hi[c::dim] = K.hi[i]
            point.append(Dual(values[i][c], Interval(lo, hi)))
        window.append(point)
    return window


def seed_identity(window: Sequence[Sequence[Any]]) -> List[List[Dual]]:
    """Attach identity derivatives (one direction per coordinate) to a window"""
    dim = len(window[0])
    size = len(window) * dim
    out = []
    for i, point in enumerate(window):
        row = []
        for c, value in enumerate(point):
            unit = np.zeros(size)
            unit[i * dim + c] = 1.0
            if isinstance(value, Interval):
                row.append(Dual(value, Interval(unit, unit)))
            else:
                row.append(Dual(value, unit))
        out.append(row)
    return out


def eval_with_jacobian(
    scheme: GlueScheme,
    Lambda: Sequence[int],
    q_box: Sequence[Sequence[Any]],
) -> Tuple[Window, Interval]:
    """
    Enclose ``g_Lambda(q)`` and its Jacobian for every q in an interval window.

    Plain ``Interval`` inputs are seeded with the identity; ``Dual`` inputs keep
    their own seeds, which yields the Jacobian with respect to those directions.

    Returns:
        ``(values, jacobian)`` with the Jacobian of shape ``(n*d, directions)``

    Raises:
        UndecidableBoxError: a rule cannot be certified on the box
    """
    if len(q_box) != scheme.n:
        raise DomainError(f"window must have {scheme.n} points")
    window: Window = [list(p) for p in q_box]
    if not isinstance(window[0][0], Dual):
        window = [[Interval.coerce(x) for x in p] for p in window]
        window = seed_identity(window)
    for lam in Lambda:
        window = map_window_checked(scheme, lam, window)
    values = [[x.value for x in p] for p in window]
    return values, jacobian_of(window)


def map_window_checked(scheme: GlueScheme, lam: int, window: Window) -> Window:
    """``scheme.map_window`` turning plain arithmetic failures into undecidable boxes"""
    try:
        return scheme.map_window(lam, window)
    except RULE_ERRORS as exc:
        raise UndecidableBoxError(f"{scheme.name}: {exc}") from exc


def jacobian_of(window: Sequence[Sequence[Dual]]) -> Interval:
    rows = [x.partials for p in window for x in p]
    if isinstance(rows[0], Interval):
        return Interval(np.array([r.lo for r in rows]), np.array([r.hi for r in rows]))
    rows_arr = np.array(rows)
    return Interval(rows_arr, rows_arr)


def window_tree(scheme: GlueScheme, window: Window, depth: int) -> List[Window]:
    """
    ``g_Lambda(window)`` for every index vector of the given length, in the
    order of ``index_vectors``; shared prefixes are evaluated once.
    """
    index_vectors(depth)  # validates depth
    out: List[Window] = []

    def walk(current: Window, remaining: int) -> None:
        if remaining == 0:
            out.append(current)
            return
        for lam in (0, 1):
            walk(map_window_checked(scheme, lam, current), remaining - 1)

    walk(window, depth)
    return out


def second_differences(window: Sequence[Sequence[Any]]) -> Window:
    return [
        [a - b * 2.0 + c for a, b, c in zip(window[i], window[i + 1], window[i + 2])]
        for i in range(len(window) - 2)
    ]


def slope(window: Sequence[Sequence[Any]]) -> List[Any]:
    """Common difference of the linear projection of a window"""
    n = len(window)
    if n % 2 == 0:
        raise DomainError("slope enclosure needs an odd spread")
    m = (n - 1) // 2
    total = m * (m + 1) * (2 * m + 1) // 3
    out = []
    for c in range(len(window[0])):
        acc = None
        for i in range(n):
            if i == m:
                continue
            term = window[i][c] * float(i - m)
            acc = term if acc is None else acc + term
        out.append(acc / float(total))
    return out


def mixed_norm_bound(magnitudes: np.ndarray, dim: int) -> float:
    """
    Upper bound on the operator norm, in the max-of-point-norms sense, of a
    matrix acting on ``(n-2, d)`` blocks, from entrywise magnitude bounds.

    Per output point the smaller of ``sqrt(d) * max row sum`` and
    ``sum_i sqrt(|B_i|_1 |B_i|_inf)`` over its d x d blocks is used.
    """
    rows, cols = magnitudes.shape
    points_out, points_in = rows // dim, cols // dim
    W = Interval(magnitudes, magnitudes).reshape(points_out, dim, points_in, dim)
    row_sums = Interval(W.lo.reshape(points_out, dim, cols),
                        W.hi.reshape(points_out, dim, cols)).sum(axis=2)
    first = (Interval(row_sums.hi.max(axis=1)) * Interval(float(dim)).sqrt()).hi
    col_norm = W.sum(axis=1)  # (out, in, d): column sums of each block
    row_norm = W.sum(axis=3)  # (out, d, in): row sums of each block
    ones = Interval(col_norm.hi.max(axis=2))
    infs = Interval(row_norm.hi.max(axis=1))
    second = (ones * infs).sqrt().sum(axis=1).hi
    return float(np.max(np.minimum(first, second)))


def point_norm_lower(vector: Sequence[Interval]) -> float:
    """Lower bound of the Euclidean norm of a point with interval coordinates"""
    total = Interval(vector[0].mig()).sqr()
    for x in vector[1:]:
        total = total + Interval(x.mig()).sqr()
    return float(total.sqrt().lo)


def point_norm_upper(vector: Sequence[Interval]) -> float:
    total = Interval(vector[0].mag()).sqr()
    for x in vector[1:]:
        total = total + Interval(x.mag()).sqr()
    return float(total.sqrt().hi)


def centred(value_at_centre: Interval, dual: Dual, offsets: Interval) -> Interval:
    """Mean-value enclosure intersected with the naive one"""
    enclosure = value_at_centre + (dual.partials * offsets).sum()
    return enclosure.intersect(dual.value)


def centre_offsets(box: UBox) -> Interval:
    """Enclosure of ``u - centre`` over the box, flattened like the derivatives"""
    centre = box.center().ravel()
    return Interval(box.lo.ravel(), box.hi.ravel()) - Interval(centre)


@dataclass
class Leaf(Generic[ResultT]):
    box: UBox
    result: Optional[ResultT]


@dataclass
class SearchOutcome(Generic[ResultT]):
    """Final state of a branch-and-bound run"""

    bound: float
    estimate: float
    boxes: int
    leaves: List[Leaf]
    exhausted: bool
    unresolved_fraction: float


class BoxSearch(Generic[ResultT]):
    """
    Deterministic branch-and-bound over boxes of second differences.

    Each iteration splits the ``batch`` leaves of highest priority and
    evaluates their children, possibly on a thread pool. Batch selection
    does not depend on the number of threads, so results do not either.

    Args:
        evaluate: Box -> result; raising ``UndecidableBoxError`` marks the box undecidable
        summarize: Leaves -> (certified bound, non-rigorous estimate)
        priorities: Leaves -> priority per leaf (undecidable leaves come first anyway)
        keep: Box -> False for boxes outside the region (dropped unevaluated)
        stop: (bound, estimate) -> True once the bound is good enough
        budget: Maximum number of evaluated boxes
        threads: Worker threads for box evaluation
    """

    def __init__(
        self,
        evaluate: Callable[[UBox], ResultT],
        summarize: Callable[[List[Leaf]], Tuple[float, float]],
        priorities: Callable[[List[Leaf]], np.ndarray],
        stop: Callable[[float, float], bool],
        budget: int,
        threads: int = 1,
        keep: Optional[Callable[[UBox], bool]] = None,
        batch: int = 8,
    ):
        self.evaluate = evaluate
        self.summarize = summarize
        self.priorities = priorities
        self.stop = stop
        self.budget = budget
        self.threads = max(1, threads)
        self.keep = keep or (lambda box: True)
        self.batch = batch

    def _evaluate_one(self, box: UBox) -> Leaf:
        try:
            return Leaf(box, self.evaluate(box))
        except UndecidableBoxError as exc:
            logger.debug("undecidable box at depth %d: %s", box.depth, exc.detail)
            return Leaf(box, None)

    def _evaluate_all(self, boxes: List[UBox], pool: Optional[ThreadPoolExecutor]) -> List[Leaf]:
        if pool is None:
            return [self._evaluate_one(box) for box in boxes]
        return list(pool.map(self._evaluate_one, boxes))

    def run(self, root: UBox) -> SearchOutcome:
        if self.budget < 1 or not self.keep(root):
            return SearchOutcome(np.inf, np.inf, 0, [], self.budget < 1, 0.0)
        pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None
        try:
            return self._run(root, pool)
        finally:
            if pool is not None:
                pool.shutdown()

    def _run(self, root: UBox, pool: Optional[ThreadPoolExecutor]) -> SearchOutcome:
        leaves = self._evaluate_all([root], pool)
        used = 1
        exhausted = False
        while True:
            if not leaves:
                bound, estimate = 0.0, 0.0
                break
            bound, estimate = self.summarize(leaves)
            if self.stop(bound, estimate):
                break
            remaining = self.budget - used
            if remaining < 2:
                exhausted = True
                break
            prio = np.asarray(self.priorities(leaves), dtype=float)
            prio = np.where([leaf.result is None for leaf in leaves], np.inf, prio)
            depth = np.array([leaf.box.depth for leaf in leaves])
            order = np.lexsort((depth, -prio))
            chosen = sorted(order[: min(self.batch, remaining // 2)].tolist())
            children: List[UBox] = []
            for idx in chosen:
                children.extend(box for box in split(leaves[idx].box) if self.keep(box))
            evaluated = self._evaluate_all(children, pool)
            used += len(children)
            chosen_set = set(chosen)
            leaves = [leaf for i, leaf in enumerate(leaves) if i not in chosen_set]
            leaves.extend(evaluated)
            logger.debug("branch and bound: %d boxes, %d leaves, bound %.6g, estimate %.6g",
                         used, len(leaves), bound, estimate)
        unresolved = sum(leaf.box.relative_volume() for leaf in leaves if leaf.result is None)
        return SearchOutcome(bound, estimate, used, leaves, exhausted, float(unresolved))
