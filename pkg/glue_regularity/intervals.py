"""
Interval arithmetic with outward rounding and forward-mode derivatives.

``Interval`` endpoints are floats or numpy arrays of equal shape, so one object
can hold a single enclosure or a whole vector of them. Every operation rounds
the lower endpoint down and the upper endpoint up by one ulp, which keeps the
exact real result inside the computed enclosure.

``Dual`` carries a value and a vector of partial derivatives. The value may be
a float (plain derivatives) or an ``Interval`` (derivative enclosures over a
box); in the latter case the partials are a vector ``Interval``.

The module-level helpers ``sqrt``, ``sqr``, ``norm`` and ``cross`` accept any
of float, ``Interval`` and ``Dual`` so subdivision rules are written once.
"""

import math
from typing import Any, Sequence, Tuple, Union

import numpy as np

from .exceptions import UndecidableBoxError

_EPS = float(np.finfo(float).eps)
_SMALLEST = float(np.nextafter(0.0, 1.0))

Endpoint = Union[float, np.ndarray]


def _down(x: Endpoint) -> Endpoint:
    return np.nextafter(x, -np.inf)


def _up(x: Endpoint) -> Endpoint:
    return np.nextafter(x, np.inf)


def _as_endpoint(x: Any) -> Endpoint:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    return arr


def _nonneg(lo: Endpoint, mask: Any) -> Endpoint:
    if np.ndim(lo) == 0:
        return max(lo, 0.0) if mask else lo
    return np.where(mask, np.maximum(lo, 0.0), lo)


class Interval:
    """Closed interval [lo, hi] (or a vector of them) with outward rounding"""

    __slots__ = ("lo", "hi")
    __array_ufunc__ = None

    def __init__(self, lo: Any, hi: Any = None):
        lo = _as_endpoint(lo)
        hi = lo if hi is None else _as_endpoint(hi)
        if np.shape(lo) != np.shape(hi):
            lo, hi = np.broadcast_arrays(lo, hi)
            lo, hi = np.array(lo), np.array(hi)
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise UndecidableBoxError("enclosure is not a number")
        if np.any(lo > hi):
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _raw(cls, lo: Endpoint, hi: Endpoint) -> "Interval":
        obj = cls.__new__(cls)
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise UndecidableBoxError("enclosure is not a number")
        obj.lo = lo
        obj.hi = hi
        return obj

    @staticmethod
    def coerce(value: Any) -> "Interval":
        if isinstance(value, Interval):
            return value
        return Interval(value, value)

    @property
    def shape(self) -> Tuple[int, ...]:
        return np.shape(self.lo)

    def __getitem__(self, key: Any) -> "Interval":
        return Interval._raw(_as_endpoint(np.asarray(self.lo)[key]),
                             _as_endpoint(np.asarray(self.hi)[key]))

    def reshape(self, *shape: int) -> "Interval":
        return Interval._raw(np.reshape(self.lo, shape), np.reshape(self.hi, shape))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    # Arithmetic

    def __neg__(self) -> "Interval":
        return Interval._raw(-self.hi, -self.lo)

    def __add__(self, other: Any) -> "Interval":
        if isinstance(other, Dual):
            return NotImplemented
        other = Interval.coerce(other)
        lo = _nonneg(_down(self.lo + other.lo), (self.lo >= 0) & (other.lo >= 0))
        return Interval._raw(lo, _up(self.hi + other.hi))

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Interval":
        if isinstance(other, Dual):
            return NotImplemented
        return self + (-Interval.coerce(other))

    def __rsub__(self, other: Any) -> "Interval":
        return Interval.coerce(other) + (-self)

    def __mul__(self, other: Any) -> "Interval":
        if isinstance(other, Dual):
            return NotImplemented
        if not isinstance(other, Interval) and np.ndim(other) == 0:
            c = float(other)
            if c == 0.0:
                zero = np.zeros_like(self.lo) if np.ndim(self.lo) else 0.0
                return Interval._raw(zero, zero)
            if c > 0:
                return Interval._raw(_down(self.lo * c), _up(self.hi * c))
            return Interval._raw(_down(self.hi * c), _up(self.lo * c))
        other = Interval.coerce(other)
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        lo = np.minimum(np.minimum(products[0], products[1]),
                        np.minimum(products[2], products[3]))
        hi = np.maximum(np.maximum(products[0], products[1]),
                        np.maximum(products[2], products[3]))
        return Interval._raw(_as_endpoint(_down(lo)), _as_endpoint(_up(hi)))

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Interval":
        if isinstance(other, Dual):
            return NotImplemented
        other = Interval.coerce(other)
        if np.any((other.lo <= 0) & (other.hi >= 0)):
            raise UndecidableBoxError("division by an interval containing zero")
        quotients = (
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        )
        lo = np.minimum(np.minimum(quotients[0], quotients[1]),
                        np.minimum(quotients[2], quotients[3]))
        hi = np.maximum(np.maximum(quotients[0], quotients[1]),
                        np.maximum(quotients[2], quotients[3]))
        return Interval._raw(_as_endpoint(_down(lo)), _as_endpoint(_up(hi)))

    def __rtruediv__(self, other: Any) -> "Interval":
        return Interval.coerce(other) / self

    def sqr(self) -> "Interval":
        """Tight square: [-1, 1] squares to [0, 1]"""
        lo = _nonneg(_as_endpoint(_down(self.mig() ** 2)), True)
        return Interval._raw(lo, _as_endpoint(_up(self.mag() ** 2)))

    def sqrt(self) -> "Interval":
        if np.any(self.lo < 0):
            raise UndecidableBoxError("square root of a possibly negative interval")
        lo = _nonneg(_as_endpoint(_down(np.sqrt(self.lo))), True)
        return Interval._raw(lo, _as_endpoint(_up(np.sqrt(self.hi))))

    def __abs__(self) -> "Interval":
        return Interval._raw(self.mig(), self.mag())

    # Queries

    def mig(self) -> Endpoint:
        """Smallest absolute value in the interval"""
        return _as_endpoint(np.where(self.lo > 0, self.lo,
                                     np.where(self.hi < 0, -self.hi, 0.0)))

    def mag(self) -> Endpoint:
        """Largest absolute value in the interval"""
        return _as_endpoint(np.maximum(np.abs(self.lo), np.abs(self.hi)))

    def mid(self) -> Endpoint:
        return _as_endpoint(0.5 * self.lo + 0.5 * self.hi)

    def width(self) -> Endpoint:
        return _as_endpoint(self.hi - self.lo)

    def contains(self, value: Any) -> bool:
        value = np.asarray(value, dtype=float)
        return bool(np.all((self.lo <= value) & (value <= self.hi)))

    def encloses(self, other: "Interval") -> bool:
        return bool(np.all((self.lo <= other.lo) & (other.hi <= self.hi)))

    def hull(self, other: Any) -> "Interval":
        other = Interval.coerce(other)
        return Interval._raw(_as_endpoint(np.minimum(self.lo, other.lo)),
                             _as_endpoint(np.maximum(self.hi, other.hi)))

    def intersect(self, other: Any) -> "Interval":
        other = Interval.coerce(other)
        lo = _as_endpoint(np.maximum(self.lo, other.lo))
        hi = _as_endpoint(np.minimum(self.hi, other.hi))
        if np.any(lo > hi):
            raise UndecidableBoxError("enclosures do not overlap")
        return Interval._raw(lo, hi)

    def sum(self, axis: Any = None) -> "Interval":
        """Enclosure of the sum of the entries, with a floating-point error bound"""
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        count = lo.size if axis is None else lo.shape[axis]
        slack_lo = count * _EPS * np.sum(np.abs(lo), axis=axis) + _SMALLEST
        slack_hi = count * _EPS * np.sum(np.abs(hi), axis=axis) + _SMALLEST
        return Interval._raw(
            _as_endpoint(_down(np.sum(lo, axis=axis) - slack_lo)),
            _as_endpoint(_up(np.sum(hi, axis=axis) + slack_hi)),
        )


def stack(items: Sequence[Interval]) -> Interval:
    """Combine scalar intervals into one vector interval"""
    return Interval._raw(np.array([float(x.lo) for x in items]),
                         np.array([float(x.hi) for x in items]))


class Dual:
    """
    Value with a vector of partial derivatives (forward-mode differentiation).

    Over floats the partials are a numpy vector; over intervals they are a
    vector ``Interval`` enclosing the derivative on the whole box.
    """

    __slots__ = ("value", "partials")
    __array_ufunc__ = None

    def __init__(self, value: Any, partials: Any):
        self.value = value
        self.partials = partials

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.partials!r})"

    def __neg__(self) -> "Dual":
        return Dual(-self.value, -self.partials)

    def __add__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.value + other.value, self.partials + other.partials)
        return Dual(self.value + other, self.partials)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return Dual(self.value - other.value, self.partials - other.partials)
        return Dual(self.value - other, self.partials)

    def __rsub__(self, other: Any) -> "Dual":
        return Dual(other - self.value, -self.partials)

    def __mul__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return Dual(
                self.value * other.value,
                self.partials * other.value + other.partials * self.value,
            )
        return Dual(self.value * other, self.partials * other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            _check_nonzero(other.value)
            quotient = self.value / other.value
            return Dual(quotient,
                        (self.partials - other.partials * quotient) / other.value)
        _check_nonzero(other)
        return Dual(self.value / other, self.partials / other)

    def __rtruediv__(self, other: Any) -> "Dual":
        _check_nonzero(self.value)
        quotient = other / self.value
        return Dual(quotient, self.partials * (-quotient / self.value))

    def sqr(self) -> "Dual":
        return Dual(sqr(self.value), self.partials * (self.value * 2.0))

    def sqrt(self) -> "Dual":
        root = sqrt(self.value)
        _check_nonzero(root)
        return Dual(root, self.partials / (root * 2.0))


def _check_nonzero(x: Any) -> None:
    # numpy partials would silently turn a float zero division into inf
    if not isinstance(x, (Interval, Dual)) and x == 0:
        raise ZeroDivisionError("division by zero")


def sqrt(x: Any) -> Any:
    if isinstance(x, (Interval, Dual)):
        return x.sqrt()
    return math.sqrt(x)


def sqr(x: Any) -> Any:
    if isinstance(x, (Interval, Dual)):
        return x.sqr()
    return x * x


def cross(u: Sequence[Any], v: Sequence[Any]) -> Any:
    """z-component of the cross product of two planar vectors"""
    return u[0] * v[1] - u[1] * v[0]


def norm(vec: Sequence[Any]) -> Any:
    """
    Euclidean norm of a point given as a sequence of scalars.

    For ``Dual`` input the derivative uses the generalized gradient of the
    norm: where the norm may vanish every gradient component is enclosed in
    [-1, 1] (over intervals) or taken as 0 (over floats).
    """
    first = vec[0]
    if isinstance(first, Dual):
        return _dual_norm(vec)
    if isinstance(first, Interval):
        total = first.sqr()
        for x in vec[1:]:
            total = total + x.sqr()
        return total.sqrt()
    return math.hypot(*vec)


def _dual_norm(vec: Sequence[Dual]) -> Dual:
    values = [x.value for x in vec]
    size = norm(values)
    if isinstance(size, Interval):
        unit = Interval(-1.0, 1.0)
        if size.lo > 0:
            grads = [(Interval.coerce(v) / size).intersect(unit) for v in values]
        else:
            grads = [unit] * len(values)
    elif size == 0:
        grads = [0.0] * len(values)
    else:
        grads = [v / size for v in values]
    partials = vec[0].partials * grads[0]
    for x, g in zip(vec[1:], grads[1:]):
        partials = partials + x.partials * g
    return Dual(size, partials)


def sign(x: Any) -> int:
    """Certified sign of a scalar; raises when an interval straddles zero"""
    if isinstance(x, Dual):
        x = x.value
    if isinstance(x, Interval):
        if np.all(x.lo > 0):
            return 1
        if np.all(x.hi < 0):
            return -1
        if np.all((x.lo == 0) & (x.hi == 0)):
            return 0
        raise UndecidableBoxError("sign not decidable on this box")
    return (x > 0) - (x < 0)
