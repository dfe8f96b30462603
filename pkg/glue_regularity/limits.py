"""
Limit curves sampled through generators, plus empirical estimates of the
regularity of limit curves. The estimates only cross-check certificates;
they certify nothing.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .chain import Chain, as_chain, kappa_chain
from .exceptions import DomainError
from .schemes import GlueScheme, iterate

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-13


class Generator:
    """Compactly supported function forming a partition of unity"""

    def __init__(self, support: Tuple[float, float],
                 func: Callable[[np.ndarray], np.ndarray], name: str = "generator"):
        lo, hi = float(support[0]), float(support[1])
        if not lo < hi:
            raise DomainError("generator support must be a proper interval")
        self.support = (lo, hi)
        self.name = name
        self._func = func

    @property
    def radius(self) -> float:
        return max(-self.support[0], self.support[1])

    def __call__(self, x: Union[float, np.ndarray]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x > self.support[0]) & (x < self.support[1])
        return np.where(inside, self._func(x), 0.0)

    @classmethod
    def tabulated(cls, xs: np.ndarray, values: np.ndarray, name: str) -> "Generator":
        xs = np.array(xs, dtype=float)
        values = np.array(values, dtype=float)
        return cls((xs[0], xs[-1]), lambda x: np.interp(x, xs, values), name=name)

    def __repr__(self) -> str:
        return f"Generator({self.name!r}, support={self.support})"


def hat() -> Generator:
    """Piecewise linear hat on [-1, 1]"""
    return Generator((-1.0, 1.0), lambda x: np.maximum(0.0, 1.0 - np.abs(x)), name="hat")


def lebesgue_constant(generator: Generator, samples: int = 2049) -> float:
    """Sampled value of ``max_t sum_j |phi(t - j)|``"""
    t = np.linspace(0.0, 1.0, samples)
    lo, hi = generator.support
    total = np.zeros_like(t)
    for j in range(int(math.floor(-hi)) - 1, int(math.ceil(-lo)) + 2):
        total += np.abs(generator(t - j))
    return float(total.max())


@dataclass(frozen=True)
class SampledCurve:
    """Curve values at increasing parameters inside the admissible interval"""

    t: np.ndarray
    points: np.ndarray
    level: int


def parameter_domain(count: int, n: int, z: float) -> Tuple[float, float]:
    """The interval [z, N - n + 1 - z] of parameters away from the chain ends"""
    lo, hi = z, count - n + 1 - z
    if not lo < hi:
        raise DomainError(f"margin z={z} leaves no parameters for {count} points")
    return lo, hi


def generator_curve(P: Chain, level: int, generator: Generator,
                    t: np.ndarray) -> np.ndarray:
    """Evaluate ``sum_j p_j phi(2**level * t - j)`` at the parameters ``t``"""
    u = np.asarray(t, dtype=float) * 2.0**level
    base = np.floor(u).astype(int)
    lo, hi = generator.support
    out = np.zeros((len(u), P.shape[1]))
    for k in range(int(math.floor(-hi)) - 1, int(math.ceil(-lo)) + 2):
        j = base + k
        valid = (j >= 0) & (j < len(P))
        weight = np.where(valid, generator(u - j), 0.0)
        out += weight[:, None] * P[np.clip(j, 0, len(P) - 1)]
    return out


def limit_samples(
    scheme: GlueScheme,
    P: Chain,
    level: int,
    generator: Optional[Generator] = None,
    z: float = 1.0,
    grid: Union[int, Sequence[float]] = 257,
) -> SampledCurve:
    """
    Sample the curve of the ``level``-th refinement of ``P`` with a generator.

    Args:
        grid: Number of equispaced parameters, or explicit parameters

    Raises:
        DomainError: ``2**-level * r > z`` for generator radius r, or an empty
            or out-of-range parameter grid
    """
    generator = generator or hat()
    P = as_chain(P)
    lo, hi = parameter_domain(len(P), scheme.n, z)
    if generator.radius > z * 2.0**level:
        minimum = max(0, math.ceil(math.log2(generator.radius / z)))
        raise DomainError(f"level {level} too small for z={z}; minimum level is {minimum}")
    if isinstance(grid, int):
        if grid < 2:
            raise DomainError("grid needs at least two parameters")
        t = np.linspace(lo, hi, grid)
    else:
        t = np.asarray(grid, dtype=float)
        if t.size == 0 or np.any(np.diff(t) <= 0) or t[0] < lo or t[-1] > hi:
            raise DomainError(f"parameters must increase strictly within [{lo}, {hi}]")
    refined = iterate(scheme, P, level)
    return SampledCurve(t=t, points=generator_curve(refined, level, generator, t), level=level)


@dataclass(frozen=True)
class DecayEstimate:
    """Fitted decay of relative distortion over refinement levels"""

    rate: float
    exact: bool
    kappas: List[float] = field(default_factory=list)
    fitted_levels: List[int] = field(default_factory=list)


def distortion_levels(scheme: GlueScheme, P: Chain, max_level: int) -> List[float]:
    """kappa of P, P^1, ..., P^max_level"""
    P = as_chain(P)
    kappas = []
    for level in range(max_level + 1):
        kappas.append(kappa_chain(P, scheme.n))
        logger.debug("%s level %d: kappa = %.6g", scheme.name, level, kappas[-1])
        if level < max_level:
            P = scheme.subdivide(P)
    return kappas


def _fit_rate(levels: Sequence[int], kappas: Sequence[float]) -> float:
    slope = np.polyfit(np.asarray(levels, dtype=float), np.log2(kappas), 1)[0]
    return float(-slope)


def empirical_kappa_decay(scheme: GlueScheme, P: Chain, max_level: int = 10) -> DecayEstimate:
    """
    Least-squares rate alpha with kappa_l ~ 2**(-l * alpha) over the tail levels.

    Raises:
        DomainError: distortion stays infinite at every level
    """
    kappas = distortion_levels(scheme, P, max_level)
    finite = [(level, k) for level, k in enumerate(kappas) if math.isfinite(k)]
    if not finite:
        raise DomainError("relative distortion is infinite at every level")
    positive = [(level, k) for level, k in finite if k > ZERO_TOL]
    if not positive or positive[-1][0] < finite[-1][0]:
        return DecayEstimate(rate=math.inf, exact=True, kappas=kappas)
    tail = positive[len(positive) // 2 :]
    if len(tail) < 2:
        tail = positive[-2:]
    if len(tail) < 2:
        raise DomainError("need at least two levels with finite distortion")
    levels = [level for level, _ in tail]
    rate = _fit_rate(levels, [k for _, k in tail])
    return DecayEstimate(rate=rate, exact=False, kappas=kappas, fitted_levels=levels)


@dataclass(frozen=True)
class StraighteningProfile:
    """Observed distortion behaviour; observations only, never certificates"""

    kappas: List[float]
    partial_sums: List[float]
    vanishing: bool
    summable: bool
    rate: Optional[float]


def straightening_profile(scheme: GlueScheme, P: Chain, max_level: int = 10) -> StraighteningProfile:
    """Record whether kappa tends to zero, its partial sums settle, and the fitted rate"""
    estimate = empirical_kappa_decay(scheme, P, max_level)
    kappas = estimate.kappas
    finite = [k for k in kappas if math.isfinite(k)]
    partial = list(np.cumsum(finite)) if finite else []
    last = finite[-1]
    vanishing = last <= ZERO_TOL or last <= 1e-2 * max(finite)
    summable = False
    if len(finite) >= 4:
        tail = finite[len(finite) // 2 :]
        ratios = [b / a for a, b in zip(tail, tail[1:]) if a > ZERO_TOL]
        summable = not ratios or max(ratios) < 0.9
    rate = None if estimate.exact else estimate.rate
    return StraighteningProfile(kappas, [float(s) for s in partial], vanishing, summable, rate)


def _inside(count: int, n: int, level: int, z: float) -> np.ndarray:
    lo, hi = parameter_domain(count, n, z)
    i = np.arange(2**level * (count - n + 1) + n - 1)
    return (i >= lo * 2**level) & (i <= hi * 2**level)


def derivative_floor(scheme: GlueScheme, P: Chain, level: int, z: float = 1.0) -> float:
    """Smallest scaled first difference ``|2**level (p_{i+1} - p_i)|`` inside I_z"""
    P = as_chain(P)
    refined = iterate(scheme, P, level)
    mask = _inside(len(P), scheme.n, level, z)[: len(refined) - 1]
    speeds = np.linalg.norm(np.diff(refined, axis=0), axis=1) * 2.0**level
    if not np.any(mask):
        raise DomainError("no refined points inside the parameter interval")
    return float(speeds[mask].min())


@dataclass(frozen=True)
class HolderEstimate:
    """Log-log fit of the modulus of continuity of a derivative"""

    alpha: float
    exact: bool
    steps: List[float] = field(default_factory=list)
    moduli: List[float] = field(default_factory=list)


def empirical_holder(
    scheme: GlueScheme, P: Chain, order: int, z: float = 1.0, level: int = 12
) -> HolderEstimate:
    """
    Estimate the Hoelder exponent of the ``order``-th derivative of the limit curve.

    Derivatives are scaled divided differences of the ``level``-th refinement;
    the modulus of continuity is taken on steps h = 2**-j, j = 3..level-2, and
    fitted over the middle third of that range.
    """
    if order not in (1, 2):
        raise DomainError("derivative order must be 1 or 2")
    if level < 8:
        raise DomainError(f"level {level} too shallow for a Hoelder estimate; use level >= 8")
    P = as_chain(P)
    refined = iterate(scheme, P, level)
    derivative = np.diff(refined, n=order, axis=0) * 2.0 ** (level * order)
    mask = _inside(len(P), scheme.n, level, z)[: len(derivative)]
    index = np.flatnonzero(mask)
    if index.size < 2:
        raise DomainError("no refined points inside the parameter interval")
    start, stop = index[0], index[-1] + 1
    values = derivative[start:stop]
    scale = 1.0 + float(np.max(np.linalg.norm(values, axis=1)))

    exponents = list(range(3, level - 1))
    steps, moduli = [], []
    for j in exponents:
        shift = 2 ** (level - j)
        if shift >= len(values):
            continue
        jumps = np.linalg.norm(values[shift:] - values[:-shift], axis=1)
        steps.append(2.0**-j)
        moduli.append(float(jumps.max()))
    if not moduli or max(moduli) <= ZERO_TOL * scale:
        return HolderEstimate(alpha=math.inf, exact=True, steps=steps, moduli=moduli)
    third = len(moduli) // 3
    chosen = [(h, w) for h, w in zip(steps[third : len(steps) - third],
                                     moduli[third : len(moduli) - third]) if w > 0]
    if len(chosen) < 2:
        raise DomainError("too few usable steps for a Hoelder estimate; increase level")
    slope = np.polyfit(np.log2([h for h, _ in chosen]), np.log2([w for _, w in chosen]), 1)[0]
    return HolderEstimate(alpha=float(slope), exact=False, steps=steps, moduli=moduli)


def write_csv(curve: SampledCurve, path: Union[str, Path, None] = None) -> str:
    """Rows ``t, x0, ..., x{d-1}``"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["t"] + [f"x{c}" for c in range(curve.points.shape[1])])
    for t, point in zip(curve.t, curve.points):
        writer.writerow([repr(float(t))] + [repr(float(x)) for x in point])
    text = buffer.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def write_svg(curve: SampledCurve, path: Union[str, Path, None] = None,
              size: int = 512) -> str:
    """Polyline of the first two coordinates (parameter against x0 in 1D)"""
    if curve.points.shape[1] >= 2:
        xy = curve.points[:, :2]
    else:
        xy = np.column_stack([curve.t, curve.points[:, 0]])
    lo = xy.min(axis=0)
    span = float(np.max(xy.max(axis=0) - lo)) or 1.0
    scaled = (xy - lo) / span * (size - 20) + 10
    # SVG y axis points down
    scaled[:, 1] = size - scaled[:, 1]
    coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in scaled)
    text = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n'
        f'  <polyline fill="none" stroke="black" stroke-width="1" points="{coords}"/>\n'
        "</svg>\n"
    )
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
