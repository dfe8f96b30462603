"""
Certified bounds on distortion amplification and straightening certificates.

``gamma_star_delta`` bounds, over all windows within relative distortion delta
of the standard chain, how much l rounds of refinement can amplify relative
distortion. A bound below 1 certifies straightening at rate
``alpha = -log2(bound) / l``; ``gamma_annulus`` extends the certified region
to radius gamma. ``check_chain`` then tests concrete chains against a
certificate.
"""

import logging
import math
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .chain import Chain, as_chain, kappa_chain
from .config import MAX_CERT_DEPTH, RunConfig
from .exceptions import (
    CertificateMismatchError,
    DomainError,
    InconclusiveError,
    SchemeEvaluationError,
    UndecidableBoxError,
)
from .intervals import Interval
from .limits import distortion_levels
from .models import (
    Attempt,
    Certificate,
    InconclusiveReport,
    Justification,
    Timing,
    Verdict,
    VerdictLevel,
)
from .rigor import (
    BoxSearch,
    Leaf,
    UBox,
    centre_offsets,
    centred,
    embed_dual,
    embed_u,
    jacobian_of,
    mixed_norm_bound,
    point_norm_lower,
    point_norm_upper,
    second_differences,
    slope,
    window_tree,
)
from .schemes import GlueScheme

logger = logging.getLogger(__name__)

THEOREM_STRAIGHTENING = "bound below 1 on windows near linear implies straightening at rate alpha"
THEOREM_ANNULUS = "annulus bound below 1 extends straightening to distortion gamma"
THEOREM_HOELDER = "straightening at rate alpha implies a C^{1,alpha} limit curve"


class BoundStatus:
    """Outcome of a single bound computation"""
    CERTIFIED = "certified"
    INCONCLUSIVE = "inconclusive"


class BoundKind:
    INNER = "inner"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class BoundResult:
    """
    Certified upper bound from a branch-and-bound run.

    ``bound`` is always a valid upper bound (possibly infinite); it only counts
    as a certificate when it lies below ``target``.
    """

    kind: str
    depth: int
    delta: float
    gamma: Optional[float]
    bound: float
    target: float
    estimate: float
    boxes: int
    unresolved_fraction: float
    method: str = "jacobian"

    @property
    def certified(self) -> bool:
        return self.bound < self.target

    @property
    def status(self) -> str:
        return BoundStatus.CERTIFIED if self.certified else BoundStatus.INCONCLUSIVE

    def raise_for_status(self) -> "BoundResult":
        """Raise ``InconclusiveError`` unless the bound is certified"""
        if not self.certified:
            best = self.bound if math.isfinite(self.bound) else None
            raise InconclusiveError(
                f"{self.kind} bound at depth {self.depth} is not below {self.target:g}",
                best_bound=best,
            )
        return self

    def attempt(self) -> Attempt:
        return Attempt(
            kind=self.kind,
            depth=self.depth,
            delta=self.delta,
            gamma=self.gamma,
            bound=self.bound if math.isfinite(self.bound) else None,
            status=self.status,
            boxes=self.boxes,
        )


def _check_depth(depth: int) -> None:
    if not 1 <= depth <= MAX_CERT_DEPTH:
        raise DomainError(f"depth must lie in 1..{MAX_CERT_DEPTH}, got {depth}")


def _resolve_dim(scheme: GlueScheme, dim: Optional[int]) -> int:
    dim = dim or scheme.default_dim()
    scheme.check_dim(dim)
    return dim


def rate_from_gamma(gamma: float, ell: int) -> float:
    """Straightening rate ``-log2(gamma) / ell`` certified by a bound gamma at depth ell"""
    if ell < 1:
        raise DomainError("depth must be at least 1")
    if gamma <= 0:
        return math.inf
    return -math.log2(gamma) / ell


def _numerator(window: list, dim: int) -> Tuple[float, float]:
    """Bound and midpoint estimate of the norm of D(second difference) over a box"""
    J = jacobian_of(second_differences(window))
    return mixed_norm_bound(J.mag(), dim), mixed_norm_bound(np.abs(J.mid()), dim)


def gamma_star_zero(scheme: GlueScheme, ell: int, dim: Optional[int] = None) -> float:
    """
    Limit of the bound as delta -> 0: ``2**ell * max_Lambda |M_Lambda|`` with
    M_Lambda the derivative of the window map at the standard chain.
    """
    _check_depth(ell)
    dim = _resolve_dim(scheme, dim)
    box = UBox.cube(scheme.n, dim, 0.0)
    worst = 0.0
    for window in window_tree(scheme, embed_dual(box), ell):
        worst = max(worst, _numerator(window, dim)[0])
    return float((Interval(worst) * 2.0**ell).hi)


@dataclass(frozen=True)
class InnerBox:
    """Per index vector bounds on one box"""

    numerators: np.ndarray
    denominators: np.ndarray
    num_estimates: np.ndarray
    den_estimates: np.ndarray


def _inner_evaluator(scheme: GlueScheme, ell: int, dim: int) -> Callable[[UBox], InnerBox]:
    def evaluate(box: UBox) -> InnerBox:
        duals = window_tree(scheme, embed_dual(box), ell)
        centres = window_tree(scheme, embed_u(UBox.point(box.center())), ell)
        offsets = centre_offsets(box)
        num, den, num_est, den_est = [], [], [], []
        for dual_window, centre_window in zip(duals, centres):
            bound, estimate = _numerator(dual_window, dim)
            num.append(bound)
            num_est.append(estimate)
            at_centre = slope(centre_window)
            enclosure = [centred(c, b, offsets) for c, b in zip(at_centre, slope(dual_window))]
            den.append(point_norm_lower(enclosure))
            den_est.append(float(np.linalg.norm([c.mid() for c in at_centre])))
        return InnerBox(np.array(num), np.array(den), np.array(num_est), np.array(den_est))

    return evaluate


def _inner_extremes(leaves: List[Leaf]) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    decided = [leaf.result for leaf in leaves if leaf.result is not None]
    if not decided:
        return None
    numerators = np.max([r.numerators for r in decided], axis=0)
    denominators = np.min([r.denominators for r in decided], axis=0)
    return numerators, denominators


def _summarize_inner(leaves: List[Leaf]) -> Tuple[float, float]:
    decided = [leaf.result for leaf in leaves if leaf.result is not None]
    if not decided:
        return math.inf, 0.0
    est_num = np.max([r.num_estimates for r in decided], axis=0)
    est_den = np.min([r.den_estimates for r in decided], axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        estimate = float(np.nanmax(np.where(est_den > 0, est_num / est_den, np.inf)))
    if len(decided) < len(leaves):
        return math.inf, estimate
    numerators, denominators = _inner_extremes(leaves)  # type: ignore[misc]
    if np.any(denominators <= 0):
        return math.inf, estimate
    bound = float(np.max((Interval(numerators) / Interval(denominators)).hi))
    return bound, estimate


def _inner_priorities(leaves: List[Leaf]) -> np.ndarray:
    extremes = _inner_extremes(leaves)
    if extremes is None:
        return np.zeros(len(leaves))
    numerators, denominators = extremes
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(denominators > 0, numerators / denominators, np.inf)
        weights = ratios / np.max(ratios)
        weights = np.nan_to_num(weights, nan=1.0, posinf=1.0)
        prio = []
        for leaf in leaves:
            r = leaf.result
            if r is None:
                prio.append(np.inf)
                continue
            share = np.maximum(
                np.where(numerators > 0, r.numerators / numerators, 0.0),
                np.where(r.denominators > 0, denominators / r.denominators, 1.0),
            )
            prio.append(float(np.max(weights * share)))
    return np.array(prio)


def gamma_star_delta(
    scheme: GlueScheme,
    ell: int,
    delta: float,
    budget: int,
    target: float = 1.0,
    dim: Optional[int] = None,
    rel_gap: float = 0.01,
    threads: int = 1,
) -> BoundResult:
    """
    Certified upper bound on ``max_Lambda max|D g_Lambda| / min|Pi g_Lambda|_1``
    over the normalized windows within distortion delta of the standard chain.

    Boxes covering ``{|u|_0 <= delta}`` are refined until the bound drops below
    ``target`` and is within ``rel_gap`` of the sampled estimate, the estimate
    itself reaches ``target`` or ``budget`` boxes have been evaluated.
    """
    _check_depth(ell)
    if not delta > 0:
        raise DomainError(f"inner radius must be positive, got {delta}")
    if budget < 0:
        raise DomainError("box budget must be non-negative")
    dim = _resolve_dim(scheme, dim)

    def done(bound: float, estimate: float) -> bool:
        if estimate > target:
            return True
        return bound < target and bound - estimate <= rel_gap * bound

    search = BoxSearch(
        evaluate=_inner_evaluator(scheme, ell, dim),
        summarize=_summarize_inner,
        priorities=_inner_priorities,
        stop=done,
        budget=budget,
        threads=threads,
        keep=lambda box: box.norm_bounds()[0] <= delta,
    )
    outcome = search.run(UBox.cube(scheme.n, dim, delta))
    result = BoundResult(
        kind=BoundKind.INNER,
        depth=ell,
        delta=delta,
        gamma=None,
        bound=outcome.bound,
        target=target,
        estimate=outcome.estimate,
        boxes=outcome.boxes,
        unresolved_fraction=outcome.unresolved_fraction,
    )
    logger.info("%s inner bound l=%d delta=%g: %.6g after %d boxes (%s)",
                scheme.name, ell, delta, result.bound, result.boxes, result.status)
    return result


@dataclass(frozen=True)
class AnnulusBox:
    bound: float
    estimate: float


def _annulus_evaluator(scheme: GlueScheme, k: int, delta: float) -> Callable[[UBox], AnnulusBox]:
    def evaluate(box: UBox) -> AnnulusBox:
        radius_lo, _ = box.norm_bounds()
        centre = box.center()
        duals = window_tree(scheme, embed_dual(box), k)
        centres = window_tree(scheme, embed_u(UBox.point(centre)), k)
        offsets = centre_offsets(box)
        scale = Interval(max(delta, radius_lo))
        centre_radius = float(np.max(np.linalg.norm(centre, axis=1)))
        worst, estimate = 0.0, 0.0
        for dual_window, centre_window in zip(duals, centres):
            second_c = second_differences(centre_window)
            second_d = second_differences(dual_window)
            numerator = max(
                point_norm_upper([centred(c, d, offsets) for c, d in zip(pc, pd)])
                for pc, pd in zip(second_c, second_d)
            )
            at_centre = slope(centre_window)
            enclosure = [centred(c, b, offsets) for c, b in zip(at_centre, slope(dual_window))]
            denominator = point_norm_lower(enclosure)
            if denominator <= 0:
                raise UndecidableBoxError("linear part may vanish on this box")
            worst = max(worst, float((Interval(numerator) / (Interval(denominator) * scale)).hi))
            if centre_radius >= delta:
                num_c = max(float(np.linalg.norm([x.mid() for x in p])) for p in second_c)
                den_c = float(np.linalg.norm([b.mid() for b in at_centre]))
                if den_c > 0:
                    estimate = max(estimate, num_c / (den_c * centre_radius))
        return AnnulusBox(worst, estimate)

    return evaluate


def _summarize_annulus(leaves: List[Leaf]) -> Tuple[float, float]:
    decided = [leaf.result for leaf in leaves if leaf.result is not None]
    estimate = max((r.estimate for r in decided), default=0.0)
    if len(decided) < len(leaves):
        return math.inf, estimate
    return max((r.bound for r in decided), default=0.0), estimate


def _annulus_priorities(leaves: List[Leaf]) -> np.ndarray:
    return np.array([np.inf if leaf.result is None else leaf.result.bound for leaf in leaves])


def gamma_annulus(
    scheme: GlueScheme,
    k: int,
    delta: float,
    gamma: float,
    budget: int,
    target: float = 1.0,
    dim: Optional[int] = None,
    threads: int = 1,
) -> BoundResult:
    """
    Certified upper bound on ``max kappa_k(e + d) / |d|_2`` over
    ``delta <= |d|_2 <= gamma``.

    The derivative bound over the whole ball of radius gamma is tried first
    (mean value theorem, the linear windows are fixed by the scheme); if it
    does not certify, the annulus itself is covered by boxes with the
    remaining budget. The smaller of both valid bounds is reported.
    """
    _check_depth(k)
    if not 0 < delta < gamma:
        raise DomainError(f"annulus needs 0 < delta < gamma, got {delta} and {gamma}")
    dim = _resolve_dim(scheme, dim)

    ball = gamma_star_delta(scheme, k, gamma, budget, target=target, dim=dim,
                            rel_gap=math.inf, threads=threads)
    if ball.certified or budget - ball.boxes < 1:
        return BoundResult(BoundKind.ANNULUS, k, delta, gamma, ball.bound, target,
                           ball.estimate, ball.boxes, ball.unresolved_fraction, "jacobian")

    def keep(box: UBox) -> bool:
        lo, hi = box.norm_bounds()
        return hi >= delta and lo <= gamma

    search = BoxSearch(
        evaluate=_annulus_evaluator(scheme, k, delta),
        summarize=_summarize_annulus,
        priorities=_annulus_priorities,
        stop=lambda bound, estimate: bound < target or estimate > target,
        budget=budget - ball.boxes,
        threads=threads,
        keep=keep,
    )
    outcome = search.run(UBox.cube(scheme.n, dim, gamma))
    direct = outcome.bound
    bound, method = (direct, "direct") if direct < ball.bound else (ball.bound, "jacobian")
    result = BoundResult(
        kind=BoundKind.ANNULUS,
        depth=k,
        delta=delta,
        gamma=gamma,
        bound=bound,
        target=target,
        estimate=max(outcome.estimate, 0.0),
        boxes=ball.boxes + outcome.boxes,
        unresolved_fraction=outcome.unresolved_fraction,
        method=method,
    )
    logger.info("%s annulus bound k=%d [%g, %g]: %.6g via %s (%s)",
                scheme.name, k, delta, gamma, bound, method, result.status)
    return result


def _timing(started: float) -> Timing:
    return Timing(
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        wall_time=round(time.perf_counter() - started, 3),
    )


def _grow_gamma(scheme: GlueScheme, k: int, delta: float, config: RunConfig,
                dim: int, attempts: List[BoundResult]) -> Optional[BoundResult]:
    """Largest gamma in (delta, gamma_max] with a certified annulus bound, by bisection"""
    lo, hi = delta, config.gamma_max
    if hi <= lo:
        return None

    def attempt(gamma: float) -> BoundResult:
        result = gamma_annulus(scheme, k, delta, gamma, config.budget,
                               dim=dim, threads=config.threads)
        attempts.append(result)
        return result

    top = attempt(hi)
    if top.certified:
        return top
    best = None
    for _ in range(config.gamma_steps):
        mid = math.sqrt(lo * hi)
        result = attempt(mid)
        if result.certified:
            lo, best = mid, result
        else:
            hi = mid
    return best


def certify_rate(
    scheme: GlueScheme, config: Optional[RunConfig] = None
) -> Union[Certificate, InconclusiveReport]:
    """
    Search for a straightening certificate.

    Every delta of the grid is tried with inner depths 1..ell_max and the pair
    with the largest rate wins (ties keep the larger delta). Then gamma is
    grown by bisection for annulus depths 1..k_max. Without a certified inner
    bound an ``InconclusiveReport`` listing every attempt is returned.
    """
    from . import __version__

    config = (config or RunConfig()).checked()
    dim = _resolve_dim(scheme, config.dim)
    started = time.perf_counter()
    attempts: List[BoundResult] = []
    best: Optional[Tuple[float, BoundResult]] = None

    for delta in sorted(set(config.delta_grid), reverse=True):
        for ell in range(1, config.ell_max + 1):
            result = gamma_star_delta(scheme, ell, delta, config.budget, dim=dim,
                                      rel_gap=config.rel_gap, threads=config.threads)
            attempts.append(result)
            if not result.certified:
                continue
            alpha = rate_from_gamma(result.bound, ell)
            if best is None or alpha > best[0]:
                best = (alpha, result)

    recorded = config.recorded()
    if best is None:
        finite = [a.bound for a in attempts if math.isfinite(a.bound)]
        logger.warning("%s: no certificate within the configured budget", scheme.name)
        return InconclusiveReport(
            scheme=scheme.name,
            dim=dim,
            best_bound=min(finite) if finite else None,
            attempts=[a.attempt() for a in attempts],
            version=__version__,
            config=recorded,
            timing=_timing(started),
        )

    alpha, inner = best
    gamma, annulus = inner.delta, None
    for k in range(1, config.k_max + 1):
        found = _grow_gamma(scheme, k, inner.delta, config, dim, attempts)
        if found is not None and found.gamma is not None and found.gamma > gamma:
            gamma, annulus = found.gamma, found

    logger.info("%s certified: alpha=%.6g delta=%g gamma=%g", scheme.name, alpha, inner.delta, gamma)
    return Certificate(
        scheme=scheme.name,
        dim=dim,
        delta=inner.delta,
        gamma=gamma,
        ell=inner.depth,
        gamma_bound=inner.bound,
        k=annulus.depth if annulus else None,
        annulus_bound=annulus.bound if annulus else None,
        alpha=alpha,
        boxes=sum(a.boxes for a in attempts),
        unresolved_fraction=inner.unresolved_fraction,
        version=__version__,
        config=recorded,
        timing=_timing(started),
    )


def require_certificate(result: Union[Certificate, InconclusiveReport]) -> Certificate:
    """Return the certificate or raise ``InconclusiveError`` with the best bound"""
    if isinstance(result, InconclusiveReport):
        raise InconclusiveError(f"no certificate for {result.scheme}", best_bound=result.best_bound)
    return result


def _finite(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def check_chain(scheme: GlueScheme, cert: Certificate, P: Chain, max_rounds: int = 10,
                config: Optional[RunConfig] = None) -> Verdict:
    """
    Refine ``P`` until its relative distortion drops to the certified radius.

    The degeneracy tolerance comes from ``config``, which is recorded in the
    verdict.

    Returns a C^{1,alpha} verdict citing the certificate at the first round
    with ``kappa(P^j) <= gamma``, otherwise an ``unknown`` verdict. A rule that
    cannot be evaluated on the chain also yields ``unknown`` with a diagnostic.

    Raises:
        CertificateMismatchError: certificate for another scheme or dimension
    """
    from . import __version__

    if cert.scheme != scheme.name:
        raise CertificateMismatchError(f"certificate is for {cert.scheme}, not {scheme.name}")
    P = as_chain(P)
    if P.shape[1] != cert.dim:
        raise CertificateMismatchError(
            f"certificate is for dimension {cert.dim}, chain has {P.shape[1]}"
        )
    if len(P) < scheme.n:
        raise DomainError(f"chain of length {len(P)} is shorter than spread {scheme.n}")
    if max_rounds < 0:
        raise DomainError("number of rounds must be non-negative")
    config = config or RunConfig()
    recorded = config.recorded()
    degeneracy = config.tolerances.degeneracy

    value = math.inf
    for rounds in range(max_rounds + 1):
        if rounds:
            try:
                P = scheme.subdivide(P)
            except SchemeEvaluationError as exc:
                logger.warning("%s: %s", scheme.name, exc.detail)
                return Verdict(
                    scheme=scheme.name,
                    rounds=rounds,
                    justification=[Justification(
                        name="evaluation", theorem="rule not evaluable on this chain",
                        detail=exc.detail,
                    )],
                    version=__version__,
                    config=recorded,
                )
        value = kappa_chain(P, scheme.n, degeneracy)
        logger.info("%s round %d: kappa = %.6g", scheme.name, rounds, value)
        if value <= cert.gamma:
            evidence = [
                Justification(name="kappa", value=value, theorem="chain lies in the certified region",
                              detail=f"kappa(P^{rounds}) <= gamma = {cert.gamma:g}"),
                Justification(name="gamma_bound", value=cert.gamma_bound,
                              theorem=THEOREM_STRAIGHTENING,
                              detail=f"Gamma_{cert.ell}[{cert.delta:g}] <= {cert.gamma_bound:.6g}"),
            ]
            if cert.annulus_bound is not None:
                evidence.append(Justification(
                    name="annulus_bound", value=cert.annulus_bound, theorem=THEOREM_ANNULUS,
                    detail=f"Gamma_{cert.k}[{cert.delta:g}, {cert.gamma:g}] <= {cert.annulus_bound:.6g}",
                ))
            evidence.append(Justification(name="alpha", value=cert.alpha, theorem=THEOREM_HOELDER))
            return Verdict(
                scheme=scheme.name,
                level=VerdictLevel.C1_ALPHA,
                exponent=cert.alpha,
                rounds=rounds,
                justification=evidence,
                version=__version__,
                config=recorded,
            )

    return Verdict(
        scheme=scheme.name,
        rounds=max_rounds,
        justification=[Justification(
            name="kappa", value=_finite(value), theorem="no certificate applies",
            detail=f"kappa stayed above gamma = {cert.gamma:g} for {max_rounds} rounds",
        )],
        version=__version__,
        config=recorded,
    )


def distortion_sequence(scheme: GlueScheme, P: Chain, rounds: int) -> List[float]:
    """kappa(P^l) for l = 0..rounds"""
    if rounds < 0:
        raise DomainError("number of rounds must be non-negative")
    return distortion_levels(scheme, P, rounds)
