"""Test certified distortion bounds, certificate search and chain checks"""

import math

import numpy as np
import pytest

from glue_regularity.certify import (
    BoundStatus,
    certify_rate,
    check_chain,
    distortion_sequence,
    gamma_annulus,
    gamma_star_delta,
    gamma_star_zero,
    rate_from_gamma,
    require_certificate,
)
from glue_regularity.chain import k_matrix, kappa, kappa_chain, seminorm, standard_chain
from glue_regularity.config import RunConfig, Tolerances
from glue_regularity.exceptions import (
    EXIT_INCONCLUSIVE,
    CertificateMismatchError,
    DomainError,
    InconclusiveError,
)
from glue_regularity.limits import empirical_kappa_decay
from glue_regularity.linear import difference_scheme, jsr_upper
from glue_regularity.models import Certificate, InconclusiveReport, VerdictLevel
from glue_regularity.registry import get_scheme
from glue_regularity.schemes import compose_windows, index_vectors

from .conftest import SCHEME_IDS, circle_points


def make_certificate(scheme="cps2d", dim=2, gamma=0.01):
    return Certificate(
        scheme=scheme, dim=dim, delta=1e-3, gamma=gamma, ell=2,
        gamma_bound=0.8, alpha=-math.log2(0.8) / 2,
    )


def perturbation(rng, n, dim, lo, hi):
    """Random u with |u|_0 uniform in [lo, hi]"""
    u = rng.uniform(-1.0, 1.0, (n - 2, dim))
    return u * rng.uniform(lo, hi) / np.max(np.linalg.norm(u, axis=1))


class TestRate:
    """Test the rate formula"""

    def test_values(self):
        """Test alpha = -log2(gamma) / l"""
        assert rate_from_gamma(0.5, 1) == pytest.approx(1.0)
        assert rate_from_gamma(1 / math.sqrt(2), 1) == pytest.approx(0.5)
        assert rate_from_gamma(0.25, 4) == pytest.approx(0.5)

    def test_bad_depth(self):
        """Test that depth 0 is rejected"""
        with pytest.raises(DomainError):
            rate_from_gamma(0.5, 0)


class TestGammaStarZero:
    """Test the bound at the standard chain"""

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_chaikin(self, chaikin, ell):
        """Test 2^-l for Chaikin's scheme"""
        assert gamma_star_zero(chaikin, ell) == pytest.approx(2.0**-ell, rel=1e-9)

    def test_four_point(self, fps):
        """Test the four-point values 1 and 3/4"""
        assert gamma_star_zero(fps, 1, dim=1) == pytest.approx(1.0, rel=1e-9)
        assert gamma_star_zero(fps, 2, dim=1) == pytest.approx(0.75, rel=1e-9)

    def test_circle_preserving_matches_four_point(self, cps):
        """Test that the circle-preserving scheme shares the four-point values"""
        assert gamma_star_zero(cps, 2) == pytest.approx(0.75, rel=1e-9)

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_cubic_against_difference_scheme(self, cubic, ell):
        """Test 2^l max |A_{2,Lambda}| from the second difference scheme"""
        mats = difference_scheme(cubic, 2)
        expected = 2.0**ell * jsr_upper(mats, ell) ** ell
        assert gamma_star_zero(cubic, ell, dim=1) == pytest.approx(expected, rel=1e-9)

    def test_depth_range(self, chaikin):
        """Test that depths above the recursion guard are rejected"""
        with pytest.raises(DomainError):
            gamma_star_zero(chaikin, 13)


class TestGammaStarDelta:
    """Test the bound over a neighbourhood of the standard chain"""

    def test_chaikin_certified(self, chaikin):
        """Test a tight bound near 1/2 for one round of Chaikin"""
        result = gamma_star_delta(chaikin, 1, 1e-3, budget=50)
        assert result.certified
        assert result.status == BoundStatus.CERTIFIED
        assert 0.5 - 1e-12 <= result.bound < 0.51
        assert result.estimate <= result.bound

    def test_zero_budget(self, chaikin):
        """Test that no budget gives an infinite, inconclusive bound"""
        result = gamma_star_delta(chaikin, 1, 1e-3, budget=0)
        assert result.bound == math.inf
        assert not result.certified
        with pytest.raises(InconclusiveError) as exc:
            result.raise_for_status()
        assert exc.value.exit_code == EXIT_INCONCLUSIVE

    def test_bad_radius(self, chaikin):
        """Test that the inner radius must be positive"""
        with pytest.raises(DomainError):
            gamma_star_delta(chaikin, 1, 0.0, budget=10)

    @pytest.mark.parametrize("scheme_id", SCHEME_IDS)
    def test_sampled_soundness(self, scheme_id, rng):
        """Test kappa(g_Lambda(e + K u)) <= bound * |u| on random windows in the ball"""
        scheme = get_scheme(scheme_id)
        dim = scheme.default_dim()
        delta = 1e-3
        result = gamma_star_delta(scheme, 2, delta, budget=20, dim=dim)
        assert math.isfinite(result.bound)
        K = k_matrix(scheme.n)
        e = standard_chain(scheme.n, dim)
        for _ in range(100):
            u = perturbation(rng, scheme.n, dim, 0.05 * delta, delta)
            size = np.max(np.linalg.norm(u, axis=1))
            for Lambda in index_vectors(2):
                q = compose_windows(scheme, Lambda, e + K @ u)
                assert kappa(q) <= result.bound * size * (1 + 1e-9)


class TestAnnulus:
    """Test annulus bounds"""

    def test_chaikin_ball(self, chaikin):
        """Test that the derivative bound on the ball certifies Chaikin's annulus"""
        result = gamma_annulus(chaikin, 1, 1e-3, 0.5, budget=30)
        assert result.certified
        assert result.method == "jacobian"
        assert result.gamma == 0.5

    def test_radii_order(self, chaikin):
        """Test that delta must be below gamma"""
        with pytest.raises(DomainError):
            gamma_annulus(chaikin, 1, 0.5, 0.1, budget=30)

    @pytest.mark.parametrize("scheme_id", SCHEME_IDS)
    def test_sampled_soundness(self, scheme_id, rng):
        """Test kappa_k(e + d) <= bound * |d|_2 on random chains in the annulus"""
        scheme = get_scheme(scheme_id)
        dim = scheme.default_dim()
        delta, gamma = 1e-3, 5e-3
        result = gamma_annulus(scheme, 2, delta, gamma, budget=20, dim=dim)
        assert math.isfinite(result.bound)
        K = k_matrix(scheme.n)
        e = standard_chain(scheme.n, dim)
        for _ in range(100):
            u = perturbation(rng, scheme.n, dim, delta, gamma)
            size = np.max(np.linalg.norm(u, axis=1))
            assert seminorm(K @ u, 2) == pytest.approx(size, rel=1e-9)
            for Lambda in index_vectors(2):
                q = compose_windows(scheme, Lambda, e + K @ u)
                assert kappa(q) <= result.bound * size * (1 + 1e-9)


class TestCertifyRate:
    """Test the certificate search"""

    def test_chaikin_certificate(self, chaikin):
        """Test a full certificate for Chaikin's scheme"""
        config = RunConfig(delta_grid=[1e-3], ell_max=2, k_max=1, gamma_steps=2, budget=30)
        cert = require_certificate(certify_rate(chaikin, config))
        assert cert.scheme == "chaikin"
        assert cert.gamma_bound < 1.0
        assert 0.99 < cert.alpha <= 1.0
        assert cert.gamma == 0.5
        assert cert.k == 1 and cert.annulus_bound < 1.0
        assert cert.config["budget"] == 30

    def test_zero_budget_is_inconclusive(self, chaikin):
        """Test that every attempt is listed when nothing certifies"""
        config = RunConfig(delta_grid=[1e-2, 1e-3], ell_max=2, budget=0)
        report = certify_rate(chaikin, config)
        assert isinstance(report, InconclusiveReport)
        assert len(report.attempts) == 4
        assert report.best_bound is None
        with pytest.raises(InconclusiveError):
            require_certificate(report)

    def test_empty_grid(self, chaikin):
        """Test that an empty delta grid is a domain error"""
        with pytest.raises(DomainError):
            certify_rate(chaikin, RunConfig(delta_grid=[]))

    @pytest.mark.slow
    def test_circle_preserving_certificate(self, cps, heptagon):
        """Test that the circle-preserving scheme straightens the heptagon"""
        config = RunConfig(delta_grid=[1e-4], ell_max=2, k_max=1, gamma_steps=2,
                           gamma_max=0.05, budget=40)
        cert = require_certificate(certify_rate(cps, config))
        assert cert.gamma_bound < 1.0
        assert cert.alpha > 0.0
        assert cert.gamma >= cert.delta
        verdict = check_chain(cps, cert, heptagon, max_rounds=10)
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert verdict.exponent == cert.alpha

    @pytest.mark.parametrize("scheme_id", [
        "chaikin",
        pytest.param("bspline_tau:0.5", marks=pytest.mark.slow),
    ])
    def test_observed_decay_is_not_slower(self, scheme_id, rng):
        """Test that kappa decays at least about as fast as the certified rate"""
        scheme = get_scheme(scheme_id)
        config = RunConfig(delta_grid=[1e-3], ell_max=2, k_max=1, gamma_steps=1, budget=30)
        cert = require_certificate(certify_rate(scheme, config))
        P = standard_chain(12, 2) + 0.3 * rng.standard_normal((12, 2))
        estimate = empirical_kappa_decay(scheme, P, 10)
        assert estimate.rate >= cert.alpha - 0.1


class TestCheckChain:
    """Test chains against certificates"""

    def test_linear_chain_at_round_zero(self, cps, line_chain):
        """Test that a straight chain is in the certified region immediately"""
        verdict = check_chain(cps, make_certificate(), line_chain)
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert verdict.rounds == 0

    def test_heptagon(self, cps, heptagon):
        """Test that the heptagon enters the certified region after some rounds"""
        verdict = check_chain(cps, make_certificate(), heptagon, max_rounds=10)
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert 1 <= verdict.rounds <= 10
        assert verdict.exponent == pytest.approx(-math.log2(0.8) / 2)
        assert [j.name for j in verdict.justification][:2] == ["kappa", "gamma_bound"]

    def test_too_few_rounds(self, cps, heptagon):
        """Test that an unknown verdict is returned when rounds run out"""
        verdict = check_chain(cps, make_certificate(), heptagon, max_rounds=0)
        assert verdict.level == VerdictLevel.UNKNOWN

    def test_scheme_mismatch(self, cps, line_chain):
        """Test that certificates only apply to their own scheme"""
        with pytest.raises(CertificateMismatchError):
            check_chain(cps, make_certificate(scheme="fps"), line_chain)

    def test_dimension_mismatch(self, chaikin):
        """Test that certificates only apply in their dimension"""
        with pytest.raises(CertificateMismatchError):
            check_chain(chaikin, make_certificate(scheme="chaikin"), standard_chain(5, 3))

    def test_evaluation_failure(self, cps):
        """Test that a rule failure yields an unknown verdict with a diagnostic"""
        P = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.5], [2.0, 0.0],
                      [3.0, 1.0], [4.0, 0.0], [5.0, 0.3], [6.0, 0.0]])
        verdict = check_chain(cps, make_certificate(), P)
        assert verdict.level == VerdictLevel.UNKNOWN
        assert verdict.justification[0].name == "evaluation"

    def test_distortion_sequence(self, chaikin, square):
        """Test that Chaikin straightens the square"""
        kappas = distortion_sequence(chaikin, square, 4)
        assert len(kappas) == 5
        assert kappas[-1] < kappas[1]

    def test_searched_certificate(self, chaikin):
        """Test a certificate from the search against the octagon"""
        config = RunConfig(delta_grid=[1e-3], ell_max=2, k_max=1, gamma_steps=2, budget=30)
        cert = require_certificate(certify_rate(chaikin, config))
        verdict = check_chain(chaikin, cert, circle_points(8))
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert 1 <= verdict.rounds <= 10
        assert verdict.exponent == cert.alpha

    def test_one_turn_heptagon(self, cps):
        """Test the seven corners of the heptagon, distorted but not degenerate"""
        P = circle_points(7)
        assert 0.0 < kappa_chain(P, cps.n) < math.inf
        verdict = check_chain(cps, make_certificate(), P, max_rounds=10)
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert 1 <= verdict.rounds <= 10

    def test_degeneracy_tolerance(self, cps, heptagon):
        """Test that the configured degeneracy tolerance decides the verdict"""
        config = RunConfig(tolerances=Tolerances(degeneracy=1.0))
        verdict = check_chain(cps, make_certificate(), heptagon, 10, config)
        assert verdict.level == VerdictLevel.UNKNOWN
        assert verdict.justification[0].value is None
        assert verdict.config["tolerances"]["degeneracy"] == 1.0
        default = check_chain(cps, make_certificate(), heptagon, 10)
        assert default.level == VerdictLevel.C1_ALPHA
        assert default.config["tolerances"]["degeneracy"] == Tolerances().degeneracy
