"""Test derivative schemes at the standard chain, companions and verdicts"""

import math

import numpy as np
import pytest

from glue_regularity.chain import standard_chain
from glue_regularity.companion import (
    companion_report,
    companion_scheme,
    describe,
    identify_companion,
    jsr_report,
    regularity_verdict,
    remainder_ratio,
    tangent_normal,
)
from glue_regularity.config import Tolerances
from glue_regularity.exceptions import StructureViolationError
from glue_regularity.models import Certificate, VerdictLevel
from glue_regularity.schemes import GlueScheme, bspline_tau, combine, four_point


class CoupledScheme(GlueScheme):
    """Chaikin with the second coordinate leaking into the first"""

    def __init__(self):
        super().__init__("coupled", m=1, tau=0.5)

    def rule(self, lam, points):
        base = combine((0.75, 0.25) if lam == 0 else (0.25, 0.75), points)
        return [base[0] + (points[1][1] - points[0][1]) * 0.1, base[1]]


class TestTangentNormal:
    """Test the split of the derivative at e"""

    def test_circle_preserving_is_locally_linear(self, cps):
        """Test A = B = four-point matrices for the circle-preserving scheme"""
        pair = tangent_normal(cps)
        assert pair.locally_linear
        assert pair.deviation <= 1e-8
        for own, expected in zip(pair.A, four_point().matrices()):
            assert np.max(np.abs(own - expected)) <= 1e-8
        assert identify_companion(pair.A) == "fps"

    def test_spoiler_companion(self, spoiler):
        """Test that the spoiler scheme has the quartic B-spline as companion"""
        pair = tangent_normal(spoiler)
        assert pair.locally_linear
        for own, expected in zip(pair.A, bspline_tau(0.5).matrices()):
            assert np.max(np.abs(own - expected)) <= 1e-8
        assert identify_companion(pair.A) == "bspline_tau:0.5"

    def test_linear_scheme(self, chaikin):
        """Test that a linear scheme is its own companion"""
        pair = tangent_normal(chaikin)
        assert pair.deviation == 0.0
        assert np.allclose(pair.A0, chaikin.matrices()[0])
        assert identify_companion(pair.A) == "chaikin"

    def test_one_dimensional(self, cubic):
        """Test that in R^1 the normal part repeats the tangential one"""
        pair = tangent_normal(cubic, dim=1)
        assert pair.dim == 1
        assert np.array_equal(pair.A0, pair.B0)

    def test_coupled_coordinates(self):
        """Test that coupling between coordinates violates the structure"""
        with pytest.raises(StructureViolationError):
            tangent_normal(CoupledScheme())
        with pytest.raises(StructureViolationError):
            companion_report(CoupledScheme(), depth=3)

    def test_structure_tolerance(self):
        """Test that a loose structure tolerance accepts weak coupling"""
        report = companion_report(CoupledScheme(), depth=3, tolerances=Tolerances(structure=0.5))
        assert report.locally_linear
        assert report.companion == "chaikin"
        assert report.verdict.level == VerdictLevel.C1_ALPHA

    def test_companion_scheme(self, cps):
        """Test that the companion refines like the four-point scheme"""
        companion = companion_scheme(cps)
        P = standard_chain(9, 2) + np.sin(np.arange(18.0)).reshape(9, 2) * 0.1
        assert np.allclose(companion.subdivide(P), four_point().subdivide(P), atol=1e-8)

    def test_unknown_companion(self):
        """Test that unmatched matrices have no built-in name"""
        A = np.eye(3)
        assert identify_companion((A, A)) is None
        assert describe(None) == "no built-in companion"
        assert describe("fps") == "four-point"


class TestVerdicts:
    """Test the composition of regularity verdicts"""

    def test_spoiler_is_almost_c2(self, spoiler):
        """Test beta = min(alpha, nu) = 1 for the spoiler scheme"""
        verdict = regularity_verdict(spoiler, depth=4)
        assert verdict.level == VerdictLevel.ALMOST_C2
        assert verdict.exponent == pytest.approx(1.0)
        assert verdict.almost and verdict.conditional

    def test_circle_preserving_without_certificate(self, cps):
        """Test that the four-point companion is not almost C^2"""
        verdict = regularity_verdict(cps, depth=6)
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert verdict.almost
        assert verdict.conditional

    def test_certificate_is_cited(self, cps):
        """Test that a certificate enters the evidence"""
        cert = Certificate(scheme="cps2d", dim=2, delta=1e-3, gamma=0.01, ell=2,
                           gamma_bound=0.8, alpha=-math.log2(0.8) / 2)
        verdict = regularity_verdict(cps, cert, depth=6)
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert verdict.exponent >= cert.alpha
        assert "alpha" in [j.name for j in verdict.justification]

    def test_chaikin(self, chaikin):
        """Test that Chaikin's scheme is almost C^{1,1}"""
        verdict = regularity_verdict(chaikin, depth=4)
        assert verdict.level == VerdictLevel.C1_ALPHA
        assert verdict.exponent == pytest.approx(1.0)


class TestRemainder:
    """Test the size of the nonlinear remainder near linear chains"""

    def test_bounded_near_lines(self, spoiler, quartic, rng):
        """Test that the remainder ratio stays bounded as chains straighten"""
        bump = rng.standard_normal((9, 2))
        ratios = [
            remainder_ratio(spoiler, quartic, standard_chain(9, 2) + t * bump)
            for t in (1e-1, 1e-2, 1e-3, 1e-4)
        ]
        assert all(np.isfinite(ratios))
        assert ratios[-1] <= 3.0 * ratios[0]

    def test_linear_scheme_has_no_remainder(self, chaikin, rng):
        """Test that a linear scheme equals its companion"""
        P = standard_chain(6, 2) + 0.1 * rng.standard_normal((6, 2))
        assert remainder_ratio(chaikin, chaikin, P) == 0.0

    def test_straight_chain(self, spoiler, quartic, line_chain):
        """Test that straight chains give zero"""
        assert remainder_ratio(spoiler, quartic, line_chain) == 0.0


class TestReport:
    """Test the companion report"""

    def test_circle_preserving(self, cps):
        """Test the report fields for the circle-preserving scheme"""
        report = companion_report(cps, depth=4)
        assert report.locally_linear
        assert report.companion == "fps"
        assert {"A2", "A3", "B2", "B3"} <= set(report.jsr)
        assert len(report.jsr["A2"]) == 4
        assert report.verdict.level == VerdictLevel.C1_ALPHA

    def test_jsr_keys_follow_available_orders(self, chaikin):
        """Test that orders without a difference scheme are left out"""
        report = jsr_report(tangent_normal(chaikin), max_depth=3)
        assert set(report) == {"A2", "B2"}
