"""Test difference schemes, joint spectral radius bounds and basic functions"""

import math

import numpy as np
import pytest

from glue_regularity.exceptions import DifferenceSchemeError, DomainError
from glue_regularity.linear import (
    basic_function,
    difference_matrix,
    difference_scheme,
    divided_difference_scheme,
    hoelder_from_jsr,
    jsr_table,
    jsr_upper,
    linear_regularity,
    mask_coefficients,
    max_order,
)
from glue_regularity.registry import get_scheme
from glue_regularity.schemes import bspline_tau


class TestWindowMatrices:
    """Test the matrices of linear schemes on windows"""

    def test_chaikin(self, chaikin):
        """Test Chaikin's window matrices"""
        A0, A1 = chaikin.matrices()
        assert A0.tolist() == [[0.75, 0.25, 0.0], [0.25, 0.75, 0.0], [0.0, 0.75, 0.25]]
        assert A1.tolist() == [[0.25, 0.75, 0.0], [0.0, 0.75, 0.25], [0.0, 0.25, 0.75]]

    def test_rows_sum_to_one(self, fps):
        """Test that window matrices reproduce constants"""
        for A in fps.matrices():
            assert np.allclose(A.sum(axis=1), 1.0)

    def test_mask_coefficients(self, chaikin):
        """Test the refinement mask of Chaikin's scheme"""
        mask = mask_coefficients(chaikin)
        assert mask == {0: 0.75, -2: 0.25, 1: 0.25, -1: 0.75}
        assert sum(mask.values()) == 2.0


class TestDifferenceSchemes:
    """Test D_j A_lam = A_{j,lam} D_j"""

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_identity(self, order):
        """Test the defining identity for A^tau"""
        scheme = bspline_tau(0.3)
        D = difference_matrix(scheme.n, order)
        for A, X in zip(scheme.matrices(), difference_scheme(scheme, order)):
            assert np.max(np.abs(D @ A - X @ D)) <= 1e-12

    def test_order_zero_is_the_scheme(self, chaikin):
        """Test that order 0 returns copies of the window matrices"""
        A0, _ = difference_scheme(chaikin, 0)
        assert np.array_equal(A0, chaikin.matrices()[0])

    @pytest.mark.parametrize("scheme_id", ["chaikin", "fps", "bspline_tau:0", "bspline_tau:0.5"])
    def test_identity_on_refined_chains(self, scheme_id, rng):
        """Test D_j (A P) = A_j D_j P window by window on random chains"""
        scheme = get_scheme(scheme_id)
        n = scheme.n
        for order in range(1, max_order(scheme) + 1):
            mats = difference_scheme(scheme, order)
            for _ in range(100):
                P = rng.standard_normal((n + 4, 2))
                refined = scheme.subdivide(P)
                for i in range(len(P) - n + 1):
                    coarse = np.diff(P[i : i + n], n=order, axis=0)
                    for lam in (0, 1):
                        fine = np.diff(refined[2 * i + lam : 2 * i + lam + n], n=order, axis=0)
                        assert np.max(np.abs(fine - mats[lam] @ coarse)) <= 1e-10

    def test_fourth_order_of_bspline_family(self):
        """Test that the order-4 scheme of A^tau is tau/8 and (1-tau)/8"""
        A0, A1 = difference_scheme(bspline_tau(0.25), 4)
        assert sorted([A0.item(), A1.item()]) == pytest.approx([0.25 / 8, 0.75 / 8])

    def test_divided_scaling(self):
        """Test that divided difference schemes carry the factor 2^order"""
        plain = difference_scheme(bspline_tau(0.25), 2)
        divided = divided_difference_scheme(bspline_tau(0.25), 2)
        assert np.allclose(divided[0], 4.0 * plain[0])

    def test_missing_difference_scheme(self):
        """Test a pair without a second order difference scheme"""
        A = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        with pytest.raises(DifferenceSchemeError) as exc:
            difference_scheme((A, A), 2)
        assert exc.value.order == 2
        assert max_order((A, A)) < 2

    def test_max_order(self):
        """Test that A^tau has difference schemes up to order 4"""
        assert max_order(bspline_tau(0.5)) == 4

    def test_order_out_of_range(self, chaikin):
        """Test orders >= n are rejected"""
        with pytest.raises(DomainError):
            difference_scheme(chaikin, 3)


class TestJointSpectralRadius:
    """Test joint spectral radius bounds and the derived exponents"""

    @pytest.mark.parametrize("tau", [0.0, 0.1, 0.25, 0.5, 0.75])
    def test_first_bound_of_bspline_family(self, tau):
        """Test rho_1(A^tau_4) = max(tau, 1 - tau) / 8 and the derived exponent"""
        mats = difference_scheme(bspline_tau(tau), 4)
        rho = jsr_upper(mats, 1)
        assert rho == pytest.approx(max(tau, 1 - tau) / 8)
        assert hoelder_from_jsr(rho, 3) == pytest.approx(-math.log2(max(tau, 1 - tau)), abs=1e-12)

    def test_bounds_never_increase_below_first(self, fps):
        """Test that deeper products never exceed the depth-one bound"""
        table = jsr_table(difference_scheme(fps, 2), 6)
        assert all(rho <= table[0] + 1e-12 for rho in table)

    def test_exponent_formula(self):
        """Test alpha = -order - log2(rho)"""
        assert hoelder_from_jsr(0.25, 1) == pytest.approx(1.0)
        assert hoelder_from_jsr(0.0, 1) == math.inf

    def test_depth_range(self, chaikin):
        """Test that product depths are bounded"""
        with pytest.raises(DomainError):
            jsr_upper(chaikin.matrices(), 0)

    def test_shifted_spline_exponent(self):
        """Test A^{1/4} is almost C^{3, alpha} with alpha = -log2(3/4)"""
        bounds = linear_regularity(bspline_tau(0.25), max_depth=4)
        third = [b for b in bounds if b.order == 3][0]
        assert third.rho == pytest.approx(3 / 32)
        assert third.exponent == pytest.approx(-math.log2(0.75))
        assert third.almost

    def test_cubic_spline_is_not_almost_c3(self, cubic):
        """Test that shift 0 gives exponent 0 at order 3"""
        third = [b for b in linear_regularity(cubic, max_depth=4) if b.order == 3][0]
        assert third.exponent == pytest.approx(0.0, abs=1e-9)
        assert not third.almost


class TestBasicFunction:
    """Test refinable functions of linear schemes"""

    def test_cubic_bspline_values(self, cubic):
        """Test the peak 2/3 and the partition of unity"""
        psi = basic_function(cubic, level=8)
        nodes = np.arange(-4.0, 2.0)
        assert psi(nodes).max() == pytest.approx(2 / 3, abs=1e-9)
        assert psi(nodes).sum() == pytest.approx(1.0, abs=1e-9)
        total = sum(psi(0.3 - k) for k in range(-6, 7))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_level_range(self, chaikin):
        """Test that tabulation levels are bounded"""
        with pytest.raises(DomainError):
            basic_function(chaikin, level=-1)
