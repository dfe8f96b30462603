"""Test interval enclosures and forward-mode derivatives"""

import math

import numpy as np
import pytest

from glue_regularity.exceptions import UndecidableBoxError
from glue_regularity.intervals import Dual, Interval, cross, norm, sign, sqr, sqrt, stack


class TestIntervalArithmetic:
    """Test basic enclosures"""

    def test_addition(self):
        """Test [1, 2] + [3, 4] encloses [4, 6] tightly"""
        total = Interval(1.0, 2.0) + Interval(3.0, 4.0)
        assert total.encloses(Interval(4.0, 6.0))
        assert total.width() < 2.0 + 1e-14

    def test_square_is_tight(self):
        """Test [-1, 1]^2 is [0, 1] rather than [-1, 1]"""
        square = Interval(-1.0, 1.0).sqr()
        assert square.lo == 0.0
        assert 1.0 <= square.hi < 1.0 + 1e-15

    def test_product_signs(self):
        """Test the product of a negative and a mixed interval"""
        product = Interval(-3.0, -1.0) * Interval(-1.0, 2.0)
        assert product.encloses(Interval(-6.0, 3.0))
        assert product.width() < 9.0 + 1e-13

    def test_division_through_zero(self):
        """Test that dividing by an interval containing zero is undecidable"""
        with pytest.raises(UndecidableBoxError):
            Interval(1.0, 2.0) / Interval(-1.0, 1.0)

    def test_sqrt_of_negative(self):
        """Test that a possibly negative radicand is undecidable"""
        with pytest.raises(UndecidableBoxError):
            Interval(-0.5, 1.0).sqrt()

    def test_empty_interval(self):
        """Test that lo > hi is rejected"""
        with pytest.raises(ValueError):
            Interval(2.0, 1.0)

    def test_norm(self):
        """Test |([3, 3], [4, 4])| encloses 5"""
        size = norm([Interval(3.0), Interval(4.0)])
        assert size.contains(5.0)
        assert size.width() < 1e-14

    def test_mig_and_mag(self):
        """Test smallest and largest absolute values"""
        assert Interval(-2.0, 1.0).mig() == 0.0
        assert Interval(-2.0, 1.0).mag() == 2.0
        assert Interval(-3.0, -1.0).mig() == 1.0

    def test_intersect_disjoint(self):
        """Test that disjoint enclosures are reported"""
        with pytest.raises(UndecidableBoxError):
            Interval(0.0, 1.0).intersect(Interval(2.0, 3.0))

    def test_vector_sum(self):
        """Test that the sum of a vector interval encloses the exact sum"""
        values = np.full(10, 0.1)
        total = Interval(values, values).sum()
        assert total.contains(1.0)

    def test_stack(self):
        """Test that scalar intervals become one vector interval"""
        vec = stack([Interval(0.0, 1.0), Interval(2.0, 3.0)])
        assert vec.shape == (2,)
        assert vec[1].lo == 2.0

    def test_sign(self):
        """Test certified signs"""
        assert sign(Interval(0.5, 1.0)) == 1
        assert sign(Interval(-1.0, -0.5)) == -1
        assert sign(-2.0) == -1
        with pytest.raises(UndecidableBoxError):
            sign(Interval(-1.0, 1.0))


class TestContainment:
    """Test that enclosures contain every real result on random inputs"""

    def test_random_operations(self, rng):
        """Test +, -, *, /, sqr and sqrt at random points of random boxes"""
        for _ in range(2000):
            a_lo, b_lo = rng.uniform(-5.0, 5.0, 2)
            a = Interval(a_lo, a_lo + rng.uniform(0.0, 2.0))
            b_pos = rng.uniform(0.1, 5.0)
            b = Interval(b_pos, b_pos + rng.uniform(0.0, 2.0))
            x = rng.uniform(a.lo, a.hi)
            y = rng.uniform(b.lo, b.hi)
            assert (a + b).contains(x + y)
            assert (a - b).contains(x - y)
            assert (a * b).contains(x * y)
            assert (a / b).contains(x / y)
            assert a.sqr().contains(x * x)
            assert b.sqrt().contains(math.sqrt(y))
            assert cross([a, b], [b, a]).contains(x * x - y * y)


class TestDual:
    """Test forward-mode derivatives"""

    def test_float_derivatives(self):
        """Test f(x, y) = |(x, y)| / x at (3, 4)"""
        x = Dual(3.0, np.array([1.0, 0.0]))
        y = Dual(4.0, np.array([0.0, 1.0]))
        f = norm([x, y]) / x
        assert f.value == pytest.approx(5.0 / 3.0)
        assert f.partials == pytest.approx([-16.0 / 45.0, 4.0 / 15.0])

    def test_reciprocal_and_root(self):
        """Test d(1/x) and d(sqrt x) at x = 4"""
        x = Dual(4.0, np.array([1.0]))
        assert (1.0 / x).partials == pytest.approx([-1.0 / 16.0])
        assert sqrt(x).partials == pytest.approx([0.25])
        assert sqr(x).partials == pytest.approx([8.0])

    def test_division_by_zero(self):
        """Test that a zero float denominator raises"""
        x = Dual(0.0, np.array([1.0]))
        with pytest.raises(ZeroDivisionError):
            1.0 / x

    def test_norm_at_origin(self):
        """Test the generalized gradient of the norm where it vanishes"""
        x = Dual(0.0, np.array([1.0, 0.0]))
        y = Dual(0.0, np.array([0.0, 1.0]))
        size = norm([x, y])
        assert size.value == 0.0
        assert np.all(size.partials == 0.0)

    def test_interval_derivative_encloses_pointwise(self, rng):
        """Test that d(x*y) over a box encloses the derivative at its points"""
        x = Dual(Interval(1.0, 2.0), Interval(np.array([1.0, 0.0])))
        y = Dual(Interval(3.0, 4.0), Interval(np.array([0.0, 1.0])))
        f = x * y
        for _ in range(100):
            px, py = rng.uniform(1.0, 2.0), rng.uniform(3.0, 4.0)
            assert f.value.contains(px * py)
            assert f.partials.contains(np.array([py, px]))
