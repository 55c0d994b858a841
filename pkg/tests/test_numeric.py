import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerpencil.errors import ContourDegeneracyError
from cornerpencil.numeric import (ExpPoly, PiecewiseExpPoly, Rect, analytic_jet, gauss_legendre,
                                  inner, winding_count, winding_count_circle)


def test_exppoly_eval_and_derivative():
    # sin(2w) = (e^{2iw} - e^{-2iw}) / 2i
    f = ExpPoly(((1 / 2j, 2j, 0), (-1 / 2j, -2j, 0)), 0.0, math.pi)
    w = np.linspace(0, math.pi, 11)
    assert np.allclose(f(w), np.sin(2 * w), atol=1e-15)
    assert np.allclose(f.derivative()(w), 2 * np.cos(2 * w), atol=1e-14)
    assert np.allclose(f.derivative(2)(w), -4 * np.sin(2 * w), atol=1e-14)


def test_exppoly_polynomial_factor():
    # w e^{w} on [0, 1], derivative (1 + w) e^{w}
    f = ExpPoly(((1.0, 1.0, 1),), 0.0, 1.0)
    w = np.linspace(0, 1, 5)
    assert np.allclose(f(w), w * np.exp(w))
    assert np.allclose(f.derivative()(w), (1 + w) * np.exp(w))


def test_inner_closed_form():
    s = ExpPoly(((1 / 2j, 1j, 0), (-1 / 2j, -1j, 0)), 0.0, math.pi)
    assert abs(inner(s, s) - math.pi / 2) < 1e-14
    one = ExpPoly.constant(1.0, 0.0, 1.0)
    ramp = ExpPoly(((1.0, 0.0, 1),), 0.0, 1.0)
    assert abs(inner(ramp, one) - 0.5) < 1e-15
    assert abs(inner(ramp, ramp) - 1 / 3) < 1e-15


def test_piecewise_eval_and_limits():
    a = ExpPoly.constant(1.0, 0.0, 1.0)
    b = ExpPoly(((2.0, 0.0, 1),), 1.0, 2.0, origin=1.0)
    f = PiecewiseExpPoly((a, b))
    assert f(0.5) == 1.0
    assert f(1.5) == pytest.approx(1.0)
    left, right = f.limits(1.0)
    assert left == 1.0 and right == 0.0
    assert abs(inner(f, PiecewiseExpPoly.wrap(ExpPoly.constant(1.0, 0.0, 2.0))) - 2.0) < 1e-14


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(-1.0, 2.0, 5)
    assert abs(np.sum(w * x ** 9) - (2 ** 10 - 1) / 10) < 1e-11


def test_winding_polynomial():
    box = Rect(-2, 2, -2, 2)
    assert winding_count(lambda z: (z - 0.3j) ** 2 * (z + 1), box) == 3
    assert winding_count_circle(lambda z: z ** 2 - 1, 0.0, 1.5) == 2


def test_winding_sinh_example():
    # zeros 2i/3 and 4i/3 both lie in the band 0.5 < Im < 1.5
    f = lambda z: np.sinh(1.5 * math.pi * z) / z
    assert winding_count(f, Rect(-3, 3, 0.5, 1.5)) == 2


def test_winding_zero_on_contour_raises():
    with pytest.raises(ContourDegeneracyError):
        winding_count(lambda z: z - 1.0, Rect(-1, 1, -1, 1))


def test_analytic_jet_taylor():
    jet = analytic_jet(np.exp, 0.5j, 6)
    for k in range(7):
        # roundoff grows like radius**-k
        assert abs(jet.coeffs[k] - np.exp(0.5j) / math.factorial(k)) < 1e-14 * 10.0 ** k


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=2, max_size=2),
       st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                min_size=2, max_size=2))
def test_inner_is_hermitian(a, b):
    f = ExpPoly(((a[0], 1j, 0), (a[1], 0.5, 1)), 0.0, 2.0)
    g = ExpPoly(((b[0], -2j, 0), (b[1], 0.0, 2)), 0.0, 2.0)
    assert abs(inner(f, g) - np.conj(inner(g, f))) < 1e-10 * (1 + abs(inner(f, g)))
    assert inner(f, f).real >= -1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.95))
def test_rect_split_partitions(frac):
    r = Rect(-1, 3, 0.5, 2)
    parts = r.split(frac)
    area = sum((p.x1 - p.x0) * (p.y1 - p.y0) for p in parts)
    assert area == pytest.approx((r.x1 - r.x0) * (r.y1 - r.y0))
