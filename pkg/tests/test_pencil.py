import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerpencil.errors import InputError
from cornerpencil.pencil import (AnglePencil, Nonlocal, NonlocalRow, char_det, char_matrix,
                                 fundamental_derivative, fundamental_system, sinhc)

lam_strategy = st.complex_numbers(max_magnitude=4, allow_nan=False, allow_infinity=False)


def test_dirichlet_determinant_closed_form(pd):
    # det = sinh(lam * 3pi/2) / lam for rows u(b1), u(b2)
    for lam in (0.3 + 0.2j, 1.1j, -0.7 + 2.1j, 1e-9 + 0j):
        assert abs(char_det(pd, lam) - sinhc(lam * 1.5 * math.pi) * 1.5 * math.pi) < 1e-12 * \
            max(1, abs(char_det(pd, lam)))


def test_nonlocal_determinant_factorization(p7):
    # proportional to sinh z (2 cosh z + 1) / lam with z = lam pi / 2
    pts = [0.3 + 0.2j, 1.1j, -0.7 + 2.1j, 0.9 - 0.4j]
    ratios = []
    for lam in pts:
        z = lam * math.pi / 2
        ratios.append(char_det(p7, lam) * lam / (np.sinh(z) * (2 * np.cosh(z) + 1)))
    assert np.allclose(ratios, ratios[0], rtol=1e-12)


def test_fundamental_system_initial_values():
    s1, s2 = fundamental_system(0.7 + 0.3j, b1=0.4, lo=0.4, hi=3.0)
    assert abs(s1(0.4) - 1) < 1e-15 and abs(s2(0.4)) < 1e-15
    assert abs(s1.derivative()(0.4)) < 1e-15 and abs(s2.derivative()(0.4) - 1) < 1e-14


@pytest.mark.parametrize("lam0", [0.0, 0.05j, 1.3 + 0.2j])
@pytest.mark.parametrize("q", [1, 2])
def test_fundamental_derivative_matches_finite_difference(lam0, q):
    h = 1e-3
    w = np.linspace(0, 2, 7)

    def vals(lam):
        s1, s2 = fundamental_system(lam, 0.0, 0.0, 2.0)
        return np.array([s1(w), s2(w)])

    if q == 1:
        fd = (vals(lam0 + h) - vals(lam0 - h)) / (2 * h)
    else:
        fd = (vals(lam0 + h) - 2 * vals(lam0) + vals(lam0 - h)) / h ** 2 / 2
    s1, s2 = fundamental_derivative(lam0, q, 0.0, 0.0, 2.0)
    assert np.allclose(np.array([s1(w), s2(w)]), fd, atol=1e-5)


def test_series_and_closed_form_agree_near_switch():
    lam_a, lam_b = 0.2499 / 2, 0.2501 / 2
    for q in range(3):
        a = fundamental_derivative(lam_a, q, 0.0, 0.0, 2.0)
        b = fundamental_derivative(lam_b, q, 0.0, 0.0, 2.0)
        w = np.linspace(0, 2, 5)
        for fa, fb in zip(a, b):
            assert np.allclose(fa(w), fb(w), atol=1e-3)


def test_char_matrix_jets_match_entries(p7):
    cm = char_matrix(p7, 1.1j, jet_order=2)
    h = 1e-4
    from cornerpencil.pencil import char_entries
    d1 = (char_entries(p7, 1.1j + h) - char_entries(p7, 1.1j - h)) / (2 * h)
    assert np.allclose(cm.coeff(1), d1, atol=1e-7)


def test_pencil_rejects_bad_geometry():
    with pytest.raises(InputError):
        AnglePencil.dirichlet(1.0, 1.0)
    with pytest.raises(InputError):
        AnglePencil(0, math.pi, (NonlocalRow("lower"),
                                 NonlocalRow("upper", nonlocal_=Nonlocal(1.0, 0.5))))
    with pytest.raises(InputError):
        Nonlocal(1.0, 0.2, beta=-1.0)


def test_rows_are_sorted_by_arm():
    p = AnglePencil(0, math.pi, (NonlocalRow("upper"), NonlocalRow("lower")))
    assert [r.endpoint for r in p.rows] == ["lower", "upper"]


@settings(max_examples=40, deadline=None)
@given(lam_strategy)
def test_real_pencil_symmetry(lam):
    # real coefficients: det(-conj lam) = conj det(lam)
    from cornerpencil.acceptance import halfplane_pencil
    p = halfplane_pencil()
    a = char_det(p, lam)
    b = char_det(p, -np.conj(lam))
    assert abs(b - np.conj(a)) <= 1e-9 * (1 + abs(a))
