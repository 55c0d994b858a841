import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerpencil.adjoint import (adjoint_eigenvector, adjoint_power, annihilation_check,
                                  cross_pairing, expected_pattern, normalize_pair, solve_v21,
                                  transmission_det, transmission_residual, v21_weak_residual)
from cornerpencil.errors import CapabilityError, MultiplicityError, ResonanceError
from cornerpencil.pencil import (AnglePencil, Nonlocal, NonlocalRow, PeriodicPencil, char_det)
from cornerpencil.spectrum import jordan_chains

P = PeriodicPencil()


def test_dirichlet_adjoint_eigenvector(pd):
    t = adjoint_eigenvector(pd, 2j / 3)
    w = np.linspace(0.2, 4.0, 7)
    ratio = t.psi(w) / np.sin(2 * w / 3)
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    dpsi = t.psi.derivative()
    # arm weights are the normal derivatives of the density
    assert abs(t.chi[0] + dpsi(0.0)) < 1e-12 * abs(t.chi[0])
    assert abs(t.chi[1] - dpsi(1.5 * math.pi)) < 1e-12 * abs(t.chi[1])
    assert transmission_residual(pd, t) < 1e-12


def test_adjoint_requires_eigenvalue(p7):
    with pytest.raises(MultiplicityError):
        adjoint_eigenvector(p7, 1.5j)


def test_unsupported_rows_raise():
    p = AnglePencil(0, math.pi, (NonlocalRow("lower"),
                                 NonlocalRow("upper", nonlocal_=Nonlocal(1.0, -math.pi / 2,
                                                                         tau=(1.0, 0.5)))))
    with pytest.raises(CapabilityError):
        adjoint_eigenvector(p, 1j)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.2, 4.4))
def test_transmission_determinant_mirrors_characteristic(x, y):
    from cornerpencil.acceptance import halfplane_pencil
    p = halfplane_pencil()
    lam = complex(x, y)
    ref = transmission_det(p, 0.4 + 1.1j) / np.conj(char_det(p, 0.4 + 1.1j))
    got = transmission_det(p, lam) / np.conj(char_det(p, lam))
    assert abs(got - ref) < 1e-8 * abs(ref)


def test_normalization_and_cross_pairing(p7):
    c1 = jordan_chains(p7, 4j / 3)
    a1 = normalize_pair(p7, c1)
    assert abs(a1.norm_matrix.ravel()[0] - 1) < 1e-10
    a2 = normalize_pair(p7, jordan_chains(p7, 2j))
    assert abs(cross_pairing(p7, 4j / 3, c1.chains[0][0], 2j, a2.chains[0][0])) < 1e-8


def test_periodic_log_normalization():
    c0 = jordan_chains(P, 0)
    a0 = normalize_pair(P, c0)
    E = expected_pattern(c0)
    mask = ~np.isnan(E.real)
    assert np.max(np.abs(a0.norm_matrix[mask] - E[mask])) < 1e-8
    # with the unit-constant chain the adjoint pair is (-1/(2 pi), 0) up to the chain scale
    psi0, psi1 = (t.psi for t in a0.chains[0])
    scale = c0.chains[0][0](0.0)
    assert abs(psi0(1.0) * np.conj(scale) + 1 / (2 * math.pi)) < 1e-12
    assert abs(psi1(1.0)) < 1e-12


def test_periodic_two_dimensional_normalization():
    c = jordan_chains(P, 1j)
    a = normalize_pair(P, c)
    assert np.allclose(a.norm_matrix[:, :, 0, 0], np.eye(2), atol=1e-12)


def test_annihilation(p7, pd):
    aps = adjoint_power(normalize_pair(p7, jordan_chains(p7, 4j / 3)))
    assert annihilation_check(p7, aps) < 1e-6
    apd = adjoint_power(normalize_pair(pd, jordan_chains(pd, 2j / 3)))
    assert annihilation_check(pd, apd) < 1e-6


@pytest.mark.parametrize("theta", [0.0, 0.7])
def test_v21_weak_identity(p7, theta):
    acs = normalize_pair(p7, jordan_chains(p7, 4j / 3))
    aps = adjoint_power(acs)
    v21 = solve_v21(acs, 1.0, theta)
    assert v21_weak_residual(aps, v21, 1.0, theta) < 1e-6


def test_v21_resonant(p7):
    acs = normalize_pair(p7, jordan_chains(p7, 2j))
    with pytest.raises(ResonanceError):
        solve_v21(acs, 1.0, 0.0)
    v21 = solve_v21(acs, 1.0, 0.0, resonant=True)
    assert v21_weak_residual(adjoint_power(acs), v21, 1.0) < 1e-6
