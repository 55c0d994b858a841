import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerpencil.errors import GeometryError, InputError, ResonanceError
from cornerpencil.pencil import PeriodicPencil
from cornerpencil.singular import (Cutoff, build_f12, composite, log_power_basis, power_solution,
                                   remainder_decay, residual, smoothstep, solve_u12)
from cornerpencil.spectrum import jordan_chains

P = PeriodicPencil()


def test_power_solution_is_harmonic(p7):
    u = power_solution(jordan_chains(p7, 4j / 3))
    assert residual(p7, u, np.geomspace(0.01, 3, 7)) < 1e-14
    w, r = 0.8, 0.3
    assert abs(u(w, r) / (r ** (-4 / 3) * math.sin(4 * w / 3)) - u(1.1, 2.0) /
               (2.0 ** (-4 / 3) * math.sin(4 * 1.1 / 3))) < 1e-12


def test_log_power_solution_periodic():
    c0 = jordan_chains(P, 0)
    u1 = power_solution(c0, 1)
    u0 = power_solution(c0, 0)
    s = 1 / u0(0.0, 1.0)
    r = np.array([0.1, 1.0, 7.0])
    assert np.allclose(s * u1(0.4, r), 1j * np.log(r), atol=1e-15)
    assert all(c.is_zero for c in u1.laplacian_coefficients())


def test_log_power_basis():
    b = log_power_basis(1j, np.array([0.5, 2.0]), 2)
    r = np.array([0.5, 2.0])
    assert np.allclose(b[0], r ** -1.0)
    assert np.allclose(b[2], r ** -1.0 * (1j * np.log(r)) ** 2 / 2)


def test_perturbed_profile_has_residual(p7):
    u = power_solution(jordan_chains(p7, 4j / 3))
    bad = type(u)(u.lam * 1.001, u.profiles, u.pole, u.shift, u.kind)
    assert residual(p7, bad, np.geomspace(0.1, 2, 5)) > 1e-4


def test_u12_closed_form(p7):
    u2 = power_solution(jordan_chains(P, -1j))
    u12 = solve_u12(p7, build_f12(u2, 1.0))
    rng = np.random.default_rng(0)
    w, r = rng.uniform(0, math.pi, 100), rng.uniform(0.01, 3, 100)
    assert np.max(np.abs(u12(w, r) + r * (np.cos(w) + np.sin(w)))) < 1e-10


def test_u12_resonant(p7):
    u2 = power_solution(jordan_chains(P, 2j))
    f = build_f12(u2, 1.0)
    with pytest.raises(ResonanceError):
        solve_u12(p7, f)
    u12 = solve_u12(p7, f, resonant=True)
    assert u12.k == 1 and u12.meta["resonant"]
    assert residual(p7, u12, np.geomspace(0.05, 2, 9), rhs=f) < 1e-8


def test_f12_log_case():
    c0 = jordan_chains(P, 0)
    f = build_f12(power_solution(c0, 1), 1.0)
    assert f.degree == 1


def test_cutoff_values_and_scaling():
    eta = Cutoff(0.2, 0.6)
    assert eta(0.1) == 1.0 and eta(0.7) == 0.0
    assert 0 < eta(0.35) < 1
    assert eta.scaled(0.5).r_out == pytest.approx(0.3)
    with pytest.raises(GeometryError):
        Cutoff(0.5, 0.2)
    with pytest.raises(InputError):
        eta.of_rho(0.0, 3)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2.0, -0.6))
def test_cutoff_derivatives_match_finite_differences(rho):
    eta = Cutoff(0.2, 0.5)
    h = 1e-5
    d1 = (eta.of_rho(rho + h) - eta.of_rho(rho - h)) / (2 * h)
    d2 = (eta.of_rho(rho + h) - 2 * eta.of_rho(rho) + eta.of_rho(rho - h)) / h ** 2
    assert abs(eta.of_rho(rho, 1) - d1) < 1e-7
    assert abs(eta.of_rho(rho, 2) - d2) < 1e-3


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_smoothstep_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert 0 <= smoothstep(lo) <= smoothstep(hi) <= 1


def test_composite_geometry(p7):
    u1 = power_solution(jordan_chains(p7, 4j / 3))
    u2 = power_solution(jordan_chains(P, 1j))
    f = build_f12(u2, 1.0)
    u12 = solve_u12(p7, f)
    with pytest.raises(GeometryError):
        composite(p7, u1, u2, u12, Cutoff(0.2, 0.6), Cutoff(0.2, 0.6), 1.0, 0.0, 0, 1.0)
    comp = composite(p7, u1, u2, u12, Cutoff(0.1, 0.3), Cutoff(0.1, 0.3), 1.0, 0.0, 0, 1.0)
    rep = remainder_decay(comp, np.geomspace(1e-3, 5e-2, 5))
    assert rep["exponent"] == math.inf
