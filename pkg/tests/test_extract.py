import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerpencil.errors import IllPosedFitError, InputError, ResolutionError
from cornerpencil.extract import (DEFAULT_ETA1, SampledField, a12_trace, a12_value, build_model,
                                  extract_both, extract_c1_functional, extract_c2_functional,
                                  extract_fit, manufactured_fields, coefficients_from_rhs)
from cornerpencil.singular import Cutoff

C1, C2 = 1 + 2j, -0.7


def test_round_trip_both_routes(model7):
    g1, g2 = manufactured_fields(model7, C1, C2)
    rep = extract_both(model7, g1, g2)
    assert abs(rep.c1[0] - C1) < 1e-10
    assert abs(rep.c2[0] - C2) < 1e-10 and abs(rep.c2[1]) < 1e-10
    assert rep.residuals["c1_discrepancy"] < 1e-8
    d = rep.to_dict()
    assert d["c1"][0] == pytest.approx([1.0, 2.0])


def test_cutoff_independence(model7):
    g1, g2 = manufactured_fields(model7, C1, C2)
    base = extract_c2_functional(g2, model7)
    for eta in (Cutoff(0.05, 0.2), Cutoff(0.3, 0.9)):
        assert np.allclose(extract_c2_functional(g2, model7, eta), base, atol=1e-10)
    c1a = extract_c1_functional(g1, model7, base)
    c1b = extract_c1_functional(g1, model7, base, Cutoff(0.05, 0.15))
    assert abs(c1a[0] - c1b[0]) < 1e-10


def test_zero_field_gives_zero(model7):
    g1, g2 = manufactured_fields(model7, 0.0, 0.0, smooth=False)
    assert np.allclose(extract_c2_functional(g2, model7), 0, atol=1e-14)
    assert abs(extract_c1_functional(g1, model7, [0, 0])[0]) < 1e-14


@settings(max_examples=10, deadline=None)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_extraction_is_linear(c1, c2):
    from cornerpencil.acceptance import halfplane_pencil
    model = _MODEL
    g1, g2 = manufactured_fields(model, c1, c2)
    c2f = extract_c2_functional(g2, model)
    c1f = extract_c1_functional(g1, model, c2f)
    assert abs(c2f[0] - c2) < 1e-9 * (1 + abs(c2))
    assert abs(c1f[0] - c1) < 1e-9 * (1 + abs(c1) + abs(c2))


_MODEL = None


@pytest.fixture(autouse=True)
def _share_model(model7):
    global _MODEL
    _MODEL = model7


def test_fit_guards(model7):
    g1, _ = manufactured_fields(model7, C1, C2)
    with pytest.raises(InputError):
        # radial exponent -0.03 is too close to the smooth exponent 0
        bad = type(model7.u1)(0.03j, model7.u1.profiles, "g1")
        extract_fit(g1, [bad])
    with pytest.raises(IllPosedFitError):
        extract_fit(g1, [model7.u1, model7.u12[0], model7.u12[1]])


def test_sampled_field_guards():
    with pytest.raises(ResolutionError):
        SampledField(lambda w, r: 0 * w, np.linspace(0, 1, 8), np.linspace(0.1, 1, 8),
                     np.zeros((8, 8)))


def test_from_grid_closure():
    f = lambda w, r: r * np.cos(w)
    w = np.linspace(0, math.pi, 40)
    rho = np.linspace(math.log(0.1), 0.0, 40)
    W, R = np.meshgrid(w, np.exp(rho), indexing="ij")
    sf = SampledField.from_grid(w, rho, f(W, R), closure=f)
    assert abs(sf(0.5, 0.5) - f(0.5, 0.5)) < 1e-5
    assert sf(0.5, 1e-4) == pytest.approx(f(0.5, 1e-4))
    bare = SampledField.from_grid(w, rho, f(W, R))
    with pytest.raises(ResolutionError):
        bare(0.5, 1e-4)


def test_a12_scaling(model7):
    tr = a12_trace(model7, [0.2, 0.1, 0.05, 0.025])
    assert np.all(np.diff(np.abs(tr.values)) < 0)
    assert abs(tr.limit) < 1e-10
    assert tr.slope == pytest.approx(1 / 3, rel=1e-6)
    # exact power law: the bracket is scale-covariant
    ratio = tr.values[1] / tr.values[0]
    assert abs(ratio - 0.5 ** (1 / 3)) < 1e-10


def test_a12_identical_cutoffs_vanish():
    from cornerpencil.acceptance import halfplane_pencil
    m = build_model(halfplane_pencil(), 4j / 3, 1j, eta2=DEFAULT_ETA1)
    assert abs(a12_value(m, 0.1)) < 1e-12


def test_a12_input_checks(model7):
    with pytest.raises(InputError):
        a12_trace(model7, [0.1, 0.2, 0.05, 0.01])


def test_coefficients_from_rhs(model7):
    out = coefficients_from_rhs(model7, C1, C2)
    assert abs(out[0] - C2) < 1e-10 and abs(out[1] - C1) < 1e-10
