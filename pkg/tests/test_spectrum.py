import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerpencil.errors import CapabilityError, InputError, StripViolationError
from cornerpencil.pencil import PeriodicPencil
from cornerpencil.spectrum import (WeightStrip, find_eigenvalues, find_zeros, jordan_chains,
                                   jordan_chains_matrix, kappa_report, local_smith,
                                   local_smith_matrix, profile_chain_residual)


def test_find_zeros_with_multiplicity():
    f = lambda z: (z - 0.5j) ** 2 * (z - (0.3 + 1.2j))
    out = find_zeros(f, 0.1, 2.0, re_bound=3)
    assert len(out) == 2
    (z1, m1), (z2, m2) = out
    assert m1 == 2 and abs(z1 - 0.5j) < 1e-7
    assert m2 == 1 and abs(z2 - (0.3 + 1.2j)) < 1e-12


def test_dirichlet_spectrum(pd):
    found = find_eigenvalues(pd, (0.1, 3.0))
    assert [m for _, m in found] == [1, 1, 1, 1]
    for (z, _), k in zip(found, range(1, 5)):
        assert abs(z - 2j * k / 3) < 1e-10


def test_nonlocal_spectrum(p7):
    found = find_eigenvalues(p7, (1.0, 4.5))
    exact = [4j / 3, 2j, 8j / 3, 4j]
    assert len(found) == 4
    for (z, m), e in zip(found, exact):
        assert m == 1 and abs(z - e) < 1e-9


def test_edge_eigenvalue_policy(p7):
    with pytest.raises(StripViolationError) as info:
        find_eigenvalues(p7, (4 / 3, 1.9))
    assert abs(info.value.offending - 4j / 3) < 1e-9
    hits = []
    assert find_eigenvalues(p7, (4 / 3, 1.9), on_edge="exclude", edge_hits=hits) == []
    assert len(hits) == 1


def test_weight_strip_bounds_and_validation():
    s = WeightStrip(a=2.9, a1=2.0)
    assert s.bounds == pytest.approx((1.0, 1.9))
    with pytest.raises(InputError):
        WeightStrip(a=1.0, a1=2.0)
    with pytest.raises(InputError):
        WeightStrip(a=3.5, a1=2.0)
    assert WeightStrip(a=3.5, a1=2.0, relaxed=True).bounds == pytest.approx((1.0, 2.5))
    with pytest.raises(InputError):
        WeightStrip(a=2.5, a1=2.0, m=0)


def _mat(a, b, c, d):
    # vectorized 2x2 matrix function with shape (..., 2, 2)
    def m(z):
        z = np.asarray(z, dtype=complex)
        out = np.empty(z.shape + (2, 2), dtype=complex)
        out[..., 0, 0], out[..., 0, 1] = a(z), b(z)
        out[..., 1, 0], out[..., 1, 1] = c(z), d(z)
        return out
    return m


LAM0 = 0.7j
ZERO = lambda z: 0 * z
ONE = lambda z: 1 + 0 * z
LIN = lambda z: z - LAM0


def test_smith_synthetic():
    assert local_smith_matrix(_mat(LIN, ZERO, ZERO, LIN), LAM0).partial_mults == (1, 1)
    sq = lambda z: (z - LAM0) ** 2
    assert local_smith_matrix(_mat(ONE, ZERO, ZERO, sq), LAM0).partial_mults == (2,)
    assert local_smith_matrix(_mat(LIN, ONE, ZERO, LIN), LAM0).partial_mults == (2,)


def test_synthetic_chain_structure():
    smith, chains, res = jordan_chains_matrix(_mat(LIN, ONE, ZERO, LIN), LAM0)
    assert smith.partial_mults == (2,)
    assert res < 1e-10
    c0 = chains[0][0]
    assert abs(c0[1]) < 1e-12  # kernel of [[0, 1], [0, 0]] is e1


def test_smith_rejects_regular_point(p7):
    with pytest.raises(InputError):
        local_smith(p7, 1.5j)


def test_smith_periodic_not_supported():
    with pytest.raises(CapabilityError):
        local_smith(PeriodicPencil(), 1j)


def test_angle_chain_profile(p7):
    ch = jordan_chains(p7, 4j / 3)
    phi = ch.chains[0][0]
    w = np.linspace(0.1, 2.2, 9)
    ratio = phi(w) / np.sin(4 * w / 3)
    assert np.allclose(ratio, ratio[0], rtol=1e-12)
    assert profile_chain_residual(p7, 4j / 3, ch.chains[0]) < 1e-12


def test_periodic_chains():
    P = PeriodicPencil()
    assert jordan_chains(P, 0).partial_mults == (2,)
    for n in (1, 2, 3):
        assert jordan_chains(P, 1j * n).partial_mults == (1, 1)
        assert jordan_chains(P, -1j * n).partial_mults == (1, 1)


@pytest.mark.parametrize("bounds,kappa", [((1.0, 1.9), 1), ((2.1, 2.5), 0), ((1.5, 2.5), 3)])
def test_kappa_values(p7, bounds, kappa):
    rep = kappa_report(bounds, p7, on_edge="exclude")
    assert rep.kappa == kappa


def test_kappa_counts_both_periodic_modes(p7):
    # 4i/3 (simple) plus the two-dimensional periodic eigenspace at i
    assert kappa_report((0.5, 1.5), p7).kappa == 3


def test_kappa_statement_and_edges(p7):
    rep = kappa_report((1.0, 1.9), p7, on_edge="exclude")
    assert rep.statement.startswith("ind L_{2.9} = ind L_{2} + 1")
    assert "not applicable" in rep.statement
    assert rep.to_dict()["edge_eigenvalues"][0]["lambda"] == [0.0, 1.0]
    with pytest.raises(StripViolationError):
        kappa_report((1.0, 1.9), p7)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.55, 2.45).filter(lambda x: min(abs(x - k) for k in (1, 2, 4 / 3, 8 / 3)) > 1e-3))
def test_kappa_additive_over_splits(split_im):
    from cornerpencil.acceptance import halfplane_pencil
    strip = WeightStrip.from_bounds(0.5, 2.5)
    rep = kappa_report(strip, halfplane_pencil(), split_weights=[split_im - strip.shift],
                       on_edge="exclude")
    assert sum(k for _, k in rep.substrips) == rep.kappa
