import math

import numpy as np
import pytest

from cornerpencil.errors import ResolutionError
from cornerpencil.sectorfd import SectorGrid, assemble, mms_study, solve
from cornerpencil.singular import power_solution
from cornerpencil.spectrum import jordan_chains


def test_exact_for_log_polar_bilinear(p7):
    # rho * w and rho + w are discretely harmonic; the nonlocal target is a grid line
    exact = lambda w, r: np.log(r) * w + 2 * w - 0.5 * np.log(r)
    sol = solve(p7, SectorGrid.for_pencil(p7, (0.1, 1.0), 16), exact)
    assert sol.error(exact) < 1e-11


def test_second_order_convergence(p7):
    u1 = power_solution(jordan_chains(p7, 4j / 3))
    exact = lambda w, r: u1(w, r) + r ** 2 * np.cos(2 * w)
    rep = mms_study(p7, exact, sizes=(16, 32, 64))
    assert all(1.8 < o < 2.2 for o in rep.orders)


def test_dirichlet_with_source(pd):
    # u = r^2 has Laplacian 4
    exact = lambda w, r: r ** 2 + 0 * w
    rep = mms_study(pd, exact, f=lambda w, r: 4 + 0 * w, sizes=(16, 32))
    assert 1.8 < rep.orders[0] < 2.2


def test_grid_guards(p7):
    with pytest.raises(ResolutionError):
        SectorGrid.for_pencil(p7, (0.1, 1.0), 2)


def test_csv_output(p7, tmp_path):
    exact = lambda w, r: r * np.sin(w)
    rep = mms_study(p7, exact, sizes=(8, 16))
    path = tmp_path / "c.csv"
    rep.to_csv(str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "n,max_error,order,residual" and len(lines) == 3


def test_thread_setting(p7, monkeypatch):
    monkeypatch.setenv("PENCIL_THREADS", "1")
    exact = lambda w, r: r * np.sin(w)
    rep = mms_study(p7, exact, sizes=(8, 16))
    assert len(rep.errors) == 2
