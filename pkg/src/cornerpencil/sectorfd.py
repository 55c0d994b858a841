"""Second-order finite differences for the angle problem in log-polar variables.

Unknowns live on a tensor grid in ``(w, rho)``, ``rho = ln r``.  The interior
equation is ``u_rho_rho + u_w_w = r^2 f``; the two arms carry the (possibly
nonlocal) rows of an :class:`AnglePencil`; the radial ends carry Dirichlet data
from a reference field.  Nonlocal targets off the grid use bilinear interpolation.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import InputError, ResolutionError, SolverError
from .extract import max_workers
from .pencil import AnglePencil
from .singular import row_values

RESIDUAL_TOL = 1e-10


@dataclass
class SectorGrid:
    """``n_omega`` by ``n_rho`` intervals on ``[b1, b2] x [rho0, rho1]``."""

    b1: float
    b2: float
    rho0: float
    rho1: float
    n_omega: int
    n_rho: int

    def __post_init__(self):
        if self.n_omega < 4 or self.n_rho < 4:
            raise ResolutionError("grid needs at least 4 intervals per direction")
        if not self.b2 > self.b1 or not self.rho1 > self.rho0:
            raise InputError("empty grid")

    @classmethod
    def for_pencil(cls, p: AnglePencil, r_range=(0.05, 1.0), n: int = 32,
                   n_omega: Optional[int] = None) -> "SectorGrid":
        return cls(p.b1, p.b2, math.log(r_range[0]), math.log(r_range[1]),
                   n if n_omega is None else n_omega, n)

    @property
    def omegas(self) -> np.ndarray:
        return np.linspace(self.b1, self.b2, self.n_omega + 1)

    @property
    def rhos(self) -> np.ndarray:
        return np.linspace(self.rho0, self.rho1, self.n_rho + 1)

    @property
    def radii(self) -> np.ndarray:
        return np.exp(self.rhos)

    @property
    def h_omega(self) -> float:
        return (self.b2 - self.b1) / self.n_omega

    @property
    def h_rho(self) -> float:
        return (self.rho1 - self.rho0) / self.n_rho

    @property
    def shape(self):
        return self.n_omega + 1, self.n_rho + 1

    def index(self, i, j):
        return i * (self.n_rho + 1) + j


@dataclass
class FDSolution:
    grid: SectorGrid
    values: np.ndarray
    residual: float

    def error(self, exact: Callable) -> float:
        W, R = np.meshgrid(self.grid.omegas, self.grid.radii, indexing="ij")
        return float(np.max(np.abs(self.values - exact(W, R))))


def _weights_1d(x: float, x0: float, h: float, n: int):
    """Linear interpolation stencil ``[(index, weight), ...]`` or ``None`` outside."""
    t = (x - x0) / h
    if t < -1e-12 or t > n + 1e-12:
        return None
    k = min(max(int(math.floor(t)), 0), n - 1)
    s = t - k
    return [(k, 1.0 - s), (k + 1, s)]


def assemble(p: AnglePencil, grid: SectorGrid, exact: Callable,
             f: Optional[Callable] = None):
    """Sparse matrix and right-hand side; rows data and radial ends come from ``exact``."""
    n_w, n_r = grid.shape
    hw, hr = grid.h_omega, grid.h_rho
    W, R = np.meshgrid(grid.omegas, grid.radii, indexing="ij")
    N = n_w * n_r
    rows_i, cols_i, vals = [], [], []
    b = np.zeros(N, dtype=complex)

    def put(r, c, v):
        rows_i.append(r)
        cols_i.append(c)
        vals.append(v)

    fvals = np.zeros_like(W) if f is None else np.asarray(f(W, R), dtype=complex)

    class _Exact:
        def __call__(self, w, r):
            return exact(w, r)

    data = row_values(p, _Exact(), grid.radii)

    # radial ends
    for i in range(n_w):
        for j in (0, n_r - 1):
            k = grid.index(i, j)
            put(k, k, 1.0)
            b[k] = exact(grid.omegas[i], grid.radii[j])

    # interior
    cw, cr = 1.0 / hw ** 2, 1.0 / hr ** 2
    for i in range(1, n_w - 1):
        for j in range(1, n_r - 1):
            k = grid.index(i, j)
            put(k, k, -2 * cw - 2 * cr)
            put(k, grid.index(i + 1, j), cw)
            put(k, grid.index(i - 1, j), cw)
            put(k, grid.index(i, j + 1), cr)
            put(k, grid.index(i, j - 1), cr)
            b[k] = R[i, j] ** 2 * fvals[i, j]

    # arm rows
    for s, row in enumerate(p.rows):
        i0 = 0 if row.endpoint == "lower" else n_w - 1
        sgn = 1.0 if row.endpoint == "lower" else -1.0
        a0, a1 = row.local
        for j in range(1, n_r - 1):
            k = grid.index(i0, j)
            put(k, k, a0)
            if a1 != 0:
                # one-sided second-order derivative into the sector
                put(k, grid.index(i0, j), a1 * sgn * (-1.5) / hw)
                put(k, grid.index(i0 + int(sgn), j), a1 * sgn * 2.0 / hw)
                put(k, grid.index(i0 + 2 * int(sgn), j), a1 * sgn * (-0.5) / hw)
            rhs = data[s, j]
            nl = row.nonlocal_
            if nl is not None:
                c = p.target_angle(row)
                coef = nl.e * nl.beta ** (-nl.order)
                t0, t1 = nl.tau
                rho_t = grid.rhos[j] + math.log(nl.beta)
                wr = _weights_1d(rho_t, grid.rho0, hr, grid.n_rho)
                ww = _weights_1d(c, grid.b1, hw, grid.n_omega)
                if ww is None:
                    raise InputError("nonlocal target angle outside the sector")
                if wr is None:
                    # target radius beyond the grid: move the exact value to the data
                    rt = math.exp(rho_t)
                    val = t0 * exact(c, rt)
                    if t1 != 0:
                        d = 1e-6
                        val += t1 * (exact(c + d, rt) - exact(c - d, rt)) / (2 * d)
                    rhs = rhs - coef * val
                else:
                    for jj, wj in wr:
                        for ii, wi in ww:
                            if t0 != 0:
                                put(k, grid.index(ii, jj), coef * t0 * wi * wj)
                        if t1 != 0:
                            ic = min(max(int(round((c - grid.b1) / hw)), 1), n_w - 2)
                            wc = (c - grid.omegas[ic]) / hw
                            # derivative from a quadratic through ic-1, ic, ic+1
                            d = [(-0.5 + wc), -2 * wc, (0.5 + wc)]
                            for off, dv in zip((-1, 0, 1), d):
                                put(k, grid.index(ic + off, jj), coef * t1 * wj * dv / hw)
            b[k] = rhs

    A = sp.csc_matrix((np.asarray(vals, dtype=complex), (rows_i, cols_i)), shape=(N, N))
    return A, b


def solve(p: AnglePencil, grid: SectorGrid, exact: Callable,
          f: Optional[Callable] = None) -> FDSolution:
    """Sparse LU solve with a relative residual check."""
    A, b = assemble(p, grid, exact, f)
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}", float("inf")) from exc
    x = lu.solve(b)
    bn = max(np.linalg.norm(b), 1e-300)
    res = float(np.linalg.norm(A @ x - b) / bn)
    if not np.all(np.isfinite(x)) or res > RESIDUAL_TOL:
        diag = np.abs(lu.U.diagonal())
        cond = float(diag.max() / max(diag.min(), 1e-300))
        raise SolverError(f"relative residual {res:.2e} exceeds {RESIDUAL_TOL:.0e}", cond)
    return FDSolution(grid, x.reshape(grid.shape), res)


@dataclass
class MMSReport:
    sizes: tuple
    errors: tuple
    orders: tuple
    residuals: tuple
    solutions: list = field(default_factory=list, repr=False)

    @property
    def observed_order(self) -> float:
        return float(self.orders[-1]) if self.orders else float("nan")

    def to_dict(self) -> dict:
        return {"sizes": list(self.sizes), "errors": list(self.errors),
                "orders": list(self.orders), "residuals": list(self.residuals)}

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "max_error", "order", "residual"])
            for k, n in enumerate(self.sizes):
                order = "" if k == 0 else f"{self.orders[k - 1]:.6f}"
                w.writerow([n, f"{self.errors[k]:.17g}", order, f"{self.residuals[k]:.3e}"])


def mms_study(p: AnglePencil, exact: Callable, f: Optional[Callable] = None,
              sizes: Sequence[int] = (32, 64, 128), r_range=(0.05, 1.0),
              omega_ratio: float = 1.0) -> MMSReport:
    """Solve on a ladder of grids and report max-norm errors and observed orders.

    ``sizes`` are radial interval counts; the angular count is ``omega_ratio`` times that.
    """
    sizes = tuple(int(n) for n in sizes)
    if len(sizes) < 2:
        raise InputError("need at least two grid sizes")

    def run(n):
        n_w = max(4, int(round(n * omega_ratio)))
        return solve(p, SectorGrid.for_pencil(p, r_range, n, n_w), exact, f)

    with ThreadPoolExecutor(max_workers=max_workers()) as ex:
        sols = list(ex.map(run, sizes))
    errs = tuple(s.error(exact) for s in sols)
    orders = tuple(math.log(errs[k] / errs[k + 1]) / math.log(sizes[k + 1] / sizes[k])
                   for k in range(len(sizes) - 1))
    return MMSReport(sizes, errs, orders, tuple(s.residual for s in sols), sols)
