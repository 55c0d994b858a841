"""Coefficient extraction near the two conjugation points.

``g1`` is the corner of the angle ``b1 < w < b2``; ``g2`` is an interior point whose
polar axis carries the image of the coupled arm.  Near ``g2`` the field is
``c2 u2 + smooth``, near ``g1`` it is ``c1 u1 + c2 u12 + smooth``.

All pairings are taken in log-polar variables ``rho = ln r``, where
``int Lap(F) conj(V) dy = int int (F_rr + F_ww) conj(V) drho dw`` and arm integrals
carry the measure ``dr = r drho``.  The sesquilinear convention gives
``<a, i b> = -i <a, b>``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .adjoint import (AdjointChainSet, AdjointPowerSolution, adjoint_power, normalize_pair,
                      solve_v21)
from .errors import (CapabilityError, IllPosedFitError, InputError, ResolutionError)
from .numeric import PiecewiseExpPoly, gauss_legendre
from .pencil import AnglePencil, PeriodicPencil
from .singular import (Cutoff, PowerSolution, SpecialRHS, build_f12, power_solution,
                       row_values, solve_u12)
from .spectrum import JordanChainSet, jordan_chains

TWO_PI = 2.0 * math.pi


def max_workers() -> int:
    env = os.environ.get("PENCIL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError("PENCIL_THREADS must be a positive integer")
    return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# sampled fields

@dataclass
class SampledField:
    """Field near one pole: an evaluator plus tensor-grid samples.

    ``func(w, r)`` is used wherever the extraction needs values off the grid
    (arm traces near the pole, nonlocal targets).  For fields known only on a grid,
    :meth:`from_grid` builds a spline evaluator inside the grid and defers to a
    closure outside it.
    """

    func: Callable
    omegas: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    pole: str = "g1"

    def __post_init__(self):
        self.omegas = np.asarray(self.omegas, dtype=float)
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.omegas.size < 16 or self.radii.size < 16:
            raise ResolutionError("sampled fields need at least 16 angles and 16 radii")
        if self.values.shape != (self.omegas.size, self.radii.size):
            raise InputError("sample array must have shape (n_omega, n_r)")
        if self.pole not in ("g1", "g2"):
            raise InputError("pole must be 'g1' or 'g2'")

    @property
    def annulus(self):
        return float(self.radii.min()), float(self.radii.max())

    def __call__(self, omega, r):
        return self.func(omega, r)

    @classmethod
    def from_function(cls, func: Callable, omega_range, r_range, n_omega: int = 32,
                      n_r: int = 32, pole: str = "g1") -> "SampledField":
        w0, w1 = omega_range
        if pole == "g2":
            omegas = np.linspace(w0, w1, n_omega, endpoint=False)
        else:
            omegas = np.linspace(w0, w1, n_omega)
        radii = np.geomspace(r_range[0], r_range[1], n_r)
        W, R = np.meshgrid(omegas, radii, indexing="ij")
        return cls(func, omegas, radii, func(W, R), pole)

    @classmethod
    def from_grid(cls, omegas, rhos, values, closure: Optional[Callable] = None,
                  pole: str = "g1") -> "SampledField":
        """Spline evaluator on a ``(w, ln r)`` grid; ``closure`` serves points outside it."""
        omegas = np.asarray(omegas, float)
        rhos = np.asarray(rhos, float)
        values = np.asarray(values, complex)
        sr = RectBivariateSpline(omegas, rhos, values.real, kx=3, ky=3)
        si = RectBivariateSpline(omegas, rhos, values.imag, kx=3, ky=3)
        tol = 1e-12

        def func(w, r):
            w = np.asarray(w, float)
            rho = np.log(np.asarray(r, float))
            w, rho = np.broadcast_arrays(w, rho)
            out = np.empty(w.shape, dtype=complex)
            inside = ((w >= omegas[0] - tol) & (w <= omegas[-1] + tol)
                      & (rho >= rhos[0] - tol) & (rho <= rhos[-1] + tol))
            if np.any(inside):
                out[inside] = (sr(w[inside], rho[inside], grid=False)
                               + 1j * si(w[inside], rho[inside], grid=False))
            if np.any(~inside):
                if closure is None:
                    raise ResolutionError("field evaluated outside its sampled grid with no closure")
                out[~inside] = closure(w[~inside], np.exp(rho[~inside]))
            return out if out.ndim else complex(out)

        return cls(func, omegas, np.exp(rhos), values, pole)


# ---------------------------------------------------------------------------
# model problem bundle

@dataclass
class ModelProblem:
    """Everything needed to build and analyse fields near ``g1`` and ``g2``."""

    pencil: AnglePencil
    chain1: JordanChainSet
    acs1: AdjointChainSet
    u1: PowerSolution
    v1: AdjointPowerSolution
    chain2: JordanChainSet
    acs2: AdjointChainSet
    index2: tuple          # ((k, zeta), ...) ordering of the g2 block
    u2: tuple              # power solutions u2^(k, zeta)
    v2: tuple              # adjoint powers paired with u2^(k, zeta)
    f12: tuple
    u12: tuple
    v21: AdjointPowerSolution
    e1: complex
    theta: float
    row: int
    eta1: Cutoff
    eta2: Cutoff
    coupled: int = 0       # which g2 element drives A12
    resonant: bool = False

    @property
    def lam1(self) -> complex:
        return self.chain1.lambda0

    @property
    def lam2(self) -> complex:
        return self.chain2.lambda0


DEFAULT_ETA1 = Cutoff(0.2, 0.6)
DEFAULT_ETA2 = Cutoff(0.1, 0.45)


def build_model(pencil: AnglePencil, lam1, lam2, e1=1.0, theta: float = 0.0, row: int = 0,
                eta1: Cutoff = DEFAULT_ETA1, eta2: Cutoff = DEFAULT_ETA2,
                coupled: int = 0, resonant: bool = False) -> ModelProblem:
    """Assemble chains, normalized adjoints, ``u12`` and ``v21`` for one coupling."""
    chain1 = jordan_chains(pencil, lam1)
    if chain1.partial_mults != (1,):
        raise CapabilityError("the model bundle needs a simple eigenvalue at g1")
    acs1 = normalize_pair(pencil, chain1)
    u1 = power_solution(chain1)
    v1 = adjoint_power(acs1)
    P = PeriodicPencil()
    chain2 = jordan_chains(P, lam2)
    acs2 = normalize_pair(P, chain2)
    index2 = tuple((k, z) for z in range(chain2.J) for k in range(chain2.partial_mults[z]))
    u2 = tuple(power_solution(chain2, k, z) for k, z in index2)
    v2 = tuple(adjoint_power(acs2, chain2.partial_mults[z] - k - 1, z) for k, z in index2)
    f12 = tuple(build_f12(u, e1, theta, 0, row) for u in u2)
    u12 = tuple(solve_u12(pencil, f, resonant) for f in f12)
    v21 = solve_v21(acs1, e1, theta, row, resonant)
    if not 0 <= coupled < len(u2):
        raise InputError("coupled index out of range")
    return ModelProblem(pencil, chain1, acs1, u1, v1, chain2, acs2, index2, u2, v2, f12,
                        u12, v21, complex(e1), float(theta), int(row), eta1, eta2,
                        int(coupled), bool(resonant))


def default_smooth_g1(omega, r):
    z = r * np.exp(1j * np.asarray(omega))
    return 0.3 * z ** 2 + 0.2j * np.conj(z) + 0.1


def default_smooth_g2(omega, r):
    z = r * np.exp(1j * np.asarray(omega))
    return 0.25 * z ** 2 - 0.4 * np.conj(z) ** 3 + 0.05j


def manufactured_fields(model: ModelProblem, c1, c2, smooth: bool = True,
                        r_range=(0.05, 0.8), n_omega: int = 32, n_r: int = 32):
    """Fields ``c1 u1 + sum c2_j u12_j (+ smooth)`` at g1 and ``sum c2_j u2_j (+ smooth)`` at g2."""
    c2 = np.atleast_1d(np.asarray(c2, dtype=complex))
    if c2.size == 1 and len(model.u2) > 1:
        c2 = np.array([c2[0] if j == model.coupled else 0 for j in range(len(model.u2))])
    c1 = complex(c1)
    def zero(w, r):
        return np.zeros(np.broadcast(np.asarray(w), np.asarray(r)).shape, dtype=complex)

    s1 = default_smooth_g1 if smooth else zero
    s2 = default_smooth_g2 if smooth else zero

    def f1(w, r):
        out = c1 * model.u1(w, r) + s1(w, r)
        for cj, u in zip(c2, model.u12):
            if cj != 0:
                out = out + cj * u(w, r)
        return out

    def f2(w, r):
        out = s2(w, r)
        for cj, u in zip(c2, model.u2):
            if cj != 0:
                out = out + cj * u(w, r)
        return out

    p = model.pencil
    g1 = SampledField.from_function(f1, (p.b1, p.b2), r_range, n_omega, n_r, "g1")
    g2 = SampledField.from_function(f2, (0.0, TWO_PI), r_range, n_omega, n_r, "g2")
    return g1, g2


# ---------------------------------------------------------------------------
# quadrature pieces

def _omega_rule_g1(v: PowerSolution, n: int = 64):
    prof = PiecewiseExpPoly.wrap(v.profiles[0])
    pts, wts = [], []
    for piece in prof.pieces:
        x, w = gauss_legendre(piece.lo, piece.hi, n)
        pts.append(x)
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def _omega_rule_periodic(v: PowerSolution, n: int = 128):
    if not isinstance(v.profiles[0], PiecewiseExpPoly):
        return np.arange(n) * TWO_PI / n, np.full(n, TWO_PI / n)
    # a kink (possibly at the wrap point) rules out the trapezoid rule
    prof = v.profiles[0]
    pts, wts = [], []
    for piece in prof.pieces:
        m = max(16, int(round(n * (piece.hi - piece.lo) / TWO_PI)))
        x, w = gauss_legendre(piece.lo, piece.hi, m)
        pts.append(x)
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def commutator_pairing(u: Callable, v: PowerSolution, eta: Cutoff, omega_rule,
                       n_rho: int = 96) -> complex:
    """``int int Lap~(eta u) conj(v)`` for ``Lap~ u = 0`` on the cutoff transition.

    Integrating the cross term by parts in ``rho`` gives
    ``int int u (-eta'' conj(v) - 2 eta' d_rho conj(v))``, which needs no
    derivatives of ``u``.
    """
    if n_rho < 8:
        raise ResolutionError("cutoff transition needs at least 8 radial nodes")
    w, ww = omega_rule
    rho, wr = gauss_legendre(eta.rho_in, eta.rho_out, n_rho)
    R = np.exp(rho)
    W, RR = np.meshgrid(w, R, indexing="ij")
    U = np.asarray(u(W, RR), dtype=complex)
    V = v(W, RR)
    Vr = v.r_dr(W, RR)
    e1 = eta.of_rho(rho, 1)[None, :]
    e2 = eta.of_rho(rho, 2)[None, :]
    integrand = U * (-e2 * np.conj(V) - 2 * e1 * np.conj(Vr))
    return complex(np.sum(ww[:, None] * wr[None, :] * integrand))


def data_pairing(f: Callable, v: PowerSolution, eta: Cutoff, omega_rule, rho_min: float,
                 panel: float = 1.0, nodes: int = 16) -> complex:
    """``int int eta r^2 f conj(v) drho dw`` from ``rho_min`` to the cutoff edge."""
    w, ww = omega_rule
    rho, wr = _panels(rho_min, eta.rho_out, [eta.rho_in], panel, nodes)
    R = np.exp(rho)
    W, RR = np.meshgrid(w, R, indexing="ij")
    vals = eta.of_rho(rho)[None, :] * RR ** 2 * np.asarray(f(W, RR)) * np.conj(v(W, RR))
    return complex(np.sum(ww[:, None] * wr[None, :] * vals))


def _panels(a: float, b: float, breaks, panel: float = 1.0, nodes: int = 16):
    pts = sorted({a, b, *[x for x in breaks if a < x < b]})
    xs, ws = [], []
    for lo, hi in zip(pts[:-1], pts[1:]):
        m = max(1, int(math.ceil((hi - lo) / panel)))
        edges = np.linspace(lo, hi, m + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            x, w = gauss_legendre(e0, e1, nodes)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def row_pairing(p: AnglePencil, field_eta: Callable, aps: AdjointPowerSolution,
                rho_min: float, rho_max: float, extra_rows=None, breaks=()) -> complex:
    """``sum_s int B_s(F) conj(w_s) r drho`` with ``B_s`` the model rows (order 0).

    ``extra_rows(r)`` adds row data (shape ``(2,) + r.shape``) before pairing.
    """

    class _F:
        def __call__(self, w, r):
            return field_eta(w, r)

    brk = list(breaks)
    for row in p.rows:
        if row.nonlocal_ is not None:
            lb = math.log(row.nonlocal_.beta)
            brk += [b - lb for b in breaks]
    rho, wr = _panels(rho_min, rho_max, brk)
    R = np.exp(rho)
    rows = row_values(p, _F(), R)
    if extra_rows is not None:
        rows = rows + extra_rows(R)
    W = aps.w(R)
    total = 0j
    for s in range(2):
        total += np.sum(wr * R ** (-aps.m_rows[s]) * rows[s] * np.conj(W[s]) * R)
    return complex(total)


# ---------------------------------------------------------------------------
# functional extraction

def extract_c2_functional(u: SampledField, model: ModelProblem, eta2: Optional[Cutoff] = None,
                          f: Optional[Callable] = None, n_omega: int = 128,
                          n_rho: int = 96) -> np.ndarray:
    """``c2^(k,z) = <Lap(eta2 u), i v2^(kappa-k-1, z)>`` for every g2 chain member."""
    eta = eta2 or model.eta2
    _check_annulus(u, eta)
    out = []
    for v in model.v2:
        rule = _omega_rule_periodic(v.v, n_omega)
        val = commutator_pairing(u, v.v, eta, rule, n_rho)
        if f is not None:
            val += data_pairing(f, v.v, eta, rule, math.log(1e-12 * eta.r_in))
        out.append(-1j * val)
    return np.array(out)


def _check_annulus(u: SampledField, eta: Cutoff):
    if u.func is None:
        raise ResolutionError("field has no evaluator")


def extract_c1_functional(u: SampledField, model: ModelProblem, c2, eta1: Optional[Cutoff] = None,
                          f: Optional[Callable] = None, n_omega: int = 64,
                          n_rho: int = 96) -> np.ndarray:
    """``c1 = <L1(eta1 u'), i {v1, w1}>`` with ``u' = u - sum c2_j u12_j``."""
    eta = eta1 or model.eta1
    c2 = np.atleast_1d(np.asarray(c2, dtype=complex))
    if c2.size != len(model.u12):
        raise InputError(f"expected {len(model.u12)} c2 coefficients, got {c2.size}")
    p = model.pencil

    def uprime(w, r):
        out = np.asarray(u(w, r), dtype=complex)
        for cj, u12 in zip(c2, model.u12):
            if cj != 0:
                out = out - cj * u12(w, r)
        return out

    v1 = model.v1
    rule = _omega_rule_g1(v1.v, n_omega)
    val = commutator_pairing(uprime, v1.v, eta, rule, n_rho)
    rho_min = math.log(1e-12 * eta.r_in)
    val += row_pairing(p, lambda w, r: eta(r) * uprime(w, r), v1, rho_min, eta.rho_out,
                       breaks=(eta.rho_in,))
    if f is not None:
        val += data_pairing(f, v1.v, eta, rule, rho_min)
    return np.array([-1j * val])


# ---------------------------------------------------------------------------
# least-squares fit

@dataclass
class FitResult:
    coefficients: np.ndarray
    residual: float
    condition: float
    smooth: np.ndarray


def _smooth_columns(W, R, degree: int):
    z = R * np.exp(1j * W)
    cols = [np.ones_like(z)]
    for k in range(1, degree + 1):
        cols += [z ** k, np.conj(z) ** k]
    return cols


def extract_fit(u: SampledField, basis: Sequence[PowerSolution], smooth_degree: int = 3,
                cond_limit: float = 1e10) -> FitResult:
    """Least squares of the samples against singular and smooth terms."""
    exps = [-complex(b.lam).imag + b.shift for b in basis]
    for e in exps:
        for k in range(smooth_degree + 1):
            if abs(e - k) < 0.05:
                raise InputError(
                    f"singular exponent {e:.3f} is within 0.05 of smooth exponent {k}")
    W, R = np.meshgrid(u.omegas, u.radii, indexing="ij")
    cols = [b(W, R).ravel() for b in basis]
    cols += [c.ravel() for c in _smooth_columns(W, R, smooth_degree)]
    A = np.array(cols).T
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    y = u.values.ravel()
    sol, *_ = np.linalg.lstsq(As, y, rcond=None)
    cond = float(np.linalg.cond(As))
    if cond > cond_limit:
        raise IllPosedFitError(f"fit condition number {cond:.2e} exceeds {cond_limit:.0e}; "
                               "use a narrower annulus or fewer smooth terms")
    coef = sol / scale
    res = float(np.linalg.norm(As @ sol - y) / max(np.linalg.norm(y), 1e-300))
    nb = len(basis)
    return FitResult(coef[:nb], res, cond, coef[nb:])


# ---------------------------------------------------------------------------
# A12 trace

@dataclass
class A12Trace:
    epsilons: np.ndarray
    values: np.ndarray
    limit: complex
    amplitude: complex
    slope: float
    expected_slope: float
    fit_residual: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "epsilons": [float(e) for e in self.epsilons],
            "values": [[v.real, v.imag] for v in self.values],
            "limit": [self.limit.real, self.limit.imag],
            "loglog_slope": self.slope,
            "expected_slope": self.expected_slope,
            "fit_residual": self.fit_residual,
            "converged": self.converged,
        }


def a12_value(model: ModelProblem, eps: float, n_omega: int = 128, n_rho: int = 96) -> complex:
    """Bracket of the coupling constant at cutoff scale ``eps``.

    ``-i [<Lap(eta2e u2), v21> + <Lap(eta1e u12), v1> + rows]`` where row 1 carries
    ``eta1e (u12 + f12)`` and row 2 the nonlocal row of ``eta1e u12``.
    """
    j = model.coupled
    u2, u12, f12 = model.u2[j], model.u12[j], model.f12[j]
    e2 = model.eta2.scaled(eps)
    e1 = model.eta1.scaled(eps)
    ta = commutator_pairing(u2, model.v21.v, e2, _omega_rule_periodic(model.v21.v, n_omega), n_rho)
    tb = commutator_pairing(u12, model.v1.v, e1, _omega_rule_g1(model.v1.v, 64), n_rho)

    def extra(R):
        out = np.zeros((2,) + R.shape, dtype=complex)
        out[f12.row] = e1(R) * f12.row_function(R)
        return out

    tc = row_pairing(model.pencil, lambda w, r: e1(r) * u12(w, r), model.v1,
                     math.log(1e-12 * e1.r_in), e1.rho_out, extra, (e1.rho_in,))
    return complex(-1j * (ta + tb + tc))


def a12_trace(model: ModelProblem, epsilons: Sequence[float]) -> A12Trace:
    """``A12(eps)`` over decreasing ``eps`` and its extrapolated limit."""
    eps = np.asarray(epsilons, dtype=float)
    if eps.size < 4 or np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise InputError("need at least four positive, strictly decreasing epsilons")
    with ThreadPoolExecutor(max_workers=max_workers()) as ex:
        vals = np.array(list(ex.map(lambda e: a12_value(model, e), eps)))
    s = 1j * (model.lam2 - model.lam1)
    deg = max(u.k for u in model.u12) + model.v21.k
    cols = [np.ones_like(eps, dtype=complex)]
    for q in range(deg + 1):
        if abs(s) < 1e-12 and q == 0:
            continue
        cols.append(eps ** s * np.log(eps) ** q)
    A = np.array(cols).T
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    scale = max(np.max(np.abs(vals)), 1e-300)
    fit_res = float(np.max(np.abs(A @ coef - vals)) / scale)
    mag = np.abs(vals)
    if np.all(mag > 0):
        slope = float(np.polyfit(np.log(eps), np.log(mag), 1)[0])
    else:
        slope = float("nan")
    amplitude = complex(coef[1]) if len(coef) > 1 else 0j
    return A12Trace(eps, vals, complex(coef[0]), amplitude, slope,
                    float(-(model.lam2 - model.lam1).imag), fit_res, fit_res <= 1e-3)


# ---------------------------------------------------------------------------
# coefficients from the right-hand side

def coefficients_from_rhs(model: ModelProblem, c1, c2, a12: complex = 0.0,
                    n_omega: int = 128, n_rho: int = 96) -> np.ndarray:
    """Coefficients from the data ``F = L(c1 U1 + c2 U2)`` paired with kernel elements.

    ``Y2 = {v2}`` at g2 and ``Y1 = {v1, w1}`` at g1 together with ``v21`` at g2.
    Returns ``[c2, c1]`` (g2 block first).  ``c1 = <F, i Y1> - a12 * c2``.
    """
    j = model.coupled
    c1, c2 = complex(c1), complex(c2)
    p = model.pencil
    eta1, eta2 = model.eta1, model.eta2
    u1, u12, u2, f12 = model.u1, model.u12[j], model.u2[j], model.f12[j]

    def g1_field(w, r):
        return c1 * u1(w, r) + c2 * u12(w, r)

    def g2_field(w, r):
        return c2 * u2(w, r)

    # interior parts of F are commutators supported on the cutoff transitions
    v2 = model.v2[j].v
    y2 = commutator_pairing(g2_field, v2, eta2, _omega_rule_periodic(v2, n_omega), n_rho)
    y1 = commutator_pairing(g1_field, model.v1.v, eta1, _omega_rule_g1(model.v1.v, 64), n_rho)
    y1 += commutator_pairing(g2_field, model.v21.v, eta2,
                             _omega_rule_periodic(model.v21.v, n_omega), n_rho)

    # rows: model rows of eta1 (c1 u1 + c2 u12) plus the coupled trace of eta2 c2 u2
    def extra(R):
        out = np.zeros((2,) + R.shape, dtype=complex)
        out[f12.row] = eta2(R) * c2 * f12.row_function(R)
        return out

    lo = math.log(1e-12 * min(eta1.r_in, eta2.r_in))
    hi = max(eta1.rho_out, eta2.rho_out)
    y1 += row_pairing(p, lambda w, r: eta1(r) * g1_field(w, r), model.v1, lo, hi, extra,
                      (eta1.rho_in, eta2.rho_in, eta1.rho_out, eta2.rho_out))
    c2_out = -1j * y2
    c1_out = -1j * y1 - complex(a12) * c2_out
    return np.array([c2_out, c1_out])


# ---------------------------------------------------------------------------
# report

@dataclass
class ExtractionReport:
    c1: np.ndarray
    c2: np.ndarray
    method: str
    residuals: dict = field(default_factory=dict)
    a12: Optional[A12Trace] = None

    def to_dict(self) -> dict:
        out = {
            "c1": [[complex(c).real, complex(c).imag] for c in np.atleast_1d(self.c1)],
            "c2": [[complex(c).real, complex(c).imag] for c in np.atleast_1d(self.c2)],
            "method": self.method,
            "residuals": self.residuals,
        }
        if self.a12 is not None:
            out["a12"] = self.a12.to_dict()
        return out


def extract_both(model: ModelProblem, g1: SampledField, g2: SampledField,
                 smooth_degree: int = 3) -> ExtractionReport:
    """Functional and fit routes on the same fields, with their discrepancy."""
    c2f = extract_c2_functional(g2, model)
    c1f = extract_c1_functional(g1, model, c2f)
    fit2 = extract_fit(g2, list(model.u2), smooth_degree)
    # u12 members can coincide (equal traces), so the fit uses the coupled one only
    fit1 = extract_fit(g1, [model.u1, model.u12[model.coupled]], smooth_degree)
    c1fit = fit1.coefficients[:1]
    c2fit = fit2.coefficients
    resid = {
        "fit_g1_residual": fit1.residual, "fit_g1_condition": fit1.condition,
        "fit_g2_residual": fit2.residual, "fit_g2_condition": fit2.condition,
        "c2_from_u12_fit": [[complex(c).real, complex(c).imag] for c in fit1.coefficients[1:]],
        "c1_discrepancy": float(np.max(np.abs(c1f - c1fit))),
        "c2_discrepancy": float(np.max(np.abs(c2f - c2fit))),
        "c1_fit": [[complex(c).real, complex(c).imag] for c in c1fit],
        "c2_fit": [[complex(c).real, complex(c).imag] for c in c2fit],
    }
    return ExtractionReport(c1f, c2f, "both", resid)
