"""Adjoint eigen-data, biorthogonal normalization and adjoint power solutions.

Sign ledger (integration by parts of ``int (phi'' - lam^2 phi) conj(psi)`` over the
angle, with ``psi`` continuous and ``psi'' = conj(lam)^2 psi`` on each piece):

* lower arm, row ``a0 phi + a1 phi'``:  ``psi(b1) - conj(a1) chi1 = 0`` and
  ``psi'(b1) + conj(a0) chi1 = 0``;
* upper arm:  ``psi'(b2) - conj(a0) chi2 = 0`` and ``psi(b2) + conj(a1) chi2 = 0``;
* interior point ``x`` hit by nonlocal rows ``i``:
  ``psi'(x+) - psi'(x-) + sum_i conj(E_i t0_i) chi_i = 0`` with
  ``E_i = e_i beta_i^(i lam - m_i)``.

With these relations ``<L(lam) phi, {psi, chi}> = 0`` for every profile ``phi``,
where ``<{F, r}, {psi, chi}> = int F conj(psi) + sum_i r_i conj(chi_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (CapabilityError, InputError, MultiplicityError, NormalizationError,
                     ResonanceError)
from .numeric import ExpPoly, PiecewiseExpPoly, gauss_legendre, inner
from .pencil import (AnglePencil, PeriodicPencil, _fs_values, angle_operator_jet,
                     char_det, fundamental_system, periodic_chains, periodic_operator_jet)
from .singular import PowerSolution, log_power_basis
from .spectrum import JordanChainSet

KERNEL_TOL = 1e-8
SECOND_SV_TOL = 1e-6
GRAM_COND = 1e8


@dataclass(frozen=True)
class AdjointTriple:
    """Adjoint density ``psi`` on the angle (or circle) and arm weights ``chi``."""

    lam: complex
    psi: PiecewiseExpPoly
    chi: Optional[np.ndarray] = None

    @property
    def lambda_bar(self) -> complex:
        return complex(self.lam).conjugate()

    def scaled(self, s) -> "AdjointTriple":
        s = complex(s)
        chi = None if self.chi is None else self.chi * s
        return AdjointTriple(self.lam, self.psi * s, chi)

    def plus(self, other: "AdjointTriple", t=1.0) -> "AdjointTriple":
        t = complex(t)
        chi = None if self.chi is None else self.chi + t * other.chi
        return AdjointTriple(self.lam, self.psi + other.psi * t, chi)

    @classmethod
    def zero_like(cls, other: "AdjointTriple") -> "AdjointTriple":
        chi = None if other.chi is None else np.zeros_like(other.chi)
        return cls(other.lam, other.psi * 0.0, chi)


# ---------------------------------------------------------------------------
# transmission problem

def _check_supported(p: AnglePencil):
    for row in p.rows:
        nl = row.nonlocal_
        if nl is not None and (nl.order != 0 or nl.tau[1] != 0):
            raise CapabilityError("adjoint supports order-0 nonlocal terms without derivatives")


def split_points(p: AnglePencil) -> tuple:
    pts = sorted({round(p.target_angle(r), 13) for r in p.rows if r.nonlocal_ is not None})
    return tuple(pts)


def _row_factor(row, lam0):
    nl = row.nonlocal_
    return nl.factor(lam0) * nl.tau[0]


def transmission_matrix(p: AnglePencil, lam0):
    """Square matrix of the adjoint transmission problem at the primal value ``lam0``.

    Unknowns: per piece ``(A_j, B_j)`` on ``cosh(mu (w - x_j))``, ``sinh(mu (w - x_j))/mu``
    with ``mu = conj(lam0)``, then ``chi1, chi2``.
    """
    _check_supported(p)
    lam0 = complex(lam0)
    mu = lam0.conjugate()
    edges = [p.b1, *split_points(p), p.b2]
    npieces = len(edges) - 1
    n = 2 * npieces + 2
    T = np.zeros((n, n), dtype=complex)
    ichi = 2 * npieces

    def vals(j, w):
        v1, d1, v2, d2 = _fs_values(mu, w - edges[j])
        return np.array([v1, v2]), np.array([d1, d2])

    (lo_row, hi_row) = p.rows
    a0, a1 = lo_row.local
    v, d = vals(0, p.b1)
    T[0, 0:2] = v
    T[0, ichi] = -np.conj(a1)
    T[1, 0:2] = d
    T[1, ichi] = np.conj(a0)
    a0, a1 = hi_row.local
    v, d = vals(npieces - 1, p.b2)
    j0 = 2 * (npieces - 1)
    T[2, j0:j0 + 2] = d
    T[2, ichi + 1] = -np.conj(a0)
    T[3, j0:j0 + 2] = v
    T[3, ichi + 1] = np.conj(a1)
    eq = 4
    for j in range(1, npieces):
        x = edges[j]
        vl, dl = vals(j - 1, x)
        vr, dr = vals(j, x)
        T[eq, 2 * (j - 1):2 * j] = vl
        T[eq, 2 * j:2 * j + 2] = -vr
        T[eq + 1, 2 * (j - 1):2 * j] = -dl
        T[eq + 1, 2 * j:2 * j + 2] = dr
        for i, row in enumerate(p.rows):
            if row.nonlocal_ is not None and abs(p.target_angle(row) - x) < 1e-12:
                T[eq + 1, ichi + i] += np.conj(_row_factor(row, lam0))
        eq += 2
    return T, tuple(edges)


def transmission_det(p: AnglePencil, lam) -> complex:
    T, _ = transmission_matrix(p, lam)
    return complex(np.linalg.det(T))


def _unpack(p: AnglePencil, lam0, x, edges) -> AdjointTriple:
    mu = complex(lam0).conjugate()
    pieces = []
    for j in range(len(edges) - 1):
        s1, s2 = fundamental_system(mu, edges[j], edges[j], edges[j + 1])
        pieces.append(complex(x[2 * j]) * s1 + complex(x[2 * j + 1]) * s2)
    chi = np.array(x[-2:], dtype=complex)
    return AdjointTriple(complex(lam0), PiecewiseExpPoly(tuple(pieces)), chi)


def _canonical_scale(t: AdjointTriple) -> AdjointTriple:
    w = np.linspace(t.psi.lo, t.psi.hi, 65)
    vals = np.concatenate([t.psi(w), t.chi])
    k = int(np.argmax(np.abs(vals)))
    return t.scaled(abs(vals[k]) / vals[k] / np.max(np.abs(vals)))


def adjoint_eigenvector(p: AnglePencil, lam0) -> AdjointTriple:
    """Kernel element of the transmission problem at a simple eigenvalue ``lam0``."""
    T, edges = transmission_matrix(p, lam0)
    _, s, vh = np.linalg.svd(T)
    if s[-1] > KERNEL_TOL * s[0]:
        raise MultiplicityError(f"{lam0} is not an eigenvalue: transmission kernel is trivial")
    if s[-2] < SECOND_SV_TOL * s[0]:
        raise MultiplicityError(f"transmission kernel at {lam0} is at least two-dimensional")
    x = vh[-1].conj()
    return _canonical_scale(_unpack(p, lam0, x, edges))


def transmission_residual(p: AnglePencil, t: AdjointTriple) -> float:
    """Max violation of the ODE, continuity, jump and endpoint relations."""
    mu = t.lambda_bar
    worst = 0.0
    for piece in t.psi.pieces:
        w = np.linspace(piece.lo, piece.hi, 20)
        r = piece.derivative(2)(w) - mu ** 2 * piece(w)
        worst = max(worst, float(np.max(np.abs(r))))
    lo_row, hi_row = p.rows
    dpsi = t.psi.derivative()
    chk = [
        t.psi(p.b1) - np.conj(lo_row.local[1]) * t.chi[0],
        dpsi(p.b1) + np.conj(lo_row.local[0]) * t.chi[0],
        dpsi(p.b2) - np.conj(hi_row.local[0]) * t.chi[1],
        t.psi(p.b2) + np.conj(hi_row.local[1]) * t.chi[1],
    ]
    for x in split_points(p):
        l, r = t.psi.limits(x)
        dl, dr = dpsi.limits(x)
        jump = dr - dl
        for i, row in enumerate(p.rows):
            if row.nonlocal_ is not None and abs(p.target_angle(row) - x) < 1e-12:
                jump += np.conj(_row_factor(row, t.lam)) * t.chi[i]
        chk += [r - l, jump]
    worst = max(worst, float(np.max(np.abs(chk))))
    return worst


# ---------------------------------------------------------------------------
# pairings

def pairing(interior, rows, triple: AdjointTriple) -> complex:
    """``<{F, r}, {psi, chi}>``."""
    total = inner(interior, triple.psi)
    if triple.chi is not None and rows is not None:
        total += complex(np.sum(np.asarray(rows) * np.conj(triple.chi)))
    return complex(total)


def _operator_jet(p, profile, lam0, n):
    if isinstance(p, AnglePencil):
        return angle_operator_jet(p, profile, lam0, n)
    return periodic_operator_jet(profile, lam0, n), None


def chain_pairing(p, lam0, phis: Sequence, psis: Sequence, nu: int, k: int) -> complex:
    """Biorthogonality form ``sum_{p<=nu, q<=k} <D_(nu+k+1-p-q) phi^(q), Psi^(p)>``.

    ``D_n`` is the ``n``-th Taylor coefficient of the pencil in ``lam`` at ``lam0``.
    """
    total = 0j
    for pp in range(nu + 1):
        for q in range(k + 1):
            it, rows = _operator_jet(p, phis[q], lam0, nu + k + 1 - pp - q)
            total += pairing(it, rows, psis[pp])
    return complex(total)


def reduced_pairing(lam0, phi, triple: AdjointTriple) -> complex:
    """Interior part ``<-2 lam phi, psi>`` of the simple-eigenvalue normalization."""
    return inner(-2.0 * complex(lam0) * phi, triple.psi)


def cross_pairing(p: AnglePencil, lam1, phi1, lam2, triple2: AdjointTriple) -> complex:
    """Divided-difference pairing ``<(L(lam1) - L(lam2)) phi1 / (lam1 - lam2), Psi2>``.

    Vanishes when ``phi1`` is an eigenvector at ``lam1`` and ``Psi2`` an adjoint
    eigenvector at ``lam2 != lam1``.
    """
    lam1, lam2 = complex(lam1), complex(lam2)
    interior = -(lam1 + lam2) * phi1
    rows = np.zeros(2, dtype=complex)
    for i, row in enumerate(p.rows):
        nl = row.nonlocal_
        if nl is not None:
            c = p.target_angle(row)
            dd = (nl.factor(lam1) - nl.factor(lam2)) / (lam1 - lam2)
            rows[i] = dd * (nl.tau[0] * phi1(c) + nl.tau[1] * phi1.derivative()(c))
    return pairing(interior, rows, triple2)


@dataclass(frozen=True)
class AdjointChainSet:
    """Normalized adjoint chains ``chains[zeta][p]`` paired with a primal chain set."""

    lam: complex
    partial_mults: tuple
    chains: tuple
    kind: str
    norm_matrix: np.ndarray = field(compare=False)
    reduced: tuple = ()
    m_rows: tuple = (0, 0)

    @property
    def lambda_bar(self) -> complex:
        return complex(self.lam).conjugate()


def periodic_adjoint_chains(lam0) -> tuple:
    """Unnormalized adjoint chains of the periodic pencil at ``conj(lam0)``."""
    mu = complex(lam0).conjugate()
    return tuple(tuple(AdjointTriple(complex(lam0), PiecewiseExpPoly.wrap(f)) for f in ch)
                 for ch in periodic_chains(mu))


def norm_pattern(p, chain: JordanChainSet, adj_chains) -> np.ndarray:
    """Array ``N[xi, zeta, nu, k]`` of the biorthogonality form."""
    J = chain.J
    kmax = max(chain.partial_mults)
    N = np.full((J, J, kmax, kmax), np.nan, dtype=complex)
    for xi in range(J):
        for zeta in range(J):
            for nu in range(chain.partial_mults[zeta]):
                for k in range(chain.partial_mults[xi]):
                    N[xi, zeta, nu, k] = chain_pairing(p, chain.lambda0, chain.chains[xi],
                                                       adj_chains[zeta], nu, k)
    return N


def expected_pattern(chain: JordanChainSet) -> np.ndarray:
    J = chain.J
    kmax = max(chain.partial_mults)
    E = np.full((J, J, kmax, kmax), np.nan, dtype=complex)
    for xi in range(J):
        for zeta in range(J):
            for nu in range(chain.partial_mults[zeta]):
                for k in range(chain.partial_mults[xi]):
                    E[xi, zeta, nu, k] = float(xi == zeta and chain.partial_mults[xi] - k - 1 == nu)
    return E


def _row_orders(p) -> tuple:
    if not isinstance(p, AnglePencil):
        return (0, 0)
    return tuple(int(r.local[1] != 0) for r in p.rows)


def normalize_pair(p, chain: JordanChainSet, triples=None) -> AdjointChainSet:
    """Scale and mix adjoint chains so the biorthogonality pattern holds.

    Supported: any number of length-one chains, or a single chain of length two.
    """
    lam0 = chain.lambda0
    if triples is None:
        if chain.kind == "periodic":
            triples = periodic_adjoint_chains(lam0)
        else:
            if chain.partial_mults != (1,):
                raise CapabilityError("angle adjoint chains are supported for simple eigenvalues only")
            triples = ((adjoint_eigenvector(p, lam0),),)
    adj = [list(ch) for ch in triples]
    if len(adj) != chain.J or any(len(a) != m for a, m in zip(adj, chain.partial_mults)):
        raise InputError("adjoint chain structure does not match the primal chains")
    mults = chain.partial_mults
    if all(m == 1 for m in mults):
        G = np.array([[chain_pairing(p, lam0, chain.chains[xi], adj[eta], 0, 0)
                       for eta in range(chain.J)] for xi in range(chain.J)])
        if np.linalg.cond(G) > GRAM_COND:
            raise NormalizationError(f"biorthogonality Gram matrix is singular at {lam0}")
        A = np.conj(np.linalg.inv(G)).T
        new = []
        for zeta in range(chain.J):
            acc = AdjointTriple.zero_like(adj[0][0])
            for eta in range(chain.J):
                acc = acc.plus(adj[eta][0], A[zeta, eta])
            new.append([acc])
        adj = new
    elif mults == (2,):
        phis = chain.chains[0]
        psis = adj[0]
        n01 = chain_pairing(p, lam0, phis, psis, 0, 1)
        if abs(n01) < 1e-12:
            raise NormalizationError(f"leading pairing vanishes at {lam0}")
        s = 1.0 / np.conj(n01)
        psis = [t.scaled(s) for t in psis]
        n11 = chain_pairing(p, lam0, phis, psis, 1, 1)
        psis[1] = psis[1].plus(psis[0], -np.conj(n11))
        adj = [psis]
    else:
        raise CapabilityError(f"normalization for partial multiplicities {mults} is not supported")
    N = norm_pattern(p, chain, adj)
    E = expected_pattern(chain)
    mask = ~np.isnan(E.real)
    err = float(np.max(np.abs(N[mask] - E[mask])))
    if err > 1e-8:
        raise NormalizationError(f"biorthogonality pattern violated by {err:.2e}")
    reduced = tuple(reduced_pairing(lam0, chain.chains[z][0], adj[z][0]) for z in range(chain.J))
    return AdjointChainSet(complex(lam0), mults, tuple(tuple(a) for a in adj), chain.kind,
                           N, reduced, _row_orders(p))


# ---------------------------------------------------------------------------
# adjoint power solutions

@dataclass(frozen=True)
class AdjointPowerSolution:
    """``v = r^(i conj(lam) + 2m - 2) sum_q (i ln r)^q/q! psi_q`` and arm weights ``w``.

    ``w_s = r^(i conj(lam) + m_s - 1) sum_q (i ln r)^q/q! chi_q[s]``.
    """

    lam: complex
    v: PowerSolution
    chi: Optional[np.ndarray] = None  # shape (k+1, 2), chi[q] = chi^(k-q)
    m_rows: tuple = (0, 0)
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def lambda_bar(self) -> complex:
        return complex(self.lam).conjugate()

    @property
    def k(self) -> int:
        return self.v.k

    def w(self, r) -> np.ndarray:
        """Arm weights, shape ``(2,) + r.shape``."""
        r = np.asarray(r, dtype=float)
        out = np.zeros((2,) + r.shape, dtype=complex)
        if self.chi is None:
            return out
        for s in range(2):
            basis = log_power_basis(self.lambda_bar, r, self.k, self.m_rows[s] - 1.0)
            out[s] = sum(basis[q] * self.chi[q, s] for q in range(self.k + 1))
        return out


def adjoint_power(acs: AdjointChainSet, k: int = 0, zeta: int = 0, m: int = 1) -> AdjointPowerSolution:
    """Adjoint power solution of log-degree ``k`` from chain ``zeta``."""
    if not 0 <= zeta < len(acs.chains) or not 0 <= k < acs.partial_mults[zeta]:
        raise InputError(f"adjoint chain index (k={k}, zeta={zeta}) out of range")
    ch = acs.chains[zeta]
    profiles = tuple(ch[k - q].psi for q in range(k + 1))
    pole = "g2" if acs.kind == "periodic" else "g1"
    v = PowerSolution(acs.lambda_bar, profiles, pole, 2.0 * m - 2.0, acs.kind)
    chi = None
    if ch[0].chi is not None:
        chi = np.array([ch[k - q].chi for q in range(k + 1)])
    return AdjointPowerSolution(complex(acs.lam), v, chi, acs.m_rows, {"k": k, "zeta": zeta})


# ---------------------------------------------------------------------------
# particular adjoint solution at g2

def _circle_piece_profiles(theta: float, make):
    """Piecewise profile in ``t = (w - theta) mod 2 pi`` on ``[0, 2 pi]``.

    ``make(lo, hi, origin)`` returns an ExpPoly in powers of ``w - origin``.
    """
    two_pi = 2.0 * math.pi
    theta = float(theta) % two_pi
    if theta < 1e-14:
        return PiecewiseExpPoly((make(0.0, two_pi, 0.0),))
    return PiecewiseExpPoly((make(0.0, theta, theta - two_pi), make(theta, two_pi, theta)))


def solve_v21(acs1: AdjointChainSet, e1, theta: float = 0.0, row: int = 0,
              resonant: bool = False, zeta: int = 0) -> AdjointPowerSolution:
    """Particular solution of ``Lap v = -c r^(i mu) delta(w - theta)`` at ``g2``.

    ``mu = conj(lam1)`` and ``c = conj(e1) chi_row`` of the normalized adjoint
    eigenvector at ``g1``.
    """
    if acs1.partial_mults[zeta] != 1:
        raise CapabilityError("v21 is built for simple eigenvalues at g1")
    t1 = acs1.chains[zeta][0]
    c = np.conj(complex(e1)) * t1.chi[row]
    mu = acs1.lambda_bar
    two_pi = 2.0 * math.pi
    k_res = None
    if abs(mu.real) < 1e-10 and abs(mu.imag - round(mu.imag)) < 1e-10:
        k_res = int(round(mu.imag))
    meta = {"resonant": k_res is not None, "c": complex(c)}
    if k_res is not None and not resonant:
        raise ResonanceError(
            f"conj(lam1) = {mu} is an eigenvalue of the periodic pencil; request resonant mode")
    if c == 0:
        zero = PiecewiseExpPoly((ExpPoly.zero(0.0, two_pi),))
        v = PowerSolution(mu, (zero,), "g2", 0.0, "periodic")
        return AdjointPowerSolution(acs1.lam, v, None, (0, 0), meta)
    if k_res is None:
        amp = c / (2 * mu * np.sinh(mu * math.pi))
        # cosh(mu (t - pi)) = (e^{mu t} e^{-mu pi} + e^{-mu t} e^{mu pi}) / 2
        prof = _circle_piece_profiles(theta, lambda lo, hi, o: ExpPoly(
            [(amp * 0.5 * np.exp(-mu * math.pi), mu, 0),
             (amp * 0.5 * np.exp(mu * math.pi), -mu, 0)], lo, hi, o))
        profiles = (prof,)
    elif k_res != 0:
        kk = abs(k_res)
        A = c / (4 * math.pi * mu)
        log_coef = _circle_piece_profiles(theta, lambda lo, hi, o: ExpPoly(
            [(A, 1j * kk, 0), (A, -1j * kk, 0)], lo, hi, o))
        al = c / (2 * math.pi * kk)
        # al * t * sin(k t) = al t (e^{ikt} - e^{-ikt}) / (2i)
        plain = _circle_piece_profiles(theta, lambda lo, hi, o: ExpPoly(
            [(al / 2j, 1j * kk, 1), (-al / 2j, -1j * kk, 1)], lo, hi, o))
        profiles = (plain, log_coef)
        meta["extension"] = 1
        meta["selection"] = "zero kernel component in the non-log profile"
    else:
        # mu = 0: psi0 = c/(2 pi), psi1 = 0, psi2 = (c/4pi)((t - pi)^2 - pi^2/3)
        q = c / (4 * math.pi)
        p2 = _circle_piece_profiles(theta, lambda lo, hi, o: ExpPoly(
            [(q, 0, 2), (-2 * math.pi * q, 0, 1), (q * (math.pi ** 2 - math.pi ** 2 / 3), 0, 0)],
            lo, hi, o))
        p1 = _circle_piece_profiles(theta, lambda lo, hi, o: ExpPoly.zero(lo, hi, o))
        p0 = _circle_piece_profiles(theta, lambda lo, hi, o: ExpPoly.constant(c / two_pi, lo, hi, o))
        profiles = (p2, p1, p0)
        meta["extension"] = 2
        meta["selection"] = "zero kernel components"
    v = PowerSolution(mu, profiles, "g2", 0.0, "periodic")
    return AdjointPowerSolution(acs1.lam, v, None, (0, 0), meta)


# ---------------------------------------------------------------------------
# quadrature checks with compactly supported tests

def bump(rho, a: float, b: float, derivative: int = 0):
    """C-infinity bump on ``(a, b)`` and its first two derivatives (numerically exact)."""
    rho = np.asarray(rho, dtype=float)
    s = (2 * rho - (a + b)) / (b - a)
    inside = np.abs(s) < 1
    sc = np.where(inside, s, 0.0)
    g = np.where(inside, np.exp(-1.0 / np.where(inside, 1 - sc ** 2, 1.0)), 0.0)
    if derivative == 0:
        return g
    ds = 2.0 / (b - a)
    den = np.where(inside, 1 - sc ** 2, 1.0)
    h1 = -2 * sc / den ** 2
    if derivative == 1:
        return g * h1 * ds
    h2 = (-2 * den ** 2 - (-2 * sc) * 2 * den * (-2 * sc)) / den ** 4
    return g * (h1 ** 2 + h2) * ds ** 2


def _omega_nodes(psi, n: int = 48):
    pts, wts = [], []
    for piece in PiecewiseExpPoly.wrap(psi).pieces:
        x, w = gauss_legendre(piece.lo, piece.hi, n)
        pts.append(x)
        wts.append(w)
    return np.concatenate(pts), np.concatenate(wts)


def _test_pairing(p, g, dg2, b_range, vfun, wfun, rows_fn, psi_like, n_rho=96):
    """Pairing ``<L(b g), {v, w}>`` of a separable test ``b(rho) g(w)``."""
    a, b = b_range
    rho, wr = gauss_legendre(a, b, n_rho)
    w, ww = _omega_nodes(psi_like)
    R = np.exp(rho)
    B0 = bump(rho, a, b)
    B2 = bump(rho, a, b, 2)
    lap = np.outer(dg2(w), B0) + np.outer(g(w), B2)  # (d_rho^2 + d_w^2) u
    V = vfun(w[:, None], R[None, :])
    interior = np.sum(ww[:, None] * wr[None, :] * lap * np.conj(V))
    boundary = rows_fn(rho, wr, R)
    return complex(interior + boundary)


def _random_trig(rng, lo, hi, periodic: bool):
    n = 4
    ks = np.arange(n)
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    bcoef = rng.normal(size=n) + 1j * rng.normal(size=n)
    L = hi - lo
    scale = 2 * math.pi / L if periodic else math.pi / L

    def g(w, d=0):
        x = scale * (np.asarray(w) - lo)
        out = 0
        for k in range(n):
            kk = k * scale
            c, s = np.cos(k * x), np.sin(k * x)
            if d == 0:
                out = out + a[k] * c + bcoef[k] * s
            else:
                out = out + (-kk ** 2) * (a[k] * c + bcoef[k] * s)
        return out

    return g


def annihilation_check(p: AnglePencil, aps: AdjointPowerSolution, n_tests: int = 10,
                       seed: int = 0) -> float:
    """Max relative ``|<L(b g), {v, w}>|`` over random separable tests at ``g1``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_tests):
        g = _random_trig(rng, p.b1, p.b2, periodic=False)
        a = rng.uniform(-2.0, -0.5)
        b = a + rng.uniform(0.8, 2.0)

        def rows_fn(rho, wr, R, g=g, a=a, b=b):
            W = aps.w(R)
            total = 0j
            for i, row in enumerate(p.rows):
                x = p.arm_angle(row)
                a0, a1 = row.local
                vals = (a0 * g(x) + a1 * _dg(g, x)) * bump(rho, a, b)
                nl = row.nonlocal_
                if nl is not None:
                    c = p.target_angle(row)
                    lb = math.log(nl.beta)
                    vals = vals + nl.e * nl.beta ** (-nl.order) * nl.tau[0] * g(c) * bump(rho + lb, a, b)
                m_i = aps.m_rows[i]
                total += np.sum(wr * R ** (-m_i) * vals * np.conj(W[i]) * R)
            return total

        val = _test_pairing(p, g, lambda w: g(w, 2), (a, b), aps.v, aps.w, rows_fn,
                            PiecewiseExpPoly.wrap(aps.v.profiles[0]))
        ref = _test_pairing(p, g, lambda w: g(w, 2), (a, b), lambda w, r: np.abs(aps.v(w, r)),
                            aps.w, lambda *args: 0.0, PiecewiseExpPoly.wrap(aps.v.profiles[0]))
        worst = max(worst, abs(val) / max(abs(ref), 1e-300))
    return worst


def _dg(g, x, h=1e-5):
    return (g(x + h) - g(x - h)) / (2 * h)


def v21_weak_residual(aps1: AdjointPowerSolution, v21: AdjointPowerSolution, e1,
                      theta: float = 0.0, row: int = 0, n_tests: int = 10, seed: int = 1) -> float:
    """Max relative residual of the weak identity defining ``v21``.

    ``int int Lap(u) conj(v21) + e1 int u(theta, r) conj(w1_row) dr = 0`` for
    ``u = b(ln r) g(w)`` with ``g`` 2 pi-periodic.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    e1 = complex(e1)
    for _ in range(n_tests):
        g = _random_trig(rng, 0.0, 2 * math.pi, periodic=True)
        a = rng.uniform(-2.0, -0.5)
        b = a + rng.uniform(0.8, 2.0)

        def rows_fn(rho, wr, R, g=g, a=a, b=b):
            W = aps1.w(R)[row]
            m_i = aps1.m_rows[row]
            return np.sum(wr * e1 * g(theta) * bump(rho, a, b) * R ** (-m_i) * np.conj(W) * R)

        psi_like = PiecewiseExpPoly.wrap(v21.v.profiles[0])
        val = _test_pairing(None, g, lambda w: g(w, 2), (a, b), v21.v, None, rows_fn, psi_like)
        ref = abs(rows_fn(*_rho_nodes(a, b))) + 1e-300
        worst = max(worst, abs(val) / ref)
    return worst


def _rho_nodes(a, b, n=96):
    rho, wr = gauss_legendre(a, b, n)
    return rho, wr, np.exp(rho)
