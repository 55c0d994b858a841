"""Mellin pencils of the model problems.

The angle pencil acts on profiles on ``[b1, b2]``:

    phi -> { phi'' - lam^2 phi,  row_1(phi),  row_2(phi) }

where each row is ``a0 phi(x) + a1 phi'(x) + e beta^(i lam - m) (t0 phi(x+s) + t1 phi'(x+s))``
with ``x`` the arm angle.  Because the interior equation is solved identically by
the fundamental system ``cosh(lam (w-b1))``, ``sinh(lam (w-b1))/lam``, the pencil is
equivalent to the 2x2 analytic matrix of row values on that system.

The periodic pencil is ``phi'' - lam^2 phi`` on 2*pi-periodic functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, StripViolationError
from .numeric import AnalyticJet, ExpPoly, analytic_jet

STRIP_EDGE_TOL = 1e-9
SMALL_ARG = 0.5


def sinhc(z):
    """``sinh(z)/z`` with the removable singularity filled in."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    z2 = z * z
    series = 1 + z2 / 6 + z2 * z2 / 120
    out = np.where(small, series, np.sinh(safe) / safe)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class Nonlocal:
    """Nonlocal part ``e beta^(i lam - m) (t0 phi + t1 phi')`` at the rotated ray."""

    e: complex
    shift: float
    beta: float = 1.0
    order: int = 0
    tau: tuple = (1.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "e", complex(self.e))
        object.__setattr__(self, "shift", float(self.shift))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "tau", tuple(complex(t) for t in self.tau))
        if not self.beta > 0:
            raise InputError("dilation beta must be positive")
        if self.order not in (0, 1):
            raise InputError("nonlocal row order must be 0 or 1")
        if len(self.tau) != 2:
            raise InputError("tau must have two coefficients")

    def factor(self, lam):
        """``e * beta**(i lam - m)``, vectorized in ``lam``."""
        lam = np.asarray(lam, dtype=complex)
        out = self.e * np.exp((1j * lam - self.order) * math.log(self.beta))
        return out if out.ndim else complex(out)

    def factor_jet(self, lam0, n: int) -> complex:
        """Taylor coefficient ``(1/n!) d^n/dlam^n`` of :meth:`factor` at ``lam0``."""
        lb = math.log(self.beta)
        return complex(self.factor(lam0) * (1j * lb) ** n / math.factorial(n))


@dataclass(frozen=True)
class NonlocalRow:
    """One boundary row attached to an arm (``'lower'`` = b1, ``'upper'`` = b2)."""

    endpoint: str
    local: tuple = (1.0, 0.0)
    nonlocal_: Optional[Nonlocal] = None

    def __post_init__(self):
        if self.endpoint not in ("lower", "upper"):
            raise InputError("row endpoint must be 'lower' or 'upper'")
        local = tuple(complex(a) for a in self.local)
        if len(local) != 2 or local == (0, 0):
            raise InputError("local row coefficients must be a nonzero pair")
        object.__setattr__(self, "local", local)


@dataclass(frozen=True)
class AnglePencil:
    """Angle ``b1 < w < b2`` with one (possibly nonlocal) row per arm."""

    b1: float
    b2: float
    rows: tuple

    def __post_init__(self):
        b1, b2 = float(self.b1), float(self.b2)
        if not (0.0 <= b1 < b2 <= 2.0 * math.pi + 1e-12):
            raise InputError(f"need 0 <= b1 < b2 <= 2 pi, got b1={b1}, b2={b2}")
        rows = tuple(self.rows)
        if len(rows) != 2:
            raise InputError("an angle pencil needs exactly two rows")
        rows = tuple(sorted(rows, key=lambda r: r.endpoint != "lower"))
        if rows[0].endpoint != "lower" or rows[1].endpoint != "upper":
            raise InputError("need one row on each arm")
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "b2", b2)
        object.__setattr__(self, "rows", rows)
        for row in rows:
            if row.nonlocal_ is not None:
                target = self.arm_angle(row) + row.nonlocal_.shift
                if not (b1 < target < b2):
                    raise InputError(
                        f"nonlocal shift maps the {row.endpoint} arm to {target:.6g}, "
                        f"outside the open angle ({b1:.6g}, {b2:.6g})"
                    )

    def arm_angle(self, row: NonlocalRow) -> float:
        return self.b1 if row.endpoint == "lower" else self.b2

    def target_angle(self, row: NonlocalRow) -> Optional[float]:
        if row.nonlocal_ is None:
            return None
        return self.arm_angle(row) + row.nonlocal_.shift

    @property
    def opening(self) -> float:
        return self.b2 - self.b1

    @property
    def is_local(self) -> bool:
        return all(r.nonlocal_ is None for r in self.rows)

    @classmethod
    def dirichlet(cls, b1: float, b2: float) -> "AnglePencil":
        return cls(b1, b2, (NonlocalRow("lower"), NonlocalRow("upper")))


@dataclass(frozen=True)
class PeriodicPencil:
    """Marker for ``phi'' - lam^2 phi`` on the 2*pi-periodic circle."""

    lo: float = 0.0
    hi: float = 2.0 * math.pi


# ---------------------------------------------------------------------------
# fundamental system

def _fs_values(lam, t):
    """(s1, s1', s2, s2') at ``t = w - b1`` for arrays of ``lam``."""
    lam = np.asarray(lam, dtype=complex)
    z = lam * t
    ch = np.cosh(z)
    sc = sinhc(z)
    return ch, lam * lam * t * sc, t * sc, ch


def _series_derivative_terms(lam0: complex, q: int, which: int, tol=1e-18):
    """(coeff, power) pairs of (1/q!) d^q/dlam^q of cosh(lam t) or sinh(lam t)/lam.

    Power series in ``lam`` around 0, used when ``|lam0| * L`` is small.
    ``which = 1`` selects cosh, ``which = 2`` selects sinh/lam.
    """
    terms = []
    for n in range(0, 60):
        deg = 2 * n
        if deg < q:
            continue
        coeff = math.comb(deg, q) * lam0 ** (deg - q)
        if which == 1:
            coeff /= math.factorial(2 * n)
            power = 2 * n
        else:
            coeff /= math.factorial(2 * n + 1)
            power = 2 * n + 1
        terms.append((coeff, power))
        if n > q and abs(coeff) < tol and power > 2:
            break
    return terms


def fundamental_derivative(lam0, q: int, b1: float, lo: float, hi: float):
    """Exact ``(1/q!) d^q/dlam^q`` of ``(s1, s2)`` at ``lam0`` as ExpPolys in ``w``.

    Both profiles use ``b1`` as origin so that the ``(w - b1)`` powers stay exact.
    """
    lam0 = complex(lam0)
    span = max(abs(hi - b1), abs(lo - b1), 1e-300)
    if abs(lam0) * span < SMALL_ARG:
        s1 = ExpPoly([(c, 0.0, p) for c, p in _series_derivative_terms(lam0, q, 1)
                      if p <= 64], lo, hi, b1)
        s2 = ExpPoly([(c, 0.0, p) for c, p in _series_derivative_terms(lam0, q, 2)
                      if p <= 64], lo, hi, b1)
        return s1, s2
    fq = 1.0 / math.factorial(q)
    s1 = ExpPoly([(0.5 * fq, lam0, q), (0.5 * fq * (-1) ** q, -lam0, q)], lo, hi, b1)
    # sinh(lam t)/lam: Leibniz on (e^{lam t} - e^{-lam t})/2 times 1/lam
    terms = []
    for p in range(q + 1):
        j = q - p
        inv = (-1) ** j / lam0 ** (j + 1)
        fp = 1.0 / math.factorial(p)
        terms.append((0.5 * fp * inv, lam0, p))
        terms.append((-0.5 * fp * (-1) ** p * inv, -lam0, p))
    return s1, ExpPoly(terms, lo, hi, b1)


def fundamental_system(lam, b1: float = 0.0, lo: Optional[float] = None,
                       hi: Optional[float] = None):
    """``cosh(lam (w-b1))`` and ``sinh(lam (w-b1))/lam`` as ExpPolys on ``[lo, hi]``."""
    lo = b1 if lo is None else lo
    hi = b1 + 2.0 * math.pi if hi is None else hi
    return fundamental_derivative(lam, 0, b1, lo, hi)


# ---------------------------------------------------------------------------
# characteristic matrix

def _row_on_fs(p: AnglePencil, row: NonlocalRow, lam):
    """Row functional applied to (s1, s2) for arrays of ``lam``; returns two arrays."""
    x = p.arm_angle(row)
    a0, a1 = row.local
    v1, d1, v2, d2 = _fs_values(lam, x - p.b1)
    e1 = a0 * v1 + a1 * d1
    e2 = a0 * v2 + a1 * d2
    nl = row.nonlocal_
    if nl is not None:
        fac = nl.factor(lam)
        t0, t1 = nl.tau
        w1, dw1, w2, dw2 = _fs_values(lam, x + nl.shift - p.b1)
        e1 = e1 + fac * (t0 * w1 + t1 * dw1)
        e2 = e2 + fac * (t0 * w2 + t1 * dw2)
    return e1, e2


def char_entries(p: AnglePencil, lam):
    """2x2 characteristic matrix entries, vectorized: shape ``lam.shape + (2, 2)``."""
    lam = np.asarray(lam, dtype=complex)
    out = np.empty(lam.shape + (2, 2), dtype=complex)
    for i, row in enumerate(p.rows):
        e1, e2 = _row_on_fs(p, row, lam)
        out[..., i, 0] = e1
        out[..., i, 1] = e2
    return out


def char_det(p: AnglePencil, lam):
    """Determinant of the characteristic matrix (entire in ``lam``)."""
    m = char_entries(p, lam)
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    return det if np.ndim(det) else complex(det)


@dataclass(frozen=True)
class CharMatrix:
    """Jets of the four characteristic-matrix entries at a common center."""

    center: complex
    entries: tuple  # ((j00, j01), (j10, j11)) of AnalyticJet

    def __post_init__(self):
        jets = [j for row in self.entries for j in row]
        if len({j.order for j in jets}) != 1 or len({j.center for j in jets}) != 1:
            raise ValueError("entry jets must share center and order")

    @property
    def order(self) -> int:
        return self.entries[0][0].order

    def coeff(self, k: int) -> np.ndarray:
        """Matrix of Taylor coefficients of order ``k``."""
        return np.array([[self.entries[i][j].coeffs[k] for j in range(2)] for i in range(2)])

    def coeff_stack(self) -> np.ndarray:
        return np.array([self.coeff(k) for k in range(self.order + 1)])


def matrix_jets(mfunc, lambda0, order: int, radius: float = 0.1, nodes: int = 64) -> CharMatrix:
    """Jets of a vectorized 2x2 analytic matrix function."""
    entries = []
    for i in range(2):
        row = []
        for j in range(2):
            row.append(analytic_jet(lambda z, i=i, j=j: mfunc(z)[..., i, j],
                                    lambda0, order, radius, nodes))
        entries.append(tuple(row))
    return CharMatrix(complex(lambda0), tuple(entries))


def char_matrix(p: AnglePencil, lambda0, jet_order: int = 0, radius: float = 0.1,
                nodes: int = 64) -> CharMatrix:
    """Characteristic-matrix jets of ``p`` at ``lambda0`` (``K + 1`` coefficients)."""
    if jet_order < 0:
        raise InputError("jet order must be non-negative")
    return matrix_jets(lambda z: char_entries(p, z), lambda0, jet_order, radius, nodes)


# ---------------------------------------------------------------------------
# periodic pencil

@dataclass(frozen=True)
class PeriodicEigen:
    """Closed-form eigen-data of the periodic pencil at one eigenvalue."""

    lam: complex
    chains: tuple  # tuple of tuples of ExpPoly

    @property
    def partial_mults(self):
        return tuple(len(c) for c in self.chains)

    @property
    def multiplicity(self) -> int:
        return sum(self.partial_mults)


def periodic_chains(lam0) -> tuple:
    """Canonical Jordan chains of the periodic pencil at an eigenvalue ``lam0``."""
    lam0 = complex(lam0)
    n = lam0.imag
    lo, hi = 0.0, 2.0 * math.pi
    if abs(lam0) < 1e-12:
        return ((ExpPoly.constant(1.0, lo, hi), ExpPoly.zero(lo, hi)),)
    k = int(round(abs(n)))
    if abs(lam0.real) > 1e-12 or k == 0 or abs(abs(n) - k) > 1e-12:
        raise InputError(f"{lam0} is not an eigenvalue of the periodic pencil")
    return ((ExpPoly.exp(1j * k, lo, hi),), (ExpPoly.exp(-1j * k, lo, hi),))


def _edge_check(values, im_lo, im_hi, what):
    for v in values:
        for edge in (im_lo, im_hi):
            if abs(v - edge) < STRIP_EDGE_TOL:
                raise StripViolationError(
                    f"{what} eigenvalue with Im = {v:g} lies on the strip edge {edge:g}",
                    offending=complex(0, v),
                )


def periodic_eigendata(strip, on_edge: str = "error") -> list:
    """Periodic-pencil eigenvalues with ``Im lam`` in the open strip, with chains.

    ``on_edge="exclude"`` drops eigenvalues on the boundary lines instead of raising.
    """
    im_lo, im_hi = strip_bounds(strip)
    kmax = int(math.ceil(max(abs(im_lo), abs(im_hi)))) + 1
    candidates = [0] + [s * k for k in range(1, kmax + 1) for s in (1, -1)]
    if on_edge == "error":
        _edge_check(candidates, im_lo, im_hi, "periodic")
    elif on_edge != "exclude":
        raise InputError("on_edge must be 'error' or 'exclude'")
    out = []
    for n in sorted(candidates):
        if im_lo + STRIP_EDGE_TOL <= n <= im_hi - STRIP_EDGE_TOL:
            lam = complex(0.0, n)
            out.append(PeriodicEigen(lam, periodic_chains(lam)))
    return out


def periodic_operator_jet(profile: ExpPoly, lam0, n: int) -> ExpPoly:
    """``(1/n!) d^n/dlam^n`` of ``phi'' - lam^2 phi`` applied to a fixed profile."""
    lam0 = complex(lam0)
    if n == 0:
        return profile.derivative(2) - lam0 ** 2 * profile
    if n == 1:
        return -2.0 * lam0 * profile
    if n == 2:
        return -1.0 * profile
    return ExpPoly.zero(profile.lo, profile.hi, profile.origin)


def strip_bounds(strip):
    """(im_lo, im_hi) from a ``WeightStrip``-like object or a pair."""
    if hasattr(strip, "bounds"):
        im_lo, im_hi = strip.bounds
    else:
        im_lo, im_hi = strip
    im_lo, im_hi = float(im_lo), float(im_hi)
    if not (math.isfinite(im_lo) and math.isfinite(im_hi)):
        raise InputError("strip bounds must be finite")
    if not im_lo < im_hi:
        raise InputError(f"empty strip ({im_lo}, {im_hi})")
    return im_lo, im_hi


def angle_operator_jet(p: AnglePencil, profile: ExpPoly, lam0, n: int):
    """``(1/n!) d^n/dlam^n`` of the angle pencil applied to a fixed profile.

    Returns ``(interior, rows)`` with ``interior`` an ExpPoly and ``rows`` a
    length-2 complex array (lower arm first).
    """
    lam0 = complex(lam0)
    interior = periodic_operator_jet(profile, lam0, n)
    dprof = profile.derivative(1)
    rows = np.zeros(2, dtype=complex)
    for i, row in enumerate(p.rows):
        x = p.arm_angle(row)
        if n == 0:
            a0, a1 = row.local
            rows[i] += a0 * profile(x) + a1 * dprof(x)
        nl = row.nonlocal_
        if nl is not None:
            c = x + nl.shift
            t0, t1 = nl.tau
            rows[i] += nl.factor_jet(lam0, n) * (t0 * profile(c) + t1 * dprof(c))
    return interior, rows
