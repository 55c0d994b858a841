"""Complex utilities: exponential polynomials, Taylor jets and winding numbers.

An :class:`ExpPoly` is a finite sum ``c * (w - origin)**j * exp(mu * (w - origin))``
on a real interval.  The algebra is closed under sums, products, differentiation
and conjugation, and ``inner`` evaluates ``int f * conj(g)`` exactly, which is all
the angular bookkeeping in this package needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContourDegeneracyError, DomainError, EvaluationError

MAX_POWER = 64
MERGE_TOL = 1e-12


def _as_complex(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise EvaluationError(f"non-finite complex value {z!r}")
    return z


def _canonical_terms(terms):
    merged: list[list] = []
    for coeff, mu, power in terms:
        coeff = _as_complex(coeff)
        mu = _as_complex(mu)
        power = int(power)
        if power < 0:
            raise ValueError("ExpPoly powers must be non-negative")
        if power > MAX_POWER:
            raise ValueError(f"ExpPoly power {power} exceeds the limit {MAX_POWER}")
        for slot in merged:
            if slot[2] == power and abs(slot[1] - mu) < MERGE_TOL:
                slot[0] += coeff
                break
        else:
            merged.append([coeff, mu, power])
    out = [(c, m, p) for c, m, p in merged if c != 0]
    out.sort(key=lambda t: (t[2], round(t[1].real, 12), round(t[1].imag, 12)))
    return tuple(out)


def _moment(power: int, a: complex, t0: float, t1: float) -> complex:
    """Integral of ``t**power * exp(a t)`` over ``[t0, t1]``."""
    scale = max(abs(t0), abs(t1))
    if abs(a) * scale <= 2.0:
        total = 0j
        term_a = 1.0 + 0j
        for n in range(200):
            k = power + n + 1
            term = term_a * (t1 ** k - t0 ** k) / k
            total += term
            if n > 4 and abs(term) <= 1e-18 * max(abs(total), 1e-300):
                break
            term_a *= a / (n + 1)
        return total

    def antiderivative(t):
        acc = 0j
        falling = 1.0
        for k in range(power + 1):
            acc += (-1) ** k * falling * t ** (power - k) / a ** (k + 1)
            falling *= power - k
        return np.exp(a * t) * acc

    return complex(antiderivative(t1) - antiderivative(t0))


@dataclass(frozen=True)
class ExpPoly:
    """Exponential polynomial ``sum c (w-origin)^j e^{mu (w-origin)}`` on ``[lo, hi]``."""

    terms: tuple
    lo: float
    hi: float
    origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terms", _canonical_terms(self.terms))
        lo, hi = float(self.lo), float(self.hi)
        if not lo < hi:
            raise ValueError(f"empty ExpPoly domain [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "origin", float(self.origin))

    # construction helpers
    @classmethod
    def zero(cls, lo, hi, origin=0.0):
        return cls((), lo, hi, origin)

    @classmethod
    def constant(cls, c, lo, hi, origin=0.0):
        return cls(((c, 0.0, 0),), lo, hi, origin)

    @classmethod
    def exp(cls, mu, lo, hi, coeff=1.0, origin=0.0):
        return cls(((coeff, mu, 0),), lo, hi, origin)

    # evaluation
    def _check_domain(self, omega):
        tol = 1e-12 * (1.0 + max(abs(self.lo), abs(self.hi)))
        w = np.asarray(omega, dtype=float)
        if np.any(w < self.lo - tol) or np.any(w > self.hi + tol):
            raise DomainError(f"omega outside [{self.lo}, {self.hi}]")
        return w

    def __call__(self, omega):
        w = self._check_domain(omega)
        t = w - self.origin
        out = np.zeros(np.shape(t), dtype=complex)
        for c, mu, p in self.terms:
            out = out + c * t ** p * np.exp(mu * t)
        return out if np.ndim(out) else complex(out)

    # algebra
    def _compatible(self, other: "ExpPoly") -> "ExpPoly":
        if abs(self.lo - other.lo) > 1e-12 or abs(self.hi - other.hi) > 1e-12:
            raise DomainError("ExpPoly operands live on different intervals")
        if self.origin != other.origin:
            return other.rebase(self.origin)
        return other

    def __add__(self, other):
        if isinstance(other, ExpPoly):
            other = self._compatible(other)
            return ExpPoly(self.terms + other.terms, self.lo, self.hi, self.origin)
        return self + ExpPoly.constant(other, self.lo, self.hi, self.origin)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, ExpPoly):
            other = self._compatible(other)
            terms = [
                (c1 * c2, m1 + m2, p1 + p2)
                for c1, m1, p1 in self.terms
                for c2, m2, p2 in other.terms
            ]
            return ExpPoly(terms, self.lo, self.hi, self.origin)
        s = _as_complex(other)
        return ExpPoly([(s * c, m, p) for c, m, p in self.terms], self.lo, self.hi, self.origin)

    __rmul__ = __mul__

    def conj(self) -> "ExpPoly":
        return ExpPoly(
            [(c.conjugate(), m.conjugate(), p) for c, m, p in self.terms],
            self.lo, self.hi, self.origin,
        )

    def derivative(self, order: int = 1) -> "ExpPoly":
        f = self
        for _ in range(order):
            terms = []
            for c, mu, p in f.terms:
                if p:
                    terms.append((c * p, mu, p - 1))
                terms.append((c * mu, mu, p))
            f = ExpPoly(terms, f.lo, f.hi, f.origin)
        return f

    def restrict(self, lo: float, hi: float) -> "ExpPoly":
        tol = 1e-12 * (1.0 + max(abs(self.lo), abs(self.hi)))
        if lo < self.lo - tol or hi > self.hi + tol:
            raise DomainError("restriction leaves the domain")
        return ExpPoly(self.terms, lo, hi, self.origin)

    def rebase(self, origin: float) -> "ExpPoly":
        """Rewrite the same function around a different origin."""
        d = self.origin - origin
        terms = []
        for c, mu, p in self.terms:
            # (t' - d)^p e^{mu (t' - d)} with t' = w - origin
            shift = c * np.exp(-mu * d)
            for k in range(p + 1):
                terms.append((shift * math.comb(p, k) * (-d) ** (p - k), mu, k))
        return ExpPoly(terms, self.lo, self.hi, origin)

    def with_domain(self, lo: float, hi: float) -> "ExpPoly":
        """Same analytic expression on a new interval (no containment check)."""
        return ExpPoly(self.terms, lo, hi, self.origin)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def max_power(self) -> int:
        return max((p for _, _, p in self.terms), default=0)


def expoly_eval(f: ExpPoly, omega):
    """Evaluate ``f`` at ``omega`` (scalar or array)."""
    return f(omega)


def expoly_inner(f: ExpPoly, g: ExpPoly) -> complex:
    """Closed-form ``int_lo^hi f(w) conj(g(w)) dw``."""
    g = f._compatible(g)
    t0, t1 = f.lo - f.origin, f.hi - f.origin
    total = 0j
    for cf, mf, pf in f.terms:
        for cg, mg, pg in g.terms:
            total += cf * cg.conjugate() * _moment(pf + pg, mf + mg.conjugate(), t0, t1)
    return complex(total)


@dataclass(frozen=True)
class PiecewiseExpPoly:
    """Contiguous ExpPoly pieces; used for densities with kinks at interior points."""

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("need at least one piece")
        for a, b in zip(pieces[:-1], pieces[1:]):
            if abs(a.hi - b.lo) > 1e-12:
                raise ValueError("pieces must be contiguous")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def wrap(cls, f) -> "PiecewiseExpPoly":
        return f if isinstance(f, PiecewiseExpPoly) else cls((f,))

    @property
    def lo(self) -> float:
        return self.pieces[0].lo

    @property
    def hi(self) -> float:
        return self.pieces[-1].hi

    @property
    def breaks(self) -> tuple:
        return tuple(p.hi for p in self.pieces[:-1])

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        tol = 1e-12 * (1.0 + max(abs(self.lo), abs(self.hi)))
        if np.any(w < self.lo - tol) or np.any(w > self.hi + tol):
            raise DomainError(f"omega outside [{self.lo}, {self.hi}]")
        idx = np.searchsorted(np.asarray(self.breaks), w, side="right")
        out = np.zeros(w.shape, dtype=complex)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = piece.with_domain(self.lo - 1, self.hi + 1)(w[mask])
        return out if out.ndim else complex(out)

    def limits(self, x: float):
        """(left, right) values at ``x``."""
        left = right = None
        for piece in self.pieces:
            if abs(piece.hi - x) < 1e-12:
                left = piece(piece.hi)
            if abs(piece.lo - x) < 1e-12:
                right = piece(piece.lo)
            if piece.lo < x < piece.hi:
                left = right = piece(x)
        return left, right

    def map(self, fn) -> "PiecewiseExpPoly":
        return PiecewiseExpPoly(tuple(fn(p) for p in self.pieces))

    def derivative(self, order: int = 1) -> "PiecewiseExpPoly":
        return self.map(lambda p: p.derivative(order))

    def conj(self) -> "PiecewiseExpPoly":
        return self.map(lambda p: p.conj())

    def __mul__(self, other):
        s = _as_complex(other)
        return self.map(lambda p: p * s)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __add__(self, other):
        other = PiecewiseExpPoly.wrap(other)
        a, b = self.refine(other.breaks), other.refine(self.breaks)
        return PiecewiseExpPoly(tuple(x + y for x, y in zip(a.pieces, b.pieces)))

    def __sub__(self, other):
        return self + (-PiecewiseExpPoly.wrap(other))

    def refine(self, points) -> "PiecewiseExpPoly":
        """Split pieces at extra interior points."""
        out = []
        for piece in self.pieces:
            cuts = sorted(x for x in points if piece.lo + 1e-12 < x < piece.hi - 1e-12)
            edges = [piece.lo] + cuts + [piece.hi]
            out.extend(piece.restrict(a, b) for a, b in zip(edges[:-1], edges[1:]))
        return PiecewiseExpPoly(tuple(out))

    @property
    def is_zero(self) -> bool:
        return all(p.is_zero for p in self.pieces)


def inner(f, g) -> complex:
    """``int f conj(g)`` for ExpPoly or PiecewiseExpPoly operands on the same interval."""
    if isinstance(f, ExpPoly) and isinstance(g, ExpPoly):
        return expoly_inner(f, g)
    f = PiecewiseExpPoly.wrap(f)
    g = PiecewiseExpPoly.wrap(g)
    if abs(f.lo - g.lo) > 1e-12 or abs(f.hi - g.hi) > 1e-12:
        raise DomainError("inner product operands live on different intervals")
    a, b = f.refine(g.breaks), g.refine(f.breaks)
    return complex(sum(expoly_inner(x, y) for x, y in zip(a.pieces, b.pieces)))


# ---------------------------------------------------------------------------
# Taylor jets by Cauchy integrals

@dataclass(frozen=True)
class AnalyticJet:
    """Taylor coefficients ``f^(k)(center)/k!`` for ``k = 0..K``."""

    center: complex
    coeffs: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("jet radius must be positive")
        if not self.coeffs:
            raise ValueError("jet needs at least one coefficient")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def derivative(self, k: int) -> complex:
        return math.factorial(k) * self.coeffs[k]

    def __call__(self, z):
        dz = np.asarray(z, dtype=complex) - self.center
        out = np.zeros_like(dz)
        for c in reversed(self.coeffs):
            out = out * dz + c
        return out if np.ndim(out) else complex(out)


def eval_vectorized(f: Callable, z: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on an array, falling back to a loop for scalar callables."""
    z = np.asarray(z, dtype=complex)
    try:
        out = np.asarray(f(z), dtype=complex)
        if out.shape != z.shape:
            raise ValueError
    except (TypeError, ValueError):
        out = np.array([complex(f(zz)) for zz in z.ravel()], dtype=complex).reshape(z.shape)
    return out


def analytic_jet(f: Callable, center, order: int, radius: float = 0.1,
                 nodes: int = 64) -> AnalyticJet:
    """Taylor coefficients of an analytic ``f`` from a trapezoidal Cauchy integral.

    Uses ``N >= max(32, 8K, nodes)`` equispaced nodes on the circle of the given
    radius; coefficient ``k`` approximates ``f^(k)(center)/k!``.
    """
    if order < 0:
        raise ValueError("jet order must be non-negative")
    center = complex(center)
    n = max(32, 8 * order, int(nodes))
    theta = 2.0 * np.pi * np.arange(n) / n
    samples = eval_vectorized(f, center + radius * np.exp(1j * theta))
    if not np.all(np.isfinite(samples)):
        raise EvaluationError("non-finite sample in Cauchy integral")
    fft = np.fft.fft(samples) / n
    coeffs = tuple(complex(fft[k] / radius ** k) for k in range(order + 1))
    return AnalyticJet(center, coeffs, float(radius))


# ---------------------------------------------------------------------------
# argument principle

@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle ``[x0, x1] x [y0, y1]`` in the complex plane."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def diameter(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.x0 - pad <= z.real <= self.x1 + pad
                and self.y0 - pad <= z.imag <= self.y1 + pad)

    def split(self, frac: float = 0.5):
        """Split across the longer side; returns two rectangles."""
        if self.x1 - self.x0 >= self.y1 - self.y0:
            xm = self.x0 + frac * (self.x1 - self.x0)
            return Rect(self.x0, xm, self.y0, self.y1), Rect(xm, self.x1, self.y0, self.y1)
        ym = self.y0 + frac * (self.y1 - self.y0)
        return Rect(self.x0, self.x1, self.y0, ym), Rect(self.x0, self.x1, ym, self.y1)

    def path(self) -> Callable[[np.ndarray], np.ndarray]:
        corners = np.array([complex(self.x0, self.y0), complex(self.x1, self.y0),
                            complex(self.x1, self.y1), complex(self.x0, self.y1)])
        lengths = np.abs(np.roll(corners, -1) - corners)
        cum = np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum()

        def z(t):
            t = np.mod(np.asarray(t, dtype=float), 1.0)
            side = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, 3)
            s = (t - cum[side]) / (cum[side + 1] - cum[side])
            return corners[side] + s * (corners[(side + 1) % 4] - corners[side])

        z.breakpoints = cum[:-1]
        return z


def _winding_on_path(f, z_of_t, initial_t, abs_tol, max_nodes=200_000) -> int:
    t = np.sort(np.asarray(initial_t, dtype=float))
    vals = eval_vectorized(f, z_of_t(t))
    for _ in range(60):
        if not np.all(np.isfinite(vals)):
            raise EvaluationError("non-finite value on contour")
        if np.min(np.abs(vals)) <= abs_tol:
            raise ContourDegeneracyError(
                f"|f| = {np.min(np.abs(vals)):.3e} on contour (<= {abs_tol}); perturb the contour"
            )
        nxt = np.roll(vals, -1)
        dphase = np.angle(nxt / vals)
        bad = np.abs(dphase) >= np.pi / 2
        if not bad.any():
            raw = dphase.sum() / (2 * np.pi)
            k = int(round(raw))
            if abs(raw - k) >= 0.25:
                raise ContourDegeneracyError(f"winding number {raw:.3f} not near an integer")
            return k
        t_next = np.roll(t, -1)
        t_next[-1] += 1.0
        mids = 0.5 * (t[bad] + t_next[bad])
        mids = np.mod(mids, 1.0)
        t = np.concatenate([t, mids])
        order = np.argsort(t)
        t = t[order]
        vals = np.concatenate([vals, eval_vectorized(f, z_of_t(mids))])[order]
        if t.size > max_nodes:
            break
    raise ContourDegeneracyError("adaptive contour refinement did not settle")


def winding_count(f: Callable, contour: Rect, nodes_per_side: int = 64,
                  abs_tol: float = 1e-8) -> int:
    """Number of zeros of ``f`` inside a rectangle by the argument principle."""
    if not isinstance(contour, Rect):
        contour = Rect(*contour)
    z = contour.path()
    base = np.concatenate([
        b + np.arange(nodes_per_side) / nodes_per_side * (e - b)
        for b, e in zip(z.breakpoints, list(z.breakpoints[1:]) + [1.0])
    ])
    return _winding_on_path(f, z, base, abs_tol)


def winding_count_circle(f: Callable, center, radius: float, nodes: int = 128,
                         abs_tol: float = 0.0) -> int:
    """Argument-principle zero count on a circle."""
    center = complex(center)

    def z(t):
        return center + radius * np.exp(2j * np.pi * np.asarray(t, dtype=float))

    return _winding_on_path(f, z, np.arange(nodes) / nodes, abs_tol)


def gauss_legendre(a: float, b: float, n: int):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def finite_complex(values: Sequence) -> bool:
    arr = np.asarray(values, dtype=complex)
    return bool(np.all(np.isfinite(arr)))
