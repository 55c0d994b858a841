"""Eigenvalues, partial multiplicities and Jordan chains of the pencils."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (CapabilityError, ConditioningError, ContourDegeneracyError,
                     InputError, RefinementError, StripViolationError)
from .numeric import ExpPoly, Rect, analytic_jet, winding_count, winding_count_circle
from .pencil import (AnglePencil, CharMatrix, PeriodicPencil, angle_operator_jet,
                     char_det, char_entries, char_matrix, fundamental_derivative,
                     matrix_jets, periodic_chains, periodic_eigendata,
                     periodic_operator_jet, strip_bounds)

EDGE_TOL = 1e-9
EDGE_TOL_MULTIPLE = 1e-7
BOX_PAD = 1e-6
LEAF_DIAMETER = 1e-2
MULT_RADIUS = 1e-4
MAX_NEWTON = 200
MAX_SMITH_ORDER = 8
ORDER_TOL = 1e-8
CHAIN_TOL = 1e-8


@dataclass(frozen=True)
class WeightStrip:
    """Weight pair ``(a1, a)`` and the Mellin strip it induces.

    The strip is ``a1 + 1 - l - 2m < Im lam < a + 1 - l - 2m``.
    """

    a: float
    a1: float
    l: int = 0
    m: int = 1
    relaxed: bool = False

    def __post_init__(self):
        for name in ("a", "a1"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"weight {name} must be finite")
        if self.l < 0 or int(self.l) != self.l:
            raise InputError("smoothness index l must be a non-negative integer")
        if self.m < 1 or int(self.m) != self.m:
            raise InputError("order m must be a positive integer")
        width = self.a - self.a1
        if width <= 0:
            raise InputError(f"need a > a1, got a={self.a}, a1={self.a1}")
        if width >= 1 and not self.relaxed:
            raise InputError(
                f"a - a1 = {width:g} >= 1; set relaxed to allow wide strips"
            )

    @property
    def shift(self) -> float:
        return 1.0 - self.l - 2.0 * self.m

    @property
    def bounds(self):
        return (self.a1 + self.shift, self.a + self.shift)

    @classmethod
    def from_bounds(cls, im_lo: float, im_hi: float, l: int = 0, m: int = 1) -> "WeightStrip":
        shift = 1.0 - l - 2.0 * m
        return cls(a=im_hi - shift, a1=im_lo - shift, l=l, m=m,
                   relaxed=(im_hi - im_lo) >= 1)

    def split_at(self, a_mid: float):
        if not self.a1 < a_mid < self.a:
            raise InputError("split weight must lie strictly inside (a1, a)")
        return (WeightStrip(a_mid, self.a1, self.l, self.m, self.relaxed),
                WeightStrip(self.a, a_mid, self.l, self.m, self.relaxed))


# ---------------------------------------------------------------------------
# root finding

def _newton(f, x0: complex, mult: int, scale: float, box: Rect):
    x = complex(x0)
    for it in range(MAX_NEWTON):
        fx = complex(f(x))
        h = 1e-5 * max(1.0, abs(x))
        df = (complex(f(x + h)) - complex(f(x - h))) / (2 * h)
        if fx == 0:
            return x
        if df == 0 or not np.isfinite(df):
            raise RefinementError(f"vanishing derivative during refinement in box {box}")
        step = mult * fx / df
        x = x - step
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            return x
        if it > 5 and abs(fx) < 1e-14 * scale and abs(step) < 1e-10:
            return x
    raise RefinementError(f"Newton refinement did not converge in box {box}")


def _local_scale(f, z: complex, radius: float = 0.1) -> float:
    t = np.exp(2j * np.pi * np.arange(32) / 32)
    return float(np.max(np.abs(f(z + radius * t))))


def _phase_preserving(f, box: Rect):
    """``f`` times a positive envelope flattening exponential growth in ``Re z``.

    The argument of ``f`` is unchanged, so winding numbers are unaffected, while a
    single absolute degeneracy tolerance becomes meaningful across the box.
    """
    zs = box.path()(np.linspace(0, 1, 400, endpoint=False))
    mag = np.abs(f(zs))
    x = np.abs(zs.real)
    ok = mag > 0
    growth = 0.0
    if ok.sum() > 2 and np.ptp(x[ok]) > 0:
        growth = max(0.0, float(np.polyfit(x[ok], np.log(mag[ok]), 1)[0]))

    def g(z):
        z = np.asarray(z, dtype=complex)
        return f(z) * np.exp(-growth * np.abs(z.real))

    return g, 1e-13 * float(np.max(np.abs(g(zs))))


def _safe_count(f, box: Rect, tol: float) -> int:
    return winding_count(f, box, abs_tol=tol)


def _split_counted(g, box: Rect, n: int, tol: float):
    # start off-centre: symmetric boxes would cut along Re z = 0, where roots often sit
    for frac in (0.47, 0.53, 0.41, 0.59, 0.37, 0.63, 0.5):
        a, b = box.split(frac)
        try:
            na = _safe_count(g, a, tol)
            nb = _safe_count(g, b, tol)
        except ContourDegeneracyError:
            continue
        if na + nb == n and na >= 0 and nb >= 0:
            return (a, na), (b, nb)
    raise ContourDegeneracyError(f"could not split box {box} cleanly")


def _refine_leaf(f, box: Rect, n: int, tol: float):
    """Roots inside a small box with count ``n`` (1 or 2); None if unresolved."""
    scale = _local_scale(f, box.center)
    pad = box.diameter
    x = _newton(f, box.center, n, scale, box)
    if not box.contains(x, pad):
        return None
    if n == 1:
        return [(x, 1)]
    try:
        m = winding_count_circle(f, x, MULT_RADIUS)
    except ContourDegeneracyError:
        return None
    if m == 2:
        return [(x, 2)]
    x1 = _newton(f, x, 1, scale, box)

    def g(z):
        return f(z) / (z - x1)

    x2 = _newton(g, box.center if abs(box.center - x1) > 1e-6 else box.center + 1e-3,
                 1, scale, box)
    if not box.contains(x2, pad) or abs(x2 - x1) < 1e-12:
        return None
    return [(x1, 1), (x2, 1)]


def _search(f, g, box: Rect, n: int, tol: float):
    if n == 0:
        return []
    if n <= 2 and box.diameter < LEAF_DIAMETER:
        found = _refine_leaf(f, box, n, tol)
        if found is not None:
            return found
        if box.diameter < 1e-9:
            raise RefinementError(f"roots in box {box} could not be resolved")
    (a, na), (b, nb) = _split_counted(g, box, n, tol)
    return _search(f, g, a, na, tol) + _search(f, g, b, nb, tol)


def _merge_clusters(f, roots, tol: float = 1e-6):
    """Merge roots closer than ``tol``; a root on a split line can be counted twice."""
    roots = list(roots)
    merged = []
    while roots:
        z, m = roots.pop(0)
        near = [(w, k) for w, k in roots if abs(w - z) < tol * max(1.0, abs(z))]
        if near:
            roots = [r for r in roots if r not in near]
            total = m + sum(k for _, k in near)
            z = (z * m + sum(w * k for w, k in near)) / total
            count = winding_count_circle(f, z, MULT_RADIUS)
            if count != total:
                raise RefinementError(
                    f"root cluster near {z:.12g}: counted {count}, refined {total}")
            m = total
        merged.append((z, m))
    return merged


def find_zeros(f: Callable, im_lo: float, im_hi: float, re_bound: float = 10.0,
               on_edge: str = "error", edge_hits: Optional[list] = None):
    """Zeros of an entire function with ``|Re z| <= re_bound`` and ``im_lo < Im z < im_hi``.

    Returns a list of ``(zero, multiplicity)`` sorted by imaginary then real part.
    Raises :class:`StripViolationError` if a zero lies on either boundary line,
    unless ``on_edge="exclude"``, in which case such zeros are appended to
    ``edge_hits`` and skipped.
    """
    if on_edge not in ("error", "exclude"):
        raise InputError("on_edge must be 'error' or 'exclude'")
    if not re_bound > 0:
        raise InputError("re_bound must be positive")
    if not im_lo < im_hi:
        raise InputError(f"empty strip ({im_lo}, {im_hi})")
    last_err = None
    for pad_mul, r_mul in ((1.0, 1.0), (1.37, 1.0003), (0.71, 1.0007), (1.9, 0.9995)):
        pad = BOX_PAD * pad_mul
        box = Rect(-re_bound * r_mul, re_bound * r_mul, im_lo - pad, im_hi + pad)
        g, tol = _phase_preserving(f, box)
        try:
            total = _safe_count(g, box, tol)
            roots = _search(f, g, box, total, tol)
            break
        except ContourDegeneracyError as err:
            last_err = err
    else:
        raise last_err
    out = []
    for z, m in _merge_clusters(f, roots):
        etol = EDGE_TOL if m == 1 else EDGE_TOL_MULTIPLE
        on_line = any(abs(z.imag - edge) < etol for edge in (im_lo, im_hi))
        if on_line and abs(z.real) <= re_bound:
            if on_edge == "error":
                raise StripViolationError(
                    f"eigenvalue {z:.12g} lies on a strip boundary line "
                    f"(Im = {im_lo:g} or {im_hi:g})", offending=z)
            if edge_hits is not None:
                edge_hits.append((z, m))
            continue
        if im_lo < z.imag < im_hi and abs(z.real) <= re_bound:
            if abs(z.real) < 1e-12:
                z = complex(0.0, z.imag)
            out.append((z, m))
    return sorted(out, key=lambda t: (round(t[0].imag, 9), t[0].real))


def find_eigenvalues(p: AnglePencil, strip, re_bound: float = 10.0,
                     on_edge: str = "error", edge_hits: Optional[list] = None):
    """Eigenvalues of the angle pencil in the open strip with algebraic multiplicities."""
    im_lo, im_hi = strip_bounds(strip)
    return find_zeros(lambda z: char_det(p, z), im_lo, im_hi, re_bound, on_edge, edge_hits)


# ---------------------------------------------------------------------------
# local Smith form

def _vanishing_order(coeffs, radius: float, tol: float = ORDER_TOL) -> int:
    scaled = np.abs(np.asarray(coeffs)) * radius ** np.arange(len(coeffs))
    ref = scaled.max()
    if ref == 0:
        return len(coeffs)
    for k, v in enumerate(scaled):
        if v > tol * ref:
            return k
    return len(coeffs)


@dataclass(frozen=True)
class SmithData:
    """Vanishing orders at one eigenvalue and the jets they were measured from."""

    lambda0: complex
    partial_mults: tuple
    min_entry_order: int
    det_order: int
    jets: CharMatrix


def _det_jet(cm: CharMatrix) -> np.ndarray:
    m = cm.coeff_stack()
    n = m.shape[0]
    out = np.zeros(n, dtype=complex)
    for i in range(n):
        for j in range(n - i):
            out[i + j] += m[i, 0, 0] * m[j, 1, 1] - m[i, 0, 1] * m[j, 1, 0]
    return out


def smith_from_jets(cm: CharMatrix, radius: float = 0.1) -> SmithData:
    coeffs = cm.coeff_stack()
    n = coeffs.shape[0]
    entry_orders = [_vanishing_order(coeffs[:, i, j], radius) for i in range(2) for j in range(2)]
    d1 = min(entry_orders)
    total = _vanishing_order(_det_jet(cm), radius)
    if total == 0:
        raise InputError(f"{cm.center} is not an eigenvalue (determinant does not vanish)")
    if total > MAX_SMITH_ORDER or total + 2 > n - 1:
        raise CapabilityError(
            f"determinant vanishes to order > {MAX_SMITH_ORDER} at {cm.center}")
    mults = tuple(sorted((k for k in (d1, total - d1) if k > 0), reverse=True))
    return SmithData(complex(cm.center), mults, d1, total, cm)


def local_smith_matrix(mfunc: Callable, lambda0, radius: float = 0.1) -> SmithData:
    """Partial multiplicities of a vectorized 2x2 analytic matrix function at ``lambda0``."""
    cm = matrix_jets(mfunc, lambda0, MAX_SMITH_ORDER + 2, radius)
    return smith_from_jets(cm, radius)


def local_smith(p, lambda0, radius: float = 0.1) -> SmithData:
    """Partial multiplicities of the angle pencil at an eigenvalue."""
    if isinstance(p, PeriodicPencil):
        raise CapabilityError("periodic pencil eigen-data comes from periodic_eigendata")
    return local_smith_matrix(lambda z: char_entries(p, z), lambda0, radius)


# ---------------------------------------------------------------------------
# Jordan chains

def _normalize(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def _solve_chain(blocks, length: int):
    """Chain ``c_0..c_{length-1}`` with ``sum_{j<=k} N_j c_{k-j} = 0``, ``N_0`` rank one."""
    n0 = blocks[0]
    u, s, vh = np.linalg.svd(n0)
    if s[0] == 0:
        raise ConditioningError("leading block vanishes")
    if s[1] > 1e-6 * s[0]:
        raise ConditioningError(
            f"leading block is not numerically rank one (sigma ratio {s[1] / s[0]:.2e})")
    c = [_normalize(vh[1].conj())]
    ref = max(np.linalg.norm(b) for b in blocks[:length])
    for k in range(1, length):
        rhs = -sum(blocks[j] @ c[k - j] for j in range(1, k + 1))
        x, *_ = np.linalg.lstsq(n0, rhs, rcond=1e-10)
        # remove the kernel component for a canonical choice
        x = x - np.vdot(c[0], x) * c[0]
        res = np.linalg.norm(n0 @ x - rhs)
        if res > CHAIN_TOL * max(ref, np.linalg.norm(rhs)):
            raise ConditioningError(
                f"chain equation of order {k} is inconsistent (residual {res:.2e})")
        c.append(x)
    return c


def coefficient_chains(cm: CharMatrix, smith: Optional[SmithData] = None):
    """Jordan chains of a 2x2 matrix function in coefficient space."""
    smith = smith or smith_from_jets(cm)
    d1, total = smith.min_entry_order, smith.det_order
    coeffs = cm.coeff_stack()
    if total == 2 * d1:
        return [[np.eye(2, dtype=complex)[i]] + [np.zeros(2, complex)] * (d1 - 1)
                for i in range(2)]
    length = total - 2 * d1
    blocks = [coeffs[j + d1] for j in range(length)]
    first = _solve_chain(blocks, length) + [np.zeros(2, complex)] * d1
    chains = [first]
    if d1 > 0:
        c0 = first[0]
        other = _normalize(np.array([-np.conj(c0[1]), np.conj(c0[0])]))
        chains.append([other] + [np.zeros(2, complex)] * (d1 - 1))
    return chains


def coefficient_chain_residual(cm: CharMatrix, chains) -> float:
    coeffs = cm.coeff_stack()
    ref = np.max(np.abs(coeffs))
    worst = 0.0
    for ch in chains:
        for k in range(len(ch)):
            r = sum(coeffs[j] @ ch[k - j] for j in range(k + 1))
            worst = max(worst, float(np.linalg.norm(r)) / ref)
    return worst


@dataclass(frozen=True)
class JordanChainSet:
    """Canonical system of Jordan chains at one eigenvalue.

    ``chains[z][k]`` is the ``k``-th profile of chain ``z``.  Chains are ordered by
    descending length.
    """

    lambda0: complex
    partial_mults: tuple
    chains: tuple
    kind: str = "angle"
    coefficients: Optional[tuple] = None
    residual: float = 0.0

    @property
    def J(self) -> int:
        return len(self.chains)

    @property
    def multiplicity(self) -> int:
        return sum(self.partial_mults)

    def profile(self, k: int, zeta: int = 0) -> ExpPoly:
        if not 0 <= zeta < self.J or not 0 <= k < self.partial_mults[zeta]:
            raise InputError(f"chain index (k={k}, zeta={zeta}) out of range")
        return self.chains[zeta][k]


def chain_profiles(p: AnglePencil, lambda0, coeff_chain) -> tuple:
    """Profiles ``phi^(k) = sum_{j+q=k} S_q c^(j)`` from coefficient vectors."""
    jets = [fundamental_derivative(lambda0, q, p.b1, p.b1, p.b2) for q in range(len(coeff_chain))]
    out = []
    for k in range(len(coeff_chain)):
        acc = ExpPoly.zero(p.b1, p.b2, p.b1)
        for j in range(k + 1):
            s1, s2 = jets[k - j]
            c = coeff_chain[j]
            acc = acc + complex(c[0]) * s1 + complex(c[1]) * s2
        out.append(acc)
    return tuple(out)


def _sample_norm(f: ExpPoly, n: int = 41) -> float:
    w = np.linspace(f.lo, f.hi, n)
    return float(np.max(np.abs(f(w))))


def profile_chain_residual(p, lambda0, chain, kind: str = "angle") -> float:
    """Max relative residual of the chain relations applied to profiles."""
    lambda0 = complex(lambda0)
    ref = max(_sample_norm(f) for f in chain) or 1.0
    worst = 0.0
    for k in range(len(chain)):
        interior = None
        rows = np.zeros(2, complex)
        for j in range(k + 1):
            if kind == "angle":
                it, rw = angle_operator_jet(p, chain[k - j], lambda0, j)
                rows = rows + rw
            else:
                it = periodic_operator_jet(chain[k - j], lambda0, j)
            interior = it if interior is None else interior + it
        val = _sample_norm(interior) + float(np.max(np.abs(rows)))
        worst = max(worst, val / (ref * max(1.0, abs(lambda0) ** 2)))
    return worst


def jordan_chains(p, lambda0, radius: float = 0.1) -> JordanChainSet:
    """Canonical system of Jordan chains at an eigenvalue of either pencil."""
    lambda0 = complex(lambda0)
    if isinstance(p, PeriodicPencil):
        chains = periodic_chains(lambda0)
        res = max(profile_chain_residual(p, lambda0, ch, "periodic") for ch in chains)
        return JordanChainSet(lambda0, tuple(len(c) for c in chains), chains,
                              "periodic", None, res)
    smith = local_smith(p, lambda0, radius)
    cm = smith.jets
    coeff = coefficient_chains(cm, smith)
    coeff.sort(key=lambda ch: -len(ch))
    res_c = coefficient_chain_residual(cm, coeff)
    profiles = tuple(chain_profiles(p, lambda0, ch) for ch in coeff)
    res_p = max(profile_chain_residual(p, lambda0, ch) for ch in profiles)
    res = max(res_c, res_p)
    if res > CHAIN_TOL:
        raise ConditioningError(f"chain relations fail at {lambda0} (residual {res:.2e})")
    return JordanChainSet(lambda0, tuple(len(c) for c in coeff), profiles, "angle",
                          tuple(tuple(c) for c in coeff), res)


def jordan_chains_matrix(mfunc: Callable, lambda0, radius: float = 0.1):
    """Coefficient-space Jordan chains and residual for a generic 2x2 matrix function."""
    smith = local_smith_matrix(mfunc, lambda0, radius)
    chains = coefficient_chains(smith.jets, smith)
    chains.sort(key=lambda ch: -len(ch))
    return smith, chains, coefficient_chain_residual(smith.jets, chains)


# ---------------------------------------------------------------------------
# strip multiplicity

@dataclass(frozen=True)
class KappaReport:
    """Eigenvalues of both pencils in a weight strip and the index jump."""

    strip: WeightStrip
    bounds: tuple
    angle_eigenvalues: tuple   # (lambda, multiplicity)
    periodic_eigenvalues: tuple
    kappa: int
    statement: str
    re_bound: float
    substrips: tuple = ()
    edge_eigenvalues: tuple = ()

    def to_dict(self) -> dict:
        return {
            "strip": {"a": self.strip.a, "a1": self.strip.a1, "l": self.strip.l,
                      "m": self.strip.m, "im_bounds": list(self.bounds)},
            "angle_eigenvalues": [{"lambda": [z.real, z.imag], "multiplicity": m}
                                  for z, m in self.angle_eigenvalues],
            "periodic_eigenvalues": [{"lambda": [z.real, z.imag], "multiplicity": m}
                                     for z, m in self.periodic_eigenvalues],
            "kappa": self.kappa,
            "statement": self.statement,
            "assumptions": [f"|Re lambda| <= {self.re_bound:g} for angle-pencil eigenvalues"],
            "substrips": [{"im_bounds": list(b), "kappa": k} for b, k in self.substrips],
            "edge_eigenvalues": [{"lambda": [z.real, z.imag], "multiplicity": m}
                                 for z, m in self.edge_eigenvalues],
        }


def _index_statement(strip: WeightStrip, kappa: int) -> str:
    base = f"ind L_{{{strip.a:g}}} = ind L_{{{strip.a1:g}}}"
    return base if kappa == 0 else f"{base} + {kappa}"


def _strip_kappa(p1, bounds, re_bound, on_edge="error", edge_hits=None):
    angle = find_eigenvalues(p1, bounds, re_bound, on_edge, edge_hits)
    periodic = [(e.lam, e.multiplicity) for e in periodic_eigendata(bounds, on_edge)]
    if edge_hits is not None and on_edge == "exclude":
        lo, hi = bounds
        for n in range(int(math.floor(lo)), int(math.ceil(hi)) + 1):
            if min(abs(n - lo), abs(n - hi)) < EDGE_TOL:
                edge_hits.append((complex(0, n), 2))
    return angle, periodic


def kappa_report(strip, p1: AnglePencil, re_bound: float = 10.0,
                 p2: Optional[PeriodicPencil] = None, split_weights=None,
                 on_edge: str = "error") -> KappaReport:
    """Strip multiplicity over both pencils and the rendered index relation.

    ``split_weights`` lists intermediate weights; each substrip is counted
    separately and the results are summed.  With ``on_edge="exclude"`` the count
    is taken over the open strip and eigenvalues on the boundary lines are listed
    in ``edge_eigenvalues``; the index relation then does not apply.
    """
    if not isinstance(strip, WeightStrip):
        strip = WeightStrip.from_bounds(*strip)
    bounds = strip.bounds
    hits: list = []
    angle, periodic = _strip_kappa(p1, bounds, re_bound, on_edge, hits)
    kappa = sum(m for _, m in angle) + sum(m for _, m in periodic)
    subs = []
    if split_weights:
        pieces = [strip.a1] + sorted(split_weights) + [strip.a]
        total = 0
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            sub = WeightStrip(hi, lo, strip.l, strip.m, relaxed=True)
            sa, sp = _strip_kappa(p1, sub.bounds, re_bound, on_edge)
            k = sum(m for _, m in sa) + sum(m for _, m in sp)
            subs.append((sub.bounds, k))
            total += k
        if total != kappa:
            raise ConditioningError(f"substrip counts sum to {total}, full strip gives {kappa}")
    statement = _index_statement(strip, kappa)
    if hits:
        statement += " (not applicable: eigenvalue on a strip boundary line)"
    return KappaReport(strip, bounds, tuple(angle), tuple(periodic), kappa,
                       statement, float(re_bound), tuple(subs), tuple(hits))
