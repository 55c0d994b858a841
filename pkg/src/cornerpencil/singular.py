"""Power solutions, the coupled particular solution and composite singular functions.

A log-power function is ``r^(i lam + shift) * sum_q (i ln r)^q / q! * P_q(w)``.
Writing ``e_q = r^(i lam) (i ln r)^q / q!`` the Euler operator ``r d/dr`` acts as
``e_q -> i lam e_q + i e_(q-1)``, so the log-polar Laplacian of such a function has
coefficients ``P_q'' - lam^2 P_q - 2 lam P_(q+1) - P_(q+2)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import GeometryError, InputError, ResonanceError, ConditioningError
from .numeric import ExpPoly, PiecewiseExpPoly
from .pencil import AnglePencil, PeriodicPencil, char_matrix, fundamental_derivative
from .spectrum import JordanChainSet, local_smith

RESONANCE_TOL = 1e-8


def log_power_basis(lam, radii, degree: int, shift: float = 0.0) -> np.ndarray:
    """Array ``[q, ...] = r^(i lam + shift) (i ln r)^q / q!`` for ``q = 0..degree``."""
    r = np.asarray(radii, dtype=float)
    if np.any(r <= 0):
        raise InputError("radii must be positive")
    lr = np.log(r)
    base = np.exp((1j * complex(lam) + shift) * lr)
    return np.array([base * (1j * lr) ** q / math.factorial(q) for q in range(degree + 1)])


@dataclass(frozen=True)
class PowerSolution:
    """``r^(i lam + shift) sum_q (i ln r)^q / q! profiles[q](w)``.

    For a Jordan-chain member of log-degree ``k``, ``profiles[q]`` is ``phi^(k-q)``.
    """

    lam: complex
    profiles: tuple
    pole: str = "g1"
    shift: float = 0.0
    kind: str = "angle"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if not self.profiles:
            raise InputError("a power solution needs at least one profile")
        if self.pole not in ("g1", "g2"):
            raise InputError("pole must be 'g1' or 'g2'")

    @property
    def k(self) -> int:
        return len(self.profiles) - 1

    @property
    def lo(self) -> float:
        return self.profiles[0].lo

    @property
    def hi(self) -> float:
        return self.profiles[0].hi

    def _combine(self, profiles, omega, r):
        omega = np.asarray(omega, dtype=float)
        r = np.asarray(r, dtype=float)
        basis = log_power_basis(self.lam, r, self.k, self.shift)
        vals = np.array([np.asarray(p(omega), dtype=complex) for p in profiles])
        vals = vals.reshape(vals.shape + (1,) * 0)
        out = sum(basis[q] * vals[q] for q in range(self.k + 1))
        return out if np.ndim(out) else complex(out)

    def __call__(self, omega, r):
        """Value at broadcastable ``(omega, r)``."""
        return self._combine(self.profiles, omega, r)

    def d_omega(self, omega, r, order: int = 1):
        return self._combine([p.derivative(order) for p in self.profiles], omega, r)

    def r_dr(self, omega, r):
        """``r d/dr`` of the power solution."""
        d = self._euler_profiles()
        return PowerSolution(self.lam, d, self.pole, self.shift, self.kind)(omega, r)

    def _euler_profiles(self):
        # r d/dr e_q = (i lam + shift) e_q + i e_(q-1)
        a = 1j * self.lam + self.shift
        out = []
        for q in range(self.k + 1):
            term = a * self.profiles[q]
            if q + 1 <= self.k:
                term = term + 1j * self.profiles[q + 1]
            out.append(term)
        return tuple(out)

    def laplacian_coefficients(self) -> tuple:
        """Coefficients of ``e_q`` in ``((r d/dr)^2 + d_w^2) u`` (shift must be 0)."""
        if self.shift != 0:
            raise InputError("coefficient rewriting assumes a zero exponent shift")
        lam = self.lam
        out = []
        for q in range(self.k + 1):
            t = self.profiles[q].derivative(2) - lam ** 2 * self.profiles[q]
            if q + 1 <= self.k:
                t = t - 2 * lam * self.profiles[q + 1]
            if q + 2 <= self.k:
                t = t - self.profiles[q + 2]
            out.append(t)
        return tuple(out)

    def __mul__(self, s):
        s = complex(s)
        return PowerSolution(self.lam, tuple(s * p for p in self.profiles), self.pole,
                             self.shift, self.kind, dict(self.meta))

    __rmul__ = __mul__

    def to_csv(self, path, omegas: Sequence[float], radii: Sequence[float]) -> None:
        """Write samples ``omega, r, re, im`` on a tensor grid."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["omega", "r", "re", "im"])
            for r in radii:
                vals = self(np.asarray(omegas, float), r)
                for w, v in zip(omegas, np.atleast_1d(vals)):
                    wr.writerow([repr(float(w)), repr(float(r)), repr(v.real), repr(v.imag)])


def power_solution(chain: JordanChainSet, k: int = 0, zeta: int = 0,
                   pole: Optional[str] = None) -> PowerSolution:
    """Power solution built from the first ``k + 1`` members of chain ``zeta``."""
    if not 0 <= zeta < chain.J or not 0 <= k < chain.partial_mults[zeta]:
        raise InputError(f"chain index (k={k}, zeta={zeta}) out of range")
    profiles = tuple(chain.chains[zeta][k - q] for q in range(k + 1))
    if pole is None:
        pole = "g2" if chain.kind == "periodic" else "g1"
    return PowerSolution(chain.lambda0, profiles, pole, 0.0, chain.kind,
                         {"k": k, "zeta": zeta})


# ---------------------------------------------------------------------------
# residuals

def row_values(p: AnglePencil, u, r) -> np.ndarray:
    """Both boundary rows of the model angle problem applied to ``u`` at radii ``r``.

    Row ``i``: ``a0 u(x, r) + a1 du/dw(x, r) + e beta^(-m) (t0 u(c, beta r) + t1 du/dw(c, beta r))``.
    ``u`` must provide ``__call__(w, r)`` and ``d_omega(w, r)``.
    """
    r = np.asarray(r, dtype=float)
    out = []
    for row in p.rows:
        x = p.arm_angle(row)
        a0, a1 = row.local
        val = a0 * u(x, r)
        if a1 != 0:
            val = val + a1 * u.d_omega(x, r)
        nl = row.nonlocal_
        if nl is not None:
            c = x + nl.shift
            rs = nl.beta * r
            t0, t1 = nl.tau
            fac = nl.e * nl.beta ** (-nl.order)
            tv = t0 * u(c, rs)
            if t1 != 0:
                tv = tv + t1 * u.d_omega(c, rs)
            val = val + fac * tv
        out.append(val)
    return np.array(out)


def residual(p, u: PowerSolution, radii, rhs: Optional["SpecialRHS"] = None,
             n_omega: int = 41) -> float:
    """Max interior and row residual of a power solution, relative to ``max |u|``.

    With ``rhs`` given, rows are compared against ``-rhs`` (the data cancelled by
    the coupled particular solution).
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise InputError("radii must be positive")
    w = np.linspace(u.lo, u.hi, n_omega)
    W, R = np.meshgrid(w, radii, indexing="ij")
    scale = float(np.max(np.abs(u(W, R)))) or 1.0
    basis = log_power_basis(u.lam, radii, u.k)
    coeffs = u.laplacian_coefficients()
    interior = sum(np.outer(c(w), basis[q]) for q, c in enumerate(coeffs))
    worst = float(np.max(np.abs(interior)))
    if isinstance(p, AnglePencil):
        rows = row_values(p, u, radii)
        if rhs is not None:
            rows = rows + rhs.values(radii)
        worst = max(worst, float(np.max(np.abs(rows))))
    return worst / scale


# ---------------------------------------------------------------------------
# special right-hand side and the coupled particular solution

@dataclass(frozen=True)
class SpecialRHS:
    """Row data ``r^(i lam2 - m_row) sum_q coeffs[q] (i ln r)^q`` on one row.

    ``coeffs[q]`` is the plain coefficient of ``(i ln r)^q``.
    """

    lambda2: complex
    coeffs: tuple
    row: int = 0
    m_row: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lambda2", complex(self.lambda2))
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if self.row not in (0, 1):
            raise InputError("row index must be 0 (lower arm) or 1 (upper arm)")
        if self.m_row not in (0, 1):
            raise InputError("m_row must be 0 or 1")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def scaled(self, s) -> "SpecialRHS":
        return SpecialRHS(self.lambda2, tuple(complex(s) * c for c in self.coeffs),
                          self.row, self.m_row)

    def row_function(self, r):
        """Data on the coupled row, as the unscaled row functional sees it.

        Rows of order ``m_row`` are compared after multiplication by ``r^m_row``.
        """
        r = np.asarray(r, dtype=float)
        lr = np.log(r)
        base = np.exp(1j * self.lambda2 * lr)
        return sum(c * base * (1j * lr) ** q for q, c in enumerate(self.coeffs))

    def values(self, r) -> np.ndarray:
        """Row-data array of shape ``(2,) + r.shape``."""
        v = self.row_function(r)
        out = np.zeros((2,) + np.shape(v), dtype=complex)
        out[self.row] = v
        return out


def build_f12(u2: PowerSolution, e1, theta: float = 0.0, m_row: int = 0,
              row: int = 0) -> SpecialRHS:
    """Trace ``e1 * u2`` along the image ray ``w = theta`` as row data.

    For ``m_row = 1`` the angular derivative trace is used, giving exponent
    ``i lam2 - 1``.
    """
    e1 = complex(e1)
    theta = float(theta)
    profs = u2.profiles if m_row == 0 else tuple(p.derivative(1) for p in u2.profiles)
    coeffs = tuple(e1 * complex(profs[q](theta)) / math.factorial(q) for q in range(u2.k + 1))
    return SpecialRHS(u2.lam, coeffs, row, m_row)


def _block_system(jets: np.ndarray, K: int) -> np.ndarray:
    """Block lower-triangular Toeplitz matrix ``A[j, t] = M_(j - t)``."""
    A = np.zeros((2 * (K + 1), 2 * (K + 1)), dtype=complex)
    for j in range(K + 1):
        for t in range(j + 1):
            A[2 * j:2 * j + 2, 2 * t:2 * t + 2] = jets[j - t]
    return A


def solve_u12(p: AnglePencil, rhs: SpecialRHS, resonant: bool = False) -> PowerSolution:
    """Particular solution of the homogeneous angle problem with rows equal to ``-rhs``.

    In the resonant case the log-degree is raised by the largest partial
    multiplicity at ``lambda2`` and the minimal-norm solution is selected.
    """
    lam = rhs.lambda2
    k = rhs.degree
    m0 = char_matrix(p, lam, 0).coeff(0)
    sv = np.linalg.svd(m0, compute_uv=False)
    is_res = sv[-1] <= RESONANCE_TOL * sv[0]
    meta = {"resonant": bool(is_res), "selection": None}
    if rhs.is_zero:
        zero = ExpPoly.zero(p.b1, p.b2, p.b1)
        return PowerSolution(lam, (zero,), "g1", 0.0, "angle", meta)
    if is_res and not resonant:
        raise ResonanceError(
            f"lambda2 = {lam} is an eigenvalue of the angle pencil; "
            "request resonant mode to build the log-extended solution")
    K = k
    if is_res:
        smith = local_smith(p, lam)
        K = k + max(smith.partial_mults)
        meta["selection"] = "minimal-norm (zero eigen-component)"
        meta["extension"] = K - k
    jets = char_matrix(p, lam, K).coeff_stack()
    # G_j: coefficient of (i ln r)^(K-j)/(K-j)! in the row data of -rhs
    G = np.zeros((K + 1, 2), dtype=complex)
    for j in range(K + 1):
        q = K - j
        if q <= k:
            G[j, rhs.row] = -math.factorial(q) * rhs.coeffs[q]
    A = _block_system(jets, K)
    b = G.reshape(-1)
    if is_res:
        x, *_ = np.linalg.lstsq(A, b, rcond=1e-10)
    else:
        x = np.zeros_like(b)
        for j in range(K + 1):
            acc = b[2 * j:2 * j + 2].copy()
            for t in range(j):
                acc -= jets[j - t] @ x[2 * t:2 * t + 2]
            x[2 * j:2 * j + 2] = np.linalg.solve(jets[0], acc)
    res = np.linalg.norm(A @ x - b)
    if res > 1e-8 * max(1.0, np.linalg.norm(b)):
        raise ConditioningError(f"particular-solution system inconsistent (residual {res:.2e})")
    c = x.reshape(K + 1, 2)
    S = [fundamental_derivative(lam, q, p.b1, p.b1, p.b2) for q in range(K + 1)]
    phis = []
    for j in range(K + 1):
        acc = ExpPoly.zero(p.b1, p.b2, p.b1)
        for t in range(j + 1):
            s1, s2 = S[j - t]
            acc = acc + complex(c[t, 0]) * s1 + complex(c[t, 1]) * s2
        phis.append(acc)
    meta["coefficients"] = [list(map(complex, row)) for row in c]
    profiles = tuple(phis[K - q] for q in range(K + 1))
    return PowerSolution(lam, profiles, "g1", 0.0, "angle", meta)


# ---------------------------------------------------------------------------
# cutoffs and composites

def smoothstep(t):
    """Quintic ``6t^5 - 15t^4 + 10t^3`` clamped to ``[0, 1]`` (C2)."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


@dataclass(frozen=True)
class Cutoff:
    """Radial cutoff equal to 1 for ``r <= r_in`` and 0 for ``r >= r_out``.

    The transition is a quintic smoothstep in ``ln r``.
    """

    r_in: float
    r_out: float

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise GeometryError(f"cutoff radii need 0 < r_in < r_out, got {self.r_in}, {self.r_out}")

    @property
    def rho_in(self) -> float:
        return math.log(self.r_in)

    @property
    def rho_out(self) -> float:
        return math.log(self.r_out)

    def _t(self, rho):
        return (np.asarray(rho, dtype=float) - self.rho_in) / (self.rho_out - self.rho_in)

    def of_rho(self, rho, derivative: int = 0):
        """Value or ``rho``-derivative (order 0, 1, 2) at ``rho = ln r``."""
        t = self._t(rho)
        L = self.rho_out - self.rho_in
        inside = (t > 0) & (t < 1)
        tc = np.clip(t, 0.0, 1.0)
        if derivative == 0:
            return 1.0 - smoothstep(t)
        if derivative == 1:
            return np.where(inside, -30 * tc ** 2 * (1 - tc) ** 2 / L, 0.0)
        if derivative == 2:
            return np.where(inside, -60 * tc * (1 - tc) * (1 - 2 * tc) / L ** 2, 0.0)
        raise InputError("cutoff derivatives only up to order 2")

    def __call__(self, r):
        return self.of_rho(np.log(np.asarray(r, dtype=float)))

    def scaled(self, eps: float) -> "Cutoff":
        return Cutoff(self.r_in * eps, self.r_out * eps)


@dataclass(frozen=True)
class CompositeSingular:
    """``U1 = eta1 u1`` near ``g1`` and ``U2 = eta2 u2 + eta1 u12``.

    ``g2`` sits at distance ``pole_distance`` from ``g1``; the coupled row maps the
    lower arm at radius ``r`` onto the ray ``w = theta`` at ``g2`` with the same radius.
    """

    pencil: AnglePencil
    u1: PowerSolution
    u2: PowerSolution
    u12: PowerSolution
    eta1: Cutoff
    eta2: Cutoff
    e1: complex
    theta: float = 0.0
    row: int = 0
    pole_distance: float = 1.0

    def near_g1(self, omega, r, c1=1.0, c2=1.0):
        """``c1 U1 + c2 U2`` in polar coordinates at ``g1``."""
        return self.eta1(r) * (c1 * self.u1(omega, r) + c2 * self.u12(omega, r))

    def near_g2(self, omega, r, c1=1.0, c2=1.0):
        return self.eta2(r) * c2 * self.u2(omega, r)

    def coupled_trace(self, r, c2=1.0):
        """``e1 * U(Omega1 y)`` on the coupled arm: the ``g2`` trace at radius ``r``."""
        return self.e1 * self.near_g2(self.theta, r, 0.0, c2)

    def rows(self, r, c1=1.0, c2=1.0) -> np.ndarray:
        """Rows of the full problem applied to the composite, near ``g1``."""
        r = np.asarray(r, dtype=float)

        class _Field:
            def __call__(_, w, rr):
                return self.near_g1(w, rr, c1, c2)

        out = row_values(self.pencil, _Field(), r)
        out[self.row] = out[self.row] + self.coupled_trace(r, c2)
        return out


def composite(pencil: AnglePencil, u1: PowerSolution, u2: PowerSolution,
              u12: PowerSolution, eta1: Cutoff, eta2: Cutoff, e1,
              theta: float = 0.0, row: int = 0, pole_distance: float = 1.0) -> CompositeSingular:
    """Assemble the composite singular functions after checking cutoff geometry."""
    if eta1.r_out + eta2.r_out > pole_distance:
        raise GeometryError(
            f"cutoff supports overlap: {eta1.r_out} + {eta2.r_out} > pole distance {pole_distance}")
    if any(r.nonlocal_ is not None and r.nonlocal_.order != 0 for r in pencil.rows):
        raise InputError("composites support order-0 nonlocal rows only")
    return CompositeSingular(pencil, u1, u2, u12, eta1, eta2, complex(e1), float(theta),
                             int(row), float(pole_distance))


def remainder_decay(comp: CompositeSingular, radii, c1=1.0, c2=1.0) -> dict:
    """Sampled rows of the full problem near ``g1`` and their decay.

    Where both cutoffs equal one the rows vanish identically, so the fitted decay
    exponent is reported as infinite when the sampled rows are at roundoff level.
    """
    radii = np.asarray(radii, dtype=float)
    vals = np.abs(comp.rows(radii, c1, c2)).max(axis=0)
    ref = max(1.0, float(np.max(np.abs(comp.near_g1(comp.pencil.b1 + 0.5 * comp.pencil.opening,
                                                    radii, c1, c2)))))
    if np.all(vals <= 1e-12 * ref):
        return {"max_row": float(vals.max()), "exponent": math.inf}
    mask = vals > 0
    slope = float(np.polyfit(np.log(radii[mask]), np.log(vals[mask]), 1)[0])
    return {"max_row": float(vals.max()), "exponent": slope}
