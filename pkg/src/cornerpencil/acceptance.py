"""End-to-end acceptance checks shared by ``verify`` and the test suite.

Each check returns a :class:`CriterionResult`; none of them raise on a numeric
mismatch, so a failing criterion is reported rather than hidden.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .adjoint import cross_pairing, expected_pattern, normalize_pair, transmission_det
from .extract import (a12_trace, build_model, extract_c1_functional, extract_c2_functional,
                      extract_fit, manufactured_fields)
from .pencil import AnglePencil, Nonlocal, NonlocalRow, PeriodicPencil, char_det
from .sectorfd import mms_study
from .singular import Cutoff, build_f12, power_solution, residual, solve_u12
from .spectrum import (WeightStrip, find_eigenvalues, jordan_chains, kappa_report,
                       profile_chain_residual)
from .errors import ResonanceError


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float
    metrics: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.number}: {self.name} "
                f"({self.elapsed:.2f}s / {self.budget:g}s) {self.detail}")


def halfplane_pencil() -> AnglePencil:
    """Half-plane with the upper arm tied to the ray at angle pi/2."""
    return AnglePencil(0.0, math.pi, (
        NonlocalRow("lower"),
        NonlocalRow("upper", nonlocal_=Nonlocal(1.0, -math.pi / 2)),
    ))


def dirichlet_pencil() -> AnglePencil:
    return AnglePencil.dirichlet(0.0, 1.5 * math.pi)


def _timed(number: int, name: str, budget: float, body: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        ok, detail, metrics = body()
    except Exception as exc:  # report, do not mask
        ok, detail, metrics = False, f"raised {type(exc).__name__}: {exc}", {}
    el = time.perf_counter() - t0
    if el > budget:
        ok = False
        detail += "; over time budget"
    return CriterionResult(number, name, bool(ok), detail, el, budget, metrics)


def criterion_1() -> CriterionResult:
    def body():
        found = find_eigenvalues(dirichlet_pencil(), (0.1, 3.0))
        exact = [2j * k / 3 for k in range(1, 5)]
        errs = [abs(z - e) for (z, _), e in zip(found, exact)] if len(found) == 4 else []
        ok = len(found) == 4 and max(errs) < 1e-10 and all(m == 1 for _, m in found)
        return ok, f"found {len(found)} eigenvalues, max error {max(errs, default=float('nan')):.1e}", \
            {"max_error": max(errs, default=None)}
    return _timed(1, "local Dirichlet spectrum", 5, body)


def criterion_2() -> CriterionResult:
    def body():
        p = halfplane_pencil()
        found = find_eigenvalues(p, (1.0, 4.5))
        exact = [4j / 3, 2j, 8j / 3, 4j]
        if len(found) != 4:
            return False, f"found {len(found)} eigenvalues, expected 4", {}
        err = max(abs(z - e) for (z, _), e in zip(found, exact))
        res = max(profile_chain_residual(p, z, jordan_chains(p, z).chains[0]) for z, _ in found)
        ok = err < 1e-9 and res < 1e-8
        return ok, f"max error {err:.1e}, row residual {res:.1e}", {"max_error": err, "residual": res}
    return _timed(2, "nonlocal factorized spectrum", 5, body)


def criterion_3() -> CriterionResult:
    def body():
        P = PeriodicPencil()
        c0 = jordan_chains(P, 0)
        u0, u1 = power_solution(c0, 0), power_solution(c0, 1)
        w = np.linspace(0, 2 * math.pi, 7)
        r = np.array([0.1, 0.5, 2.0])
        W, R = np.meshgrid(w, r, indexing="ij")
        # normalized so the leading solution is the constant 1
        scale = 1.0 / u0(0.0, 1.0)
        shape_err = max(np.max(np.abs(scale * u0(W, R) - 1)),
                        np.max(np.abs(scale * u1(W, R) - 1j * np.log(R))))
        lap0 = max(float(np.max(np.abs(c(w))))
                   for u in (u0, u1) for c in u.laplacian_coefficients())
        ok = c0.partial_mults == (2,) and shape_err < 1e-14 and lap0 == 0
        res = 0.0
        for n in (1, 2, 3):
            for lam in (1j * n, -1j * n):
                ch = jordan_chains(P, lam)
                ok &= ch.partial_mults == (1, 1)
                res = max(res, max(profile_chain_residual(P, lam, c, "periodic") for c in ch.chains))
        ok &= res < 1e-10
        return ok, (f"lambda=0 partial multiplicities {c0.partial_mults}, "
                    f"interior residual {lap0:g}, chain residual {res:.1e}"), {"residual": res}
    return _timed(3, "periodic pencil chains", 1, body)


def criterion_4() -> CriterionResult:
    def body():
        p = halfplane_pencil()
        got = {}
        for strip in ((1.0, 1.9), (0.5, 1.5), (2.1, 2.5)):
            got[strip] = kappa_report(strip, p, on_edge="exclude").kappa
        split = kappa_report(WeightStrip.from_bounds(0.5, 2.5), p, on_edge="exclude",
                             split_weights=[1.7 - WeightStrip.from_bounds(0.5, 2.5).shift])
        additive = sum(k for _, k in split.substrips) == split.kappa
        expect = {(1.0, 1.9): 1, (0.5, 1.5): 2, (2.1, 2.5): 0}
        ok = all(got[s] == expect[s] for s in expect) and additive
        detail = ", ".join(f"{s}: {got[s]} (expected {expect[s]})" for s in expect)
        return ok, f"{detail}; additivity {'holds' if additive else 'fails'}", \
            {"kappa": {str(s): v for s, v in got.items()}}
    return _timed(4, "kappa over weight strips", 5, body)


def criterion_5() -> CriterionResult:
    def body():
        p = halfplane_pencil()
        P = PeriodicPencil()
        u2 = power_solution(jordan_chains(P, -1j))
        u12 = solve_u12(p, build_f12(u2, 1.0))
        rng = np.random.default_rng(5)
        w = rng.uniform(0, math.pi, 100)
        r = rng.uniform(0.05, 2.0, 100)
        err = float(np.max(np.abs(u12(w, r) + r * (np.cos(w) + np.sin(w)))))
        u2r = power_solution(jordan_chains(P, 2j))
        f = build_f12(u2r, 1.0)
        raised = False
        try:
            solve_u12(p, f)
        except ResonanceError:
            raised = True
        u12r = solve_u12(p, f, resonant=True)
        res = residual(p, u12r, np.geomspace(0.05, 2.0, 9), rhs=f)
        ok = err < 1e-10 and res < 1e-8 and raised
        return ok, f"closed-form error {err:.1e}, resonant residual {res:.1e}", \
            {"error": err, "resonant_residual": res}
    return _timed(5, "u12 closed form and resonant mode", 1, body)


def criterion_6() -> CriterionResult:
    def body():
        p = halfplane_pencil()
        rng = np.random.default_rng(6)
        pts = rng.uniform(-2, 2, 50) + 1j * rng.uniform(0.2, 4.4, 50)
        ratios = np.array([transmission_det(p, z) / np.conj(char_det(p, z)) for z in pts])
        ratio_spread = float(np.max(np.abs(ratios - ratios[0])) / abs(ratios[0]))
        zeros = [z for z, _ in find_eigenvalues(p, (1.0, 4.5))]
        # relative size of the transmission determinant at the pencil eigenvalues
        tz = max(abs(transmission_det(p, z)) / max(abs(transmission_det(p, z + 0.1)), 1e-300)
                 for z in zeros)
        c1 = jordan_chains(p, 4j / 3)
        a1 = normalize_pair(p, c1)
        norm1 = abs(a1.norm_matrix.ravel()[0] - 1)
        a2 = normalize_pair(p, jordan_chains(p, 2j))
        cross = abs(cross_pairing(p, 4j / 3, c1.chains[0][0], 2j, a2.chains[0][0]))
        P = PeriodicPencil()
        c0 = jordan_chains(P, 0)
        a0 = normalize_pair(P, c0)
        E = expected_pattern(c0)
        mask = ~np.isnan(E.real)
        pat = float(np.max(np.abs(a0.norm_matrix[mask] - E[mask])))
        ok = ratio_spread < 1e-8 and tz < 1e-8 and norm1 < 1e-10 and cross < 1e-8 and pat < 1e-8
        return ok, (f"det ratio spread {ratio_spread:.1e}, det at zeros {tz:.1e}, "
                    f"normalization {norm1:.1e}, cross {cross:.1e}, periodic pattern {pat:.1e}"), \
            {"ratio_spread": ratio_spread, "norm": norm1, "cross": cross, "pattern": pat}
    return _timed(6, "adjoint machinery", 10, body)


def criterion_7() -> CriterionResult:
    def body():
        model = build_model(halfplane_pencil(), 4j / 3, 1j)
        c1, c2 = 1 + 2j, -0.7
        g1, g2 = manufactured_fields(model, c1, c2)
        c2f = extract_c2_functional(g2, model)
        c1f = extract_c1_functional(g1, model, c2f)
        err_f = max(abs(c1f[0] - c1), abs(c2f[model.coupled] - c2),
                    float(np.max(np.abs(np.delete(c2f, model.coupled)))))
        fit1 = extract_fit(g1, [model.u1, model.u12[model.coupled]])
        fit2 = extract_fit(g2, list(model.u2))
        err_fit = max(abs(fit1.coefficients[0] - c1), abs(fit1.coefficients[1] - c2),
                      abs(fit2.coefficients[model.coupled] - c2))
        big1 = Cutoff(2 * model.eta1.r_in, 2 * model.eta1.r_out)
        big2 = Cutoff(2 * model.eta2.r_in, 2 * model.eta2.r_out)
        c2d = extract_c2_functional(g2, model, big2)
        c1d = extract_c1_functional(g1, model, c2d, big1)
        shift = max(float(np.max(np.abs(c2d - c2f))), abs(c1d[0] - c1f[0]))
        ok = err_f < 1e-4 and err_fit < 1e-6 and shift < 1e-4
        return ok, (f"functional error {err_f:.1e}, fit error {err_fit:.1e}, "
                    f"cutoff doubling change {shift:.1e}"), \
            {"functional_error": err_f, "fit_error": err_fit, "cutoff_shift": shift}
    return _timed(7, "coefficient round trip", 30, body)


def criterion_8() -> CriterionResult:
    def body():
        model = build_model(halfplane_pencil(), 4j / 3, 1j)
        tr = a12_trace(model, [0.2, 0.1, 0.05, 0.025])
        mags = np.abs(tr.values)
        mono = bool(np.all(np.diff(mags) < 0))
        expect = (model.lam1 - model.lam2).imag
        slope_err = abs(tr.slope - expect) / abs(expect)
        ok = mono and abs(tr.limit) < 1e-3 and slope_err < 0.05
        return ok, (f"monotone {mono}, limit {abs(tr.limit):.1e}, slope {tr.slope:.4f} "
                    f"(expected {expect:.4f})"), {"limit": abs(tr.limit), "slope": tr.slope}
    return _timed(8, "A12 limit", 30, body)


def criterion_9() -> CriterionResult:
    def body():
        p = halfplane_pencil()
        u1 = power_solution(jordan_chains(p, 4j / 3))

        def exact(w, r):
            return u1(w, r) + r ** 2 * np.cos(2 * w)

        rep = mms_study(p, exact)
        from .extract import SampledField
        s = rep.solutions[-1]
        g = s.grid
        field_ = SampledField.from_grid(g.omegas, g.rhos, s.values, closure=exact)
        c1 = extract_fit(field_, [u1]).coefficients[0]
        order = rep.observed_order
        ok = 1.7 <= order <= 2.3 and abs(c1 - 1) < 1e-2
        return ok, f"observed order {order:.3f}, extracted c1 error {abs(c1 - 1):.1e}", \
            {"orders": list(rep.orders), "errors": list(rep.errors), "c1_error": abs(c1 - 1)}
    return _timed(9, "finite-difference convergence", 60, body)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9)


def run_all() -> list:
    return [c() for c in CRITERIA]
