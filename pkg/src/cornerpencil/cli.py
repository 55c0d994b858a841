"""Command line front end: config loading, dispatch and report files.

Exit codes: 0 success, 1 input error, 2 failed verification, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np

from .errors import ConfigError, InputError, PencilError

ANGLE_RE = re.compile(
    r"^\s*([+-]?)\s*(\d+(?:\.\d*)?|\.\d+)?\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")

BUNDLED = ("local_dirichlet.json", "halfplane_nonlocal.json")


# ---------------------------------------------------------------------------
# parsing helpers

def parse_angle(value, where: str) -> float:
    """Number or a string such as ``"pi/2"``, ``"-3*pi/2"``, ``"0.5pi"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected an angle, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = ANGLE_RE.match(value)
        if m:
            sign = -1.0 if m.group(1) == "-" else 1.0
            num = float(m.group(2)) if m.group(2) else 1.0
            den = float(m.group(3)) if m.group(3) else 1.0
            if den == 0:
                raise ConfigError(f"{where}: division by zero in angle {value!r}")
            return sign * num * math.pi / den
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{where}: cannot read angle {value!r} (use a number or e.g. \"pi/2\")")


def parse_complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and \
            all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or an [re, im] pair, got {value!r}")


def parse_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a real number, got {value!r}")
    return float(value)


def parse_pair(text: str, where: str, conv=float) -> tuple:
    try:
        return tuple(conv(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"{where}: cannot parse {text!r}") from exc


def _keys(d, allowed, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")
    return d


def cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ProblemConfig:
    b1: float
    b2: float
    rows: list
    lambda1: Optional[complex] = None
    lambda2: Optional[complex] = None
    e1: complex = 1.0
    theta: float = 0.0
    m_row: int = 0
    row: int = 0
    coupled: int = 0
    a: Optional[float] = None
    a1: Optional[float] = None
    l: int = 0
    m: int = 1
    split: tuple = ()
    im_range: Optional[tuple] = None
    re_bound: float = 10.0
    on_edge: str = "error"
    epsilons: tuple = (0.2, 0.1, 0.05, 0.025)
    grid: tuple = (32, 32)
    ladder: int = 3
    r_range: tuple = (0.05, 1.0)
    alignment: str = "interpolate"
    c1: complex = 1.0
    c2: complex = 0.0
    resonant: bool = False
    out_dir: str = "out"
    name: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def pencil(self):
        from .pencil import AnglePencil, Nonlocal, NonlocalRow
        rows = []
        for i, r in enumerate(self.rows):
            nl = None
            if r.get("nonlocal") is not None:
                n = r["nonlocal"]
                nl = Nonlocal(n["e"], n["shift"], n["beta"], n["order"], n["tau"])
            rows.append(NonlocalRow(r["endpoint"], r["local"], nl))
        try:
            return AnglePencil(self.b1, self.b2, tuple(rows))
        except InputError as exc:
            raise ConfigError(f"rows: {exc}") from exc

    def strip(self):
        from .spectrum import WeightStrip
        if self.a is not None and self.a1 is not None:
            return WeightStrip(self.a, self.a1, self.l, self.m, relaxed=True)
        if self.im_range is not None:
            return WeightStrip.from_bounds(*self.im_range, self.l, self.m)
        raise ConfigError("weights: need (a, a1) or search.im_range")


def _parse_row(r, where: str) -> dict:
    _keys(r, ("endpoint", "local", "nonlocal"), where)
    if r.get("endpoint") not in ("lower", "upper"):
        raise ConfigError(f"{where}.endpoint: must be 'lower' or 'upper'")
    local = r.get("local", [1, 0])
    if not isinstance(local, list) or len(local) != 2:
        raise ConfigError(f"{where}.local: expected two coefficients [a0, a1]")
    out = {"endpoint": r["endpoint"],
           "local": tuple(parse_complex(v, f"{where}.local") for v in local)}
    nl = r.get("nonlocal")
    if nl is not None:
        _keys(nl, ("e", "shift", "beta", "order", "tau"), f"{where}.nonlocal")
        if "e" not in nl or "shift" not in nl:
            raise ConfigError(f"{where}.nonlocal: 'e' and 'shift' are required")
        beta = parse_float(nl.get("beta", 1.0), f"{where}.nonlocal.beta")
        if not beta > 0:
            raise ConfigError(f"{where}.nonlocal.beta: must be positive")
        order = nl.get("order", 0)
        if order not in (0, 1):
            raise ConfigError(f"{where}.nonlocal.order: must be 0 or 1")
        tau = nl.get("tau", [1, 0])
        if not isinstance(tau, list) or len(tau) != 2:
            raise ConfigError(f"{where}.nonlocal.tau: expected two coefficients")
        out["nonlocal"] = {
            "e": parse_complex(nl["e"], f"{where}.nonlocal.e"),
            "shift": parse_angle(nl["shift"], f"{where}.nonlocal.shift"),
            "beta": beta, "order": int(order),
            "tau": tuple(parse_complex(v, f"{where}.nonlocal.tau") for v in tau),
        }
    return out


def config_from_dict(d: dict) -> ProblemConfig:
    _keys(d, ("name", "angle", "rows", "coupling", "weights", "search", "solver",
              "extract", "output"), "config")
    if "angle" not in d or "rows" not in d:
        raise ConfigError("config: 'angle' and 'rows' are required")
    ang = _keys(d["angle"], ("b1", "b2"), "angle")
    b1 = parse_angle(ang.get("b1", 0.0), "angle.b1")
    b2 = parse_angle(ang.get("b2"), "angle.b2")
    if not b1 < b2:
        raise ConfigError(f"angle: need b1 < b2, got b1={b1:g}, b2={b2:g}")
    if not isinstance(d["rows"], list) or len(d["rows"]) != 2:
        raise ConfigError("rows: expected exactly two boundary rows")
    rows = [_parse_row(r, f"rows[{i}]") for i, r in enumerate(d["rows"])]
    cfg = ProblemConfig(b1, b2, rows, name=str(d.get("name", "")), raw=d)

    cp = _keys(d.get("coupling", {}), ("lambda1", "lambda2", "e1", "theta", "m_row", "row",
                                       "coupled"), "coupling")
    if "lambda1" in cp:
        cfg.lambda1 = parse_complex(cp["lambda1"], "coupling.lambda1")
    if "lambda2" in cp:
        cfg.lambda2 = parse_complex(cp["lambda2"], "coupling.lambda2")
    cfg.e1 = parse_complex(cp.get("e1", 1.0), "coupling.e1")
    cfg.theta = parse_angle(cp.get("theta", 0.0), "coupling.theta")
    for key in ("m_row", "row", "coupled"):
        v = cp.get(key, 0)
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ConfigError(f"coupling.{key}: expected a non-negative integer")
        setattr(cfg, key, v)
    if cfg.row not in (0, 1):
        raise ConfigError("coupling.row: must be 0 or 1")

    w = _keys(d.get("weights", {}), ("a", "a1", "l", "m", "split"), "weights")
    if "a" in w or "a1" in w:
        cfg.a = parse_float(w.get("a"), "weights.a")
        cfg.a1 = parse_float(w.get("a1"), "weights.a1")
        if not cfg.a > cfg.a1:
            raise ConfigError("weights: need a > a1")
    cfg.l = int(w.get("l", 0))
    cfg.m = int(w.get("m", 1))
    if cfg.l < 0 or cfg.m < 1:
        raise ConfigError("weights: need l >= 0 and m >= 1")
    cfg.split = tuple(parse_float(x, "weights.split") for x in w.get("split", []))

    s = _keys(d.get("search", {}), ("re_bound", "im_range", "epsilons", "on_edge"), "search")
    cfg.re_bound = parse_float(s.get("re_bound", 10.0), "search.re_bound")
    if not cfg.re_bound > 0:
        raise ConfigError("search.re_bound: must be positive")
    if "im_range" in s:
        ir = s["im_range"]
        if not isinstance(ir, list) or len(ir) != 2:
            raise ConfigError("search.im_range: expected [lo, hi]")
        cfg.im_range = (parse_float(ir[0], "search.im_range"), parse_float(ir[1], "search.im_range"))
        if not cfg.im_range[0] < cfg.im_range[1]:
            raise ConfigError("search.im_range: need lo < hi")
    if "epsilons" in s:
        cfg.epsilons = tuple(parse_float(e, "search.epsilons") for e in s["epsilons"])
    cfg.on_edge = s.get("on_edge", "error")
    if cfg.on_edge not in ("error", "exclude"):
        raise ConfigError("search.on_edge: must be 'error' or 'exclude'")

    sv = _keys(d.get("solver", {}), ("grid", "ladder", "r_range", "alignment"), "solver")
    if "grid" in sv:
        g = sv["grid"]
        if not isinstance(g, list) or len(g) != 2 or not all(isinstance(x, int) and x >= 4 for x in g):
            raise ConfigError("solver.grid: expected [n_rho, n_omega] with entries >= 4")
        cfg.grid = tuple(g)
    cfg.ladder = int(sv.get("ladder", 3))
    if cfg.ladder < 2:
        raise ConfigError("solver.ladder: need at least 2 levels")
    if "r_range" in sv:
        rr = sv["r_range"]
        cfg.r_range = (parse_float(rr[0], "solver.r_range"), parse_float(rr[1], "solver.r_range"))
        if not 0 < cfg.r_range[0] < cfg.r_range[1]:
            raise ConfigError("solver.r_range: need 0 < r_min < r_max")
    cfg.alignment = sv.get("alignment", "interpolate")
    if cfg.alignment not in ("interpolate", "aligned"):
        raise ConfigError("solver.alignment: must be 'interpolate' or 'aligned'")

    ex = _keys(d.get("extract", {}), ("c1", "c2", "resonant"), "extract")
    cfg.c1 = parse_complex(ex.get("c1", 1.0), "extract.c1")
    cfg.c2 = parse_complex(ex.get("c2", 0.0), "extract.c2")
    cfg.resonant = bool(ex.get("resonant", False))

    out = _keys(d.get("output", {}), ("dir",), "output")
    cfg.out_dir = str(out.get("dir", "out"))
    cfg.pencil()  # re-check pencil invariants on load
    return cfg


def load_config(path: str) -> ProblemConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(d)


def bundled_config_path(name: str) -> str:
    return str(resources.files("cornerpencil") / "configs" / name)


# ---------------------------------------------------------------------------
# commands

def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _require(value, what: str):
    if value is None:
        raise ConfigError(f"coupling.{what}: required by this command")
    return value


def _im_bounds(cfg: ProblemConfig):
    return cfg.strip().bounds


def cmd_spectrum(cfg, out):
    from .spectrum import find_eigenvalues, local_smith
    p = cfg.pencil()
    found = find_eigenvalues(p, _im_bounds(cfg), cfg.re_bound, cfg.on_edge)
    path = os.path.join(out, "spectrum.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "alg_mult", "partial_mults"])
        for z, mlt in found:
            pm = local_smith(p, z).partial_mults
            w.writerow([repr(z.real), repr(z.imag), mlt, ";".join(str(k) for k in pm)])
    return path


def cmd_chains(cfg, out):
    from .spectrum import find_eigenvalues, jordan_chains, profile_chain_residual
    p = cfg.pencil()
    lams = [cfg.lambda1] if cfg.lambda1 is not None else \
        [z for z, _ in find_eigenvalues(p, _im_bounds(cfg), cfg.re_bound, cfg.on_edge)]
    omegas = np.linspace(p.b1, p.b2, 9)
    report = []
    for lam in lams:
        ch = jordan_chains(p, lam)
        report.append({
            "lambda": cplx(ch.lambda0),
            "partial_mults": list(ch.partial_mults),
            "residual": ch.residual,
            "coefficients": [[[cplx(c) for c in np.atleast_1d(vec)] for vec in chain]
                             for chain in ch.coefficients],
            "samples": {"omega": omegas.tolist(),
                        "profiles": [[[cplx(v) for v in prof(omegas)] for prof in chain]
                                     for chain in ch.chains]},
            "profile_residual": max(profile_chain_residual(p, lam, c) for c in ch.chains),
        })
    path = os.path.join(out, "chains.json")
    _write_json(path, {"chains": report})
    return path


def cmd_power(cfg, out):
    from .spectrum import jordan_chains
    from .singular import power_solution
    p = cfg.pencil()
    lam = _require(cfg.lambda1, "lambda1")
    u = power_solution(jordan_chains(p, lam))
    path = os.path.join(out, "power.csv")
    u.to_csv(path, np.linspace(p.b1, p.b2, 25), np.geomspace(*cfg.r_range, 9))
    return path


def cmd_adjoint(cfg, out):
    from .adjoint import adjoint_power, annihilation_check, normalize_pair
    from .spectrum import jordan_chains
    p = cfg.pencil()
    lam = _require(cfg.lambda1, "lambda1")
    ch = jordan_chains(p, lam)
    acs = normalize_pair(p, ch)
    aps = adjoint_power(acs)
    t = acs.chains[0][0]
    omegas = np.linspace(p.b1, p.b2, 9)
    report = {
        "lambda": cplx(lam),
        "adjoint_lambda": cplx(acs.lambda_bar),
        "normalization": [cplx(v) for v in acs.norm_matrix.ravel()],
        "reduced_pairing": [cplx(v) for v in acs.reduced],
        "chi": [cplx(v) for v in np.atleast_1d(t.chi)],
        "psi_samples": {"omega": omegas.tolist(), "values": [cplx(v) for v in t.psi(omegas)]},
        "annihilation_residual": annihilation_check(p, aps),
    }
    path = os.path.join(out, "adjoint.json")
    _write_json(path, report)
    return path


def cmd_u12(cfg, out):
    from .pencil import PeriodicPencil
    from .singular import build_f12, power_solution, residual, solve_u12
    from .spectrum import jordan_chains
    p = cfg.pencil()
    lam2 = _require(cfg.lambda2, "lambda2")
    ch = jordan_chains(PeriodicPencil(), lam2)
    z = min(cfg.coupled, ch.J - 1)
    u2 = power_solution(ch, 0, z)
    f = build_f12(u2, cfg.e1, cfg.theta, cfg.m_row, cfg.row)
    u12 = solve_u12(p, f, cfg.resonant)
    radii = np.geomspace(*cfg.r_range, 9)
    report = {
        "lambda2": cplx(lam2),
        "resonant": bool(u12.meta.get("resonant", False)),
        "log_degree": u12.k,
        "residual": residual(p, u12, radii, rhs=f),
        "meta": {k: v for k, v in u12.meta.items() if isinstance(v, (bool, int, float, str))},
    }
    path = os.path.join(out, "u12.json")
    _write_json(path, report)
    u12.to_csv(os.path.join(out, "u12.csv"), np.linspace(p.b1, p.b2, 25), radii)
    return path


def cmd_kappa(cfg, out):
    from .spectrum import kappa_report
    p = cfg.pencil()
    strip = cfg.strip()
    split = list(cfg.split) or None
    rep = kappa_report(strip, p, cfg.re_bound, split_weights=split, on_edge=cfg.on_edge)
    path = os.path.join(out, "kappa.json")
    _write_json(path, rep.to_dict())
    return path


def _model(cfg):
    from .extract import build_model
    p = cfg.pencil()
    return build_model(p, _require(cfg.lambda1, "lambda1"), _require(cfg.lambda2, "lambda2"),
                       cfg.e1, cfg.theta, cfg.row, coupled=cfg.coupled, resonant=cfg.resonant)


def cmd_extract(cfg, out):
    from .extract import extract_both, manufactured_fields
    model = _model(cfg)
    g1, g2 = manufactured_fields(model, cfg.c1, cfg.c2)
    rep = extract_both(model, g1, g2)
    d = rep.to_dict()
    d["manufactured"] = {"c1": cplx(cfg.c1), "c2": cplx(cfg.c2)}
    path = os.path.join(out, "extract.json")
    _write_json(path, d)
    return path


def cmd_a12(cfg, out):
    from .extract import a12_trace
    tr = a12_trace(_model(cfg), cfg.epsilons)
    path = os.path.join(out, "a12.json")
    _write_json(path, tr.to_dict())
    return path


def cmd_solve_fd(cfg, out):
    from .sectorfd import mms_study
    from .singular import power_solution
    from .spectrum import jordan_chains
    p = cfg.pencil()
    u1 = power_solution(jordan_chains(p, _require(cfg.lambda1, "lambda1")))

    def exact(w, r):
        return u1(w, r) + r ** 2 * np.cos(2 * w)

    n_rho, n_omega = cfg.grid
    if cfg.alignment == "aligned":
        for row in p.rows:
            c = p.target_angle(row)
            if c is not None:
                t = (c - p.b1) / (p.b2 - p.b1) * n_omega
                if abs(t - round(t)) > 1e-9:
                    raise ConfigError("solver.alignment: nonlocal target ray is not a grid line")
    sizes = [n_rho * 2 ** k for k in range(cfg.ladder)]
    rep = mms_study(p, exact, sizes=sizes, r_range=cfg.r_range, omega_ratio=n_omega / n_rho)
    path = os.path.join(out, "convergence.csv")
    rep.to_csv(path)
    _write_json(os.path.join(out, "convergence.json"), rep.to_dict())
    return path


def cmd_verify(cfg, out):
    from .acceptance import run_all
    for name in BUNDLED:
        load_config(bundled_config_path(name))
    results = run_all()
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    path = os.path.join(out, "verify.json")
    _write_json(path, {"results": [{"criterion": r.number, "name": r.name, "passed": r.passed,
                                    "detail": r.detail, "elapsed": r.elapsed}
                                   for r in results],
                       "passed": passed, "total": len(results)})
    return path if passed == len(results) else None


COMMANDS = {
    "spectrum": cmd_spectrum, "chains": cmd_chains, "power": cmd_power,
    "adjoint": cmd_adjoint, "u12": cmd_u12, "kappa": cmd_kappa, "extract": cmd_extract,
    "a12": cmd_a12, "solve-fd": cmd_solve_fd, "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cornerpencil",
                                 description="Corner singularities of nonlocal elliptic problems.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON problem file (default: bundled halfplane_nonlocal.json)")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--strip", help="weights a1,a")
    ap.add_argument("--im-range", help="strip bounds lo,hi on Im lambda")
    ap.add_argument("--re-bound", type=float, help="search bound on |Re lambda|")
    ap.add_argument("--grid", help="base grid n_rho,n_omega")
    ap.add_argument("--epsilons", help="cutoff scales e1,e2,...")
    ap.add_argument("--resonant", action="store_true", help="allow resonant coupling")
    return ap


def apply_overrides(cfg: ProblemConfig, args) -> ProblemConfig:
    if args.strip:
        a1, a = parse_pair(args.strip, "--strip")
        if not a > a1:
            raise InputError("--strip: need a1 < a")
        cfg.a, cfg.a1 = a, a1
    if args.im_range:
        lo, hi = parse_pair(args.im_range, "--im-range")
        if not lo < hi:
            raise InputError("--im-range: need lo < hi")
        cfg.im_range, cfg.a, cfg.a1 = (lo, hi), None, None
    if args.re_bound is not None:
        if not args.re_bound > 0:
            raise InputError("--re-bound: must be positive")
        cfg.re_bound = args.re_bound
    if args.grid:
        g = parse_pair(args.grid, "--grid", int)
        if len(g) != 2 or min(g) < 4:
            raise InputError("--grid: expected n_rho,n_omega with entries >= 4")
        cfg.grid = g
    if args.epsilons:
        cfg.epsilons = parse_pair(args.epsilons, "--epsilons")
    if args.resonant:
        cfg.resonant = True
    if args.out:
        cfg.out_dir = args.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        path = args.config or bundled_config_path("halfplane_nonlocal.json")
        cfg = apply_overrides(load_config(path), args)
        os.makedirs(cfg.out_dir, exist_ok=True)
        result = COMMANDS[args.command](cfg, cfg.out_dir)
    except PencilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if result is None:
        return 2
    print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
