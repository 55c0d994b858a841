import copy
import csv
import json
import math

import pytest

from cornerpencil.cli import (bundled_config_path, config_from_dict, load_config, main,
                              parse_angle, parse_complex)
from cornerpencil.errors import ConfigError


def _halfplane():
    with open(bundled_config_path("halfplane_nonlocal.json")) as fh:
        return json.load(fh)


@pytest.mark.parametrize("text,value", [("pi/2", math.pi / 2), ("-pi/2", -math.pi / 2),
                                        ("3*pi/2", 1.5 * math.pi), ("0.5pi", math.pi / 2),
                                        ("pi", math.pi), (1.25, 1.25), ("0.3", 0.3)])
def test_parse_angle(text, value):
    assert parse_angle(text, "x") == pytest.approx(value, abs=1e-15)


def test_parse_angle_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_angle("tau/2", "x")


def test_parse_complex():
    assert parse_complex([1, 2], "x") == 1 + 2j
    assert parse_complex(-0.7, "x") == -0.7
    with pytest.raises(ConfigError):
        parse_complex([1, 2, 3], "x")


def test_example_config_loads():
    cfg = load_config(bundled_config_path("halfplane_nonlocal.json"))
    p = cfg.pencil()
    assert cfg.b1 == 0 and cfg.b2 == pytest.approx(math.pi)
    nl = p.rows[1].nonlocal_
    assert nl.shift == pytest.approx(-math.pi / 2) and nl.beta == 1 and nl.e == 1
    assert load_config(bundled_config_path("local_dirichlet.json")).pencil().is_local


def test_unknown_key_rejected():
    d = _halfplane()
    d["rows"][1]["nonlocal"]["gamma"] = 1
    with pytest.raises(ConfigError, match="gamma"):
        config_from_dict(d)
    d = _halfplane()
    d["extra"] = 1
    with pytest.raises(ConfigError, match="extra"):
        config_from_dict(d)


def test_bad_angle_order_rejected():
    d = _halfplane()
    d["angle"] = {"b1": "pi", "b2": "pi/2"}
    with pytest.raises(ConfigError, match="b1 < b2"):
        config_from_dict(d)


def test_shift_outside_angle_rejected():
    d = _halfplane()
    d["rows"][1]["nonlocal"]["shift"] = "-3*pi/2"
    with pytest.raises(ConfigError, match="outside the open angle"):
        config_from_dict(d)


def test_missing_file_exit_code(tmp_path):
    assert main(["spectrum", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1


def test_kappa_command(tmp_path):
    assert main(["kappa", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "kappa.json").read_text())
    assert rep["kappa"] == 1
    assert rep["statement"].startswith("ind L_{2.9} = ind L_{2} + 1")


def test_kappa_strip_flag(tmp_path):
    # weights a1 = 3.1, a = 3.5 give Im bounds (2.1, 2.5)
    assert main(["kappa", "--strip", "3.1,3.5", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "kappa.json").read_text())["kappa"] == 0


def test_spectrum_command_dirichlet(tmp_path):
    assert main(["spectrum", "--config", bundled_config_path("local_dirichlet.json"),
                 "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "spectrum.csv")))
    ims = [float(r["im"]) for r in rows]
    assert ims == pytest.approx([2 / 3, 4 / 3, 2.0, 8 / 3], abs=1e-10)
    assert all(r["partial_mults"] == "1" for r in rows)


def test_edge_eigenvalue_exit_code(tmp_path):
    cfg = _halfplane()
    cfg["search"]["on_edge"] = "error"
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["kappa", "--config", str(path), "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("cmd,out", [("chains", "chains.json"), ("adjoint", "adjoint.json"),
                                     ("u12", "u12.json"), ("extract", "extract.json"),
                                     ("a12", "a12.json"), ("kappa", "kappa.json")])
def test_reports_are_deterministic_and_reparse(cmd, out, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([cmd, "--out", str(a)]) == 0
    assert main([cmd, "--out", str(b)]) == 0
    ta, tb = (a / out).read_bytes(), (b / out).read_bytes()
    assert ta == tb
    json.loads(ta)


def test_solve_fd_command(tmp_path):
    assert main(["solve-fd", "--grid", "16,16", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "convergence.csv")))
    assert [int(r["n"]) for r in rows] == [16, 32, 64]
    assert 1.7 < float(rows[-1]["order"]) < 2.3


def test_power_command(tmp_path):
    assert main(["power", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "power.csv").read_text().startswith("omega,r,re,im")
