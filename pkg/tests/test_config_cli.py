import json
import math

import numpy as np
import pytest

from gibbsforge.cli import EXIT_CONFIG, EXIT_HYPOTHESES, EXIT_OK, main
from gibbsforge.config import parse_config
from gibbsforge.errors import ConfigParseError
from gibbsforge.io import csv_body, json_safe, read_csv

DOUBLING_CFG = """\
[map]
name = doubling

[potential]
name = zero

[experiment]
kind = {kind}
grid_n = {grid_n}
gamma = 0.5
seed = 0
{extra}
"""

PITCHFORK_CFG = """\
[map]
name = pitchfork_doubling
params = 0.8, 0.05

[experiment]
kind = {kind}
grid_n = {grid_n}
gamma = 0.5
seed = 3
{extra}
"""


def _write(tmp_path, template, kind, grid_n=256, extra="", name="cfg.ini"):
    path = tmp_path / name
    path.write_text(template.format(kind=kind, grid_n=grid_n, extra=extra))
    return path


def _run(tmp_path, cfg, out="out", *flags):
    return main([str(cfg), "--output-dir", str(tmp_path / out), *flags])


def _json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_parse_minimal_and_auto():
    cfg = parse_config("[map]\nname = pitchfork_doubling\nparams = 0.8, 0.05\n"
                       "[experiment]\nkind = gibbs\nsigma = auto\nc = auto\ndelta = 0.1\n")
    assert cfg.map_params == (0.8, 0.05)
    assert cfg.potential_name == "zero" and cfg.potential_params == ()
    assert cfg.sigma is None and cfg.c is None and cfg.delta == 0.1
    assert cfg.grid_n == 1024 and cfg.noise == "nu" and cfg.scheme == "cell"


@pytest.mark.parametrize("text,line,field", [
    ("[map]\nname = doubling\n[experiment]\nkind = gibbs\ngrid_n = many\n", 5, "experiment.grid_n"),
    ("[map]\nname = doubling\nparams = 0.8, x\n[experiment]\n", 3, "map.params"),
    ("[map]\nname = doubling\n[experiment]\nkind = plot\n", 4, "experiment.kind"),
    ("[map]\nname = doubling\n[experiment]\n\ngamma = 1.5\n", 5, "experiment.gamma"),
    ("[map]\nname = doubling\n[experiment]\nkind = stoch-sweep\n", 4, "experiment.sweep"),
    ("[map]\nname = doubling\n[experiment]\nnoise = gaussian\n", 4, "experiment.noise"),
])
def test_parse_errors_carry_location(text, line, field):
    with pytest.raises(ConfigParseError) as exc:
        parse_config(text)
    assert exc.value.line == line and exc.value.field == field
    assert f"line {line}" in str(exc.value) and field in str(exc.value)


def test_parse_structural_errors():
    with pytest.raises(ConfigParseError, match=r"\[experiment\]"):
        parse_config("[map]\nname = doubling\n")
    with pytest.raises(ConfigParseError):
        parse_config("name = doubling\n")
    with pytest.raises(ConfigParseError) as exc:
        parse_config("[map]\nname = doubling\n[experiment]\ngrid_n = 4\n")
    assert exc.value.field == "experiment.grid_n"


def test_analyze_doubling(tmp_path):
    cfg = _write(tmp_path, DOUBLING_CFG, "analyze")
    assert _run(tmp_path, cfg) == EXIT_OK
    rep = _json(tmp_path / "out" / "hypothesis_report.json")
    assert rep["passes_P"] is True and rep["p_margin"] == "inf"
    assert rep["failing"] == []
    meta = rep["metadata"]
    assert meta["toolkit"] == "gibbsforge" and meta["seed"] == 0 and meta["grid_n"] == 256
    assert "timestamp" not in meta


def test_equilibrium_doubling(tmp_path):
    cfg = _write(tmp_path, DOUBLING_CFG, "equilibrium", grid_n=1024)
    assert _run(tmp_path, cfg) == EXIT_OK
    eq = _json(tmp_path / "out" / "equilibrium.json")
    assert eq["lambda"] == pytest.approx(2.0, abs=1e-9)
    assert eq["entropy"] == pytest.approx(math.log(2), abs=1e-6)
    meta, header, rows = read_csv(tmp_path / "out" / "eigendata.csv")
    assert header == ["midpoint", "h", "nu"] and len(rows) == 1024
    assert meta["version"] and meta["seed"] == "0" and meta["tolerance"] == "1e-10"


def test_exit_codes(tmp_path):
    missing = tmp_path / "nope.ini"
    assert main([str(missing)]) == EXIT_CONFIG
    bad_map = tmp_path / "bad.ini"
    bad_map.write_text("[map]\nname = tent\n[experiment]\nkind = analyze\n")
    assert _run(tmp_path, bad_map) == EXIT_CONFIG
    bad_params = tmp_path / "params.ini"
    bad_params.write_text("[map]\nname = pitchfork_doubling\nparams = 3.0, 0.05\n[experiment]\n")
    assert _run(tmp_path, bad_params) == EXIT_CONFIG
    cfg = _write(tmp_path, DOUBLING_CFG, "analyze")
    assert _run(tmp_path, cfg, "out", "--grid-n", "4") == EXIT_CONFIG
    # beta below the flip point alpha: the oscillation condition fails
    mp = tmp_path / "mp.ini"
    mp.write_text("[map]\nname = manneville_pomeau_circle\nparams = 0.25\n"
                  "[potential]\nname = minus_log_deriv_plus_beta\nparams = 0.1\n"
                  "[experiment]\nkind = equilibrium\ngrid_n = 128\n")
    assert _run(tmp_path, mp, "mp") == EXIT_HYPOTHESES
    rep = _json(tmp_path / "mp" / "hypothesis_report.json")
    assert rep["failing"] == ["P"] and not (tmp_path / "mp" / "equilibrium.json").exists()


def test_flags_override_config(tmp_path):
    cfg = _write(tmp_path, DOUBLING_CFG, "equilibrium", grid_n=256)
    assert _run(tmp_path, cfg, "out", "--grid-n", "128", "--seed", "9", "--timestamp") == EXIT_OK
    meta, _, rows = read_csv(tmp_path / "out" / "equilibrium.csv")
    assert len(rows) == 128 and meta["grid_n"] == "128" and meta["seed"] == "9"
    assert "timestamp" in meta


@pytest.mark.parametrize("template,kind,extra,files", [
    (PITCHFORK_CFG, "equilibrium", "", ["eigendata.csv", "equilibrium.csv"]),
    (PITCHFORK_CFG, "gibbs", "samples = 30\nn_max = 12", ["gibbs_ratios.csv"]),
    (PITCHFORK_CFG, "hyptimes", "samples = 2000\nn_max = 40", ["hyptimes_tail.csv"]),
    (PITCHFORK_CFG, "stat-sweep", "sweep = 0.8, 0.9, 1.0\nsweep_base = 1.0", ["sweep.csv"]),
    (PITCHFORK_CFG, "stoch-sweep", "sweep = 0.05, 0.02", ["sweep.csv"]),
])
def test_determinism(tmp_path, template, kind, extra, files):
    cfg = _write(tmp_path, template, kind, grid_n=512, extra=extra)
    assert _run(tmp_path, cfg, "a") == EXIT_OK
    assert _run(tmp_path, cfg, "b", "--timestamp") == EXIT_OK
    for name in files:
        assert csv_body(tmp_path / "a" / name) == csv_body(tmp_path / "b" / name)
        raw = (tmp_path / "a" / name).read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")


def test_roundtrip_eigendata_and_equilibrium(tmp_path):
    cfg = _write(tmp_path, PITCHFORK_CFG, "equilibrium", grid_n=512)
    assert _run(tmp_path, cfg) == EXIT_OK
    out = tmp_path / "out"
    _, _, eig_rows = read_csv(out / "eigendata.csv")
    nu = np.array([r[2] for r in eig_rows])
    assert nu.sum() == pytest.approx(1.0, abs=1e-12)
    _, _, rows = read_csv(out / "equilibrium.csv")
    mu = np.array([r[1] for r in rows])
    dens = np.array([r[2] for r in rows])
    summary = _json(out / "equilibrium.json")
    support = nu > 0
    assert abs(dens[support].max() - summary["density_sup"]) <= 1e-12
    assert abs(dens[support].min() - summary["density_inf"]) <= 1e-12
    assert mu.sum() == pytest.approx(1.0, abs=1e-12)
    assert summary["lambda"] == _json(out / "eigendata.json")["lambda"]


def test_roundtrip_gibbs(tmp_path):
    cfg = _write(tmp_path, PITCHFORK_CFG, "gibbs", grid_n=512, extra="samples = 30\nn_max = 12")
    assert _run(tmp_path, cfg) == EXIT_OK
    _, header, rows = read_csv(tmp_path / "out" / "gibbs_ratios.csv")
    assert header == ["x", "n", "ratio"]
    r = np.array([row[2] for row in rows])
    summary = _json(tmp_path / "out" / "gibbs.json")
    assert summary["count"] == r.size > 0
    assert abs(r.min() - summary["ratio_min"]) <= 1e-12 and abs(r.max() - summary["ratio_max"]) <= 1e-12
    assert abs(max(r.max(), 1 / r.min()) - summary["K"]) <= 1e-12


def test_roundtrip_hyptimes(tmp_path):
    cfg = _write(tmp_path, PITCHFORK_CFG, "hyptimes", grid_n=512, extra="samples = 2000\nn_max = 40")
    assert _run(tmp_path, cfg) == EXIT_OK
    meta, _, rows = read_csv(tmp_path / "out" / "hyptimes_tail.csv")
    n = np.array([row[0] for row in rows])
    p = np.array([row[1] for row in rows])
    keep = p > 0
    slope = np.polyfit(n[keep], np.log(p[keep]), 1)[0]
    summary = _json(tmp_path / "out" / "hyptimes.json")
    assert abs(slope - summary["loglinear_slope"]) <= 1e-12
    assert float(meta["c"]) == summary["c"]


def test_roundtrip_sweep(tmp_path):
    cfg = _write(tmp_path, PITCHFORK_CFG, "stat-sweep", grid_n=512,
                 extra="sweep = 0.8, 0.9, 1.0\nsweep_base = 1.0")
    assert _run(tmp_path, cfg) == EXIT_OK
    _, header, rows = read_csv(tmp_path / "out" / "sweep.csv")
    assert header == ["parameter", "L1", "kolmogorov", "lambda", "pressure"]
    L1 = [row[1] for row in rows]
    summary = _json(tmp_path / "out" / "sweep.json")
    assert abs(max(L1) - summary["max_L1"]) <= 1e-12 and abs(L1[-1] - summary["final_L1"]) <= 1e-12
    assert summary["metadata"]["sweep_base"] == 1.0
    for row in rows:
        assert abs(math.log(row[3]) - row[4]) <= 1e-12


def test_sentinels():
    assert json_safe({"a": math.inf, "b": -math.inf, "c": math.nan, "d": np.float64(1.5)}) == \
        {"a": "inf", "b": "-inf", "c": "nan", "d": 1.5}
    assert json_safe(np.array([1, 2])) == [1, 2] and json_safe(np.bool_(True)) is True
