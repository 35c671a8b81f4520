import json

import numpy as np
import pytest

from gnb import cli, config, experiments as ex, io
from gnb.diagnostics import CSV_COLUMNS

STANDARD = """\
# standard decay scenario
name = standard
d = 1
n = 128
s = 0.5
F.kind = power_int
F.param = 2
u0.kind = constant_plus_modes
u0.base = 2.0
u0.amplitudes = 0.5
u0.freqs = 1
t_end = 0.2
dt = 1e-3
"""


def test_parse_and_build():
    sc = config.scenario_from_dict(config.parse_text(STANDARD))
    ref = ex.standard_scenario(t_end=0.2)
    np.testing.assert_array_equal(sc.initial(), ref.initial())
    assert sc.solver == ref.solver
    assert sc.F.kind == "power_int" and sc.F.param == 2


def test_parse_errors():
    with pytest.raises(config.ConfigError):
        config.parse_text("a = 1\na = 2")
    with pytest.raises(config.ConfigError):
        config.parse_text("no equals sign")
    with pytest.raises(config.ConfigError):
        config.scenario_from_dict({"bogus": "1"})
    with pytest.raises(config.ConfigError):
        config.scenario_from_dict({"u0.colour": "red"})
    with pytest.raises(config.ConfigError):
        config.scenario_from_dict({"d": "2", "u0.amplitudes": "1", "u0.freqs": "1"})
    with pytest.raises(config.ConfigError):
        config.scenario_from_dict({"s": "1.5"})
    with pytest.raises(FileNotFoundError):
        config.load_scenario("/nonexistent/x.cfg")


@pytest.mark.parametrize("make", [ex.standard_scenario, ex.decay_2d_scenario, ex.blowup_scenario,
                                  ex.delta_scenario])
def test_dump_roundtrip(make):
    sc = make()
    back = config.scenario_from_dict(config.parse_text(config.dump_scenario(sc)))
    assert back.solver == sc.solver and back.u0 == sc.u0 and back.params == sc.params
    assert (back.d, back.n, back.F.kind, back.F.param) == (sc.d, sc.n, sc.F.kind, sc.F.param)


def test_snapshot_roundtrip(tmp_path):
    u = np.random.default_rng(0).standard_normal((16, 16))
    p = tmp_path / "u.gnbf"
    io.write_snapshot(p, u, 0.7, 1.25)
    raw = p.read_bytes()
    assert raw[:4] == b"GNBF" and len(raw) == 4 + 3 * 4 + 2 * 8 + 8 * 256
    v, s, t = io.read_snapshot(p)
    np.testing.assert_array_equal(u, v)
    assert (s, t) == (0.7, 1.25)
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        io.read_snapshot(p)
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        io.read_snapshot(p)


def test_cli_missing_config(tmp_path, capsys):
    code = cli.main(["simulate", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
    assert code == 2
    assert "not found" in capsys.readouterr().err
    assert json.loads((tmp_path / "report.json").read_text())["error"]


def test_cli_usage_errors():
    for argv in (["frobnicate"], ["decay", "--bogus"], []):
        with pytest.raises(SystemExit) as e:
            cli.main(argv)
        assert e.value.code == 2


def test_cli_verify(tmp_path):
    assert cli.main(["verify", "--suite", "invariants", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["assertions"] and all(a["pass"] for a in doc["assertions"])


def test_cli_simulate_and_emit(tmp_path):
    cfg = tmp_path / "std.cfg"
    cfg.write_text(STANDARD)
    out = tmp_path / "run"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    csv = out / "standard_diagnostics.csv"
    assert csv.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    doc = json.loads((out / "report.json").read_text())
    assert str(csv) in doc["artifacts"]
    dat = tmp_path / "e.dat"
    assert cli.main(["emit-plot", "--csv", str(csv), "--col", "amplitude", "--output", str(dat),
                     "--out", str(tmp_path / "p")]) == 0
    lines = dat.read_text().splitlines()
    assert lines[0] == "# t amplitude" and len(lines[1].split()) == 2
    assert cli.main(["emit-plot", "--csv", str(csv), "--col", "nope", "--out", str(tmp_path / "q")]) == 2


def test_cli_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("GNB_THREADS", "1")
    cfg = tmp_path / "std.cfg"
    cfg.write_text(STANDARD)
    texts = []
    for tag in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / tag)]) == 0
        texts.append((tmp_path / tag / "standard_diagnostics.csv").read_bytes())
    assert texts[0] == texts[1]


def test_cli_unknown_key_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(STANDARD + "colour = red\n")
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_cli_failed_assertion_exits_1(tmp_path):
    # a refinement sweep that does not refine cannot be monotone
    cfg = tmp_path / "flat.cfg"
    cfg.write_text(STANDARD + "ns = 64, 64, 64\n")
    assert cli.main(["crossval", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert not next(a for a in doc["assertions"] if a["name"] == "monotone_in_n")["pass"]


def test_experiment_params_parsed():
    sc = config.scenario_from_dict({"t_mid": "0.1", "ns": "32, 64", "J": "10", "t_star": "0.05"})
    assert sc.params == {"t_mid": 0.1, "ns": (32.0, 64.0), "J": 10.0, "t_star": 0.05}
    with pytest.raises(config.ConfigError):
        config.scenario_from_dict({"lam": "2"})
