import csv
import json
import math

import pytest

from hdsecrecy import cli
from hdsecrecy.config import load_config, load_config_text, parse_value
from hdsecrecy.model import ConfigurationError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_json(tmp_path, *args):
    out = tmp_path / "out.json"
    code = cli.run(list(args) + ["--format", "json", "--out", str(out)])
    return code, (json.loads(out.read_text()) if code == 0 else None)


BLIND = "run.scheme = twoway\nclassifier.kind = blind\nscheme.p_t = 0.5\n"


def test_minimal_config_defaults():
    cfg = load_config_text("run.scheme = twoway\nscheme.p_t = 0.25\n")
    assert cfg["geometry.d_ab"] == 1.0 and cfg["geometry.r_e"] == 5.0
    assert cfg["fec.mode"] == "ideal" and cfg["run.frames"] == 10**6
    assert cfg.param == 0.25


@pytest.mark.parametrize("text,key", [
    ("scheme.p_t = 1.5\n", "scheme.p_t"),
    ("geometry.d_ab = -1\n", "d_ab"),
    ("run.seed = 'x'\n", "run.seed"),
    ("power.min_db = 30\n", "power.min_db"),
    ("grid.adversaries = ['bogus']\n", "grid.adversaries"),
])
def test_validation_names_key(text, key):
    with pytest.raises(ConfigurationError, match=key.replace(".", r"\.")):
        load_config_text(text)


def test_scheme_conflict():
    with pytest.raises(ConfigurationError, match="conflict"):
        load_config_text("scheme.p_t = 0.5\nscheme.beta = 0.3\n")
    with pytest.raises(ConfigurationError, match="conflict"):
        load_config_text("run.scheme = tdm\nscheme.p_t = 0.5\n")


def test_unknown_and_duplicate_keys():
    with pytest.raises(ConfigurationError, match="unknown"):
        load_config_text("geometry.radius = 3\n")
    with pytest.raises(ConfigurationError, match="duplicate"):
        load_config_text("run.seed = 1\nrun.seed = 2\n")
    with pytest.raises(ConfigurationError):
        load_config_text("just words\n")


def test_value_parsing():
    assert parse_value("[-inf, 0]") == [-math.inf, 0]
    assert parse_value('"window-rel[-inf,0]"') == "window-rel[-inf,0]"
    assert parse_value("true") is True and parse_value("none") is None
    assert parse_value("tx-far") == "tx-far"
    cfg = load_config_text("classifier.t2_db = 1.5  # comment\ngrid.adversaries = "
                           "['no-erasure', 'window-rel[-inf,0]', 'perfect']\n")
    assert cfg["classifier.t2_db"] == 1.5 and len(cfg.search_grid().adversaries) == 3


def test_exit_codes(tmp_path, capsys):
    assert cli.run(["rates", "--config", write(tmp_path, "a.cfg", "scheme.p_t = 1.5\n")]) == 2
    assert "scheme.p_t" in capsys.readouterr().err
    assert cli.run(["rates", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert cli.run(["rates", "--config", write(tmp_path, "b.cfg", "nonsense\n")]) == 2
    assert cli.run(["optimize", "--config", write(tmp_path, "c.cfg", "grid.params = []\n")]) == 2


def test_contract_exit_code(tmp_path, monkeypatch):
    from hdsecrecy.model import ContractViolation

    def boom(cfg):
        raise ContractViolation("forced")
    monkeypatch.setitem(cli.COMMANDS, "rates", boom)
    assert cli.run(["rates"]) == 3


def test_rates_blind(tmp_path):
    code, rec = run_json(tmp_path, "rates", "--config", write(tmp_path, "c.cfg", BLIND))
    assert code == 0
    assert rec["result"]["r_s"] == pytest.approx(0.17923, abs=1e-5)
    assert rec["input"]["classifier.kind"] == "blind"
    assert rec["input"]["scheme.p_t"] == 0.5


def test_rates_tdm_beta_one(tmp_path):
    code, rec = run_json(tmp_path, "rates", "--config",
                         write(tmp_path, "c.cfg", "run.scheme = tdm\nscheme.beta = 1.0\n"))
    assert code == 0 and rec["result"]["r_s"] == 0.0


def test_record_round_trip(tmp_path):
    cfg = write(tmp_path, "c.cfg", "run.scheme = tdm\nscheme.beta = 0.4\n"
                "classifier.t2_db = 0.5\ngeometry.r_e = 0.8\ngeometry.theta = 2.0\n")
    _, first = run_json(tmp_path, "rates", "--config", cfg)
    rec = tmp_path / "rec.json"
    rec.write_text(json.dumps(first))
    _, again = run_json(tmp_path, "rates", "--config", str(rec))
    assert again == first


def test_optimize_singleton_matches_rates(tmp_path):
    base = ("run.scheme = tdm\nscheme.beta = 0.4\ngeometry.r_e = 0.8\ngeometry.theta = 2.0\n"
            "classifier.t2_db = 0.0\nfeedback.kind = uniform\nfeedback.min_db = 5\n"
            "feedback.max_db = 15\n")
    grid = ("grid.params = [0.4]\ngrid.laws = config\ngrid.thetas = [2.0]\n"
            "grid.adversaries = ['window-rel[-inf,0]']\n")
    _, rates = run_json(tmp_path, "rates", "--config", write(tmp_path, "r.cfg", base))
    _, best = run_json(tmp_path, "optimize", "--config", write(tmp_path, "o.cfg", base + grid))
    assert best["result"]["r_sec"] == pytest.approx(0.5 * rates["result"]["r_s"], abs=1e-12)


def test_optimize_perfect_and_blind_argmax(tmp_path):
    cfg = write(tmp_path, "p.cfg", "grid.adversaries = ['perfect']\ngrid.points = 3\n"
                "grid.theta_points = 3\n")
    _, rec = run_json(tmp_path, "optimize", "--config", cfg)
    assert rec["result"]["r_sec"] == 0.0
    cfg = write(tmp_path, "b.cfg", "grid.adversaries = ['blind']\ngrid.params = [0.3, 0.5, 0.7]\n"
                "grid.laws = config\ngrid.thetas = [1.5707963267948966]\n")
    _, rec = run_json(tmp_path, "optimize", "--config", cfg)
    assert rec["result"]["argmax"]["p_t"] == 0.5
    assert rec["result"]["r_sec"] == pytest.approx(0.17923, abs=1e-5)


SMALL_SWEEP = "grid.points = 4\ngrid.theta_points = 3\n"


def test_sweep_csv(tmp_path):
    out = tmp_path / "s.csv"
    cfg = write(tmp_path, "s.cfg", SMALL_SWEEP)
    assert cli.run(["sweep", "--config", cfg, "--steps", "1", "--ratio-min", "1.0",
                    "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == list(cli.SWEEP_COLUMNS)
    assert [r[1] for r in rows[1:]] == ["tdm", "twoway"]
    assert float(rows[1][4]) == pytest.approx(math.pi / 2)
    assert float(rows[2][2]) >= float(rows[1][2])


def test_sweep_error_rows(tmp_path):
    out = tmp_path / "s.csv"
    cfg = write(tmp_path, "s.cfg", SMALL_SWEEP + "sweep.r_e = 5.0\nsweep.schemes = ['twoway']\n")
    assert cli.run(["sweep", "--config", cfg, "--steps", "2", "--ratio-min", "0.5",
                    "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[1] == ["0.5", "twoway", "", "", "", cli.SWEEP_ERROR]
    assert rows[2][5] != cli.SWEEP_ERROR


def test_sweep_deterministic(tmp_path):
    cfg = write(tmp_path, "s.cfg", SMALL_SWEEP)
    outs = []
    for i, threads in enumerate(("1", "1", "3")):
        out = tmp_path / f"s{i}.csv"
        assert cli.run(["sweep", "--config", cfg, "--steps", "4", "--threads", threads,
                        "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_simulate(tmp_path):
    cfg = write(tmp_path, "c.cfg", BLIND)
    code, rec = run_json(tmp_path, "simulate", "--config", cfg, "--frames", "1000000")
    assert code == 0
    assert rec["result"]["comparison"]["fraction_within"] >= 0.99
    assert abs(rec["result"]["r_s_difference"]) < 0.005
    code, rec = run_json(tmp_path, "simulate", "--config", cfg, "--frames", "1")
    assert code == 0 and rec["result"]["low_confidence"]


def test_simulate_trace(tmp_path):
    trace = tmp_path / "t.csv"
    cfg = write(tmp_path, "c.cfg", BLIND + f"simulate.trace = '{trace}'\nsimulate.trace_limit = 50\n")
    code, rec = run_json(tmp_path, "simulate", "--config", cfg, "--frames", "1000")
    assert code == 0 and rec["result"]["trace_rows"] == 50
    assert len(trace.read_text().splitlines()) == 51


def test_key_value_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.run(["rates", "--config", write(tmp_path, "c.cfg", BLIND), "--out", str(out)]) == 0
    rows = dict(csv.reader(out.open()))
    assert rows["input.classifier.t2_db"] == "inf"
    assert rows["result.breakdown.d_a"] == "0.375"
