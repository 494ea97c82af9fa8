import csv
import io
import math

import pytest

from irrtorus import cli


def synthetic_csv(path, slope, Ns=(4, 8, 16, 32), d=2, p=8.0, theta="1,sqrt2", config_hash="abc"):
    lines = ["# irrtorus sweep", "# experiment: strichartz", f"# config_hash: {config_hash}"]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(cli.SCHEMAS["strichartz"])
    for n in Ns:
        w.writerow(["data", d, theta, p, n, "all-ones", 0, 2.0 * n ** slope, "ok"])
    path.write_text("\n".join(lines) + "\n" + buf.getvalue())
    return path


def test_parse_theta():
    vals, tags = cli.parse_theta("1, sqrt2, sqrt(3)")
    assert vals == pytest.approx((1, math.sqrt(2), math.sqrt(3)))
    assert tags == ("1", "sqrt2", "sqrt3")
    assert cli.parse_theta("1, 1.5") == ((1.0, 1.5), ())
    with pytest.raises(cli.ConfigError):
        cli.parse_theta(" , ")


def test_config_file_and_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[irrtorus]\nschema_version = 1\ntheta = 1, sqrt2, sqrt3\np = 6\nN = 2,3,4\n")
    cfg = cli.build_config("strichartz", cli.read_config_file(ini), {"seed": "7"})
    assert cfg.d == 3 and cfg.p == 6 and cfg.N == (2, 3, 4) and cfg.seed == 7
    assert cfg.theta_tags == ("1", "sqrt2", "sqrt3")
    # the hash ignores worker count and output location
    other = cli.build_config("strichartz", cli.read_config_file(ini), {"seed": "7", "workers": "3", "out": "x"})
    assert other.config_hash() == cfg.config_hash()
    assert cli.build_config("strichartz", cli.read_config_file(ini), {"seed": "8"}).config_hash() != cfg.config_hash()


@pytest.mark.parametrize("values", [
    {"bogus": "1"},
    {"schema_version": "2"},
    {"theta": "1, -1"},
    {"N": "4,8"},
    {"N": "4,x,8"},
    {"interval": "1, 0"},
    {"d": "3", "theta": "1, 2"},
])
def test_invalid_configs(values):
    with pytest.raises(cli.ConfigError):
        cli.build_config("strichartz", values)


def test_experiment_mismatch():
    with pytest.raises(cli.ConfigError):
        cli.build_config("moment", {"experiment": "arcs"})


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert cli.resolve_workers(None) == 3
    assert cli.resolve_workers(2) == 2
    monkeypatch.delenv(cli.WORKERS_ENV)
    assert cli.resolve_workers(None) >= 1


def test_run_deterministic_across_workers(tmp_path):
    outs = []
    for w in (1, 2):
        out = tmp_path / f"w{w}"
        code = cli.main(["strichartz", "--out", str(out), "--workers", str(w), "--seed", "5",
                         "--set", "N=2,3,4", "--set", "p=6", "--set", "families=all-ones,gaussian-random",
                         "--grid-oversample", "4"])
        assert code == 0
        outs.append((out / "strichartz.csv").read_bytes())
        assert (out / "strichartz.svg").exists()
    assert outs[0] == outs[1]
    meta, rows = cli.read_sweep_csv(tmp_path / "w1" / "strichartz.csv")
    assert meta["experiment"] == "strichartz" and len(meta["config_hash"]) == 16
    assert {r["row"] for r in rows} == {"data", "fit"}
    assert all(r["status"] == "ok" for r in rows if r["row"] == "data")


@pytest.mark.parametrize("exp,extra", [
    ("moment", ["--set", "r=4", "--set", "N=4,8,16"]),
    ("levelset", ["--set", "N=4,8"]),
    ("arcs", ["--set", "r=6", "--set", "N=8,16"]),
    ("kernel", ["--set", "N=16,32", "--set", "samples=8"]),
    ("multilinear", ["--set", "N=4,2", "--set", "seeds=2", "--grid-oversample", "2"]),
    ("nls", ["--set", "N=4", "--set", "T=0.01", "--set", "dt=1e-3"]),
])
def test_each_experiment_writes_its_schema(tmp_path, exp, extra):
    assert cli.main([exp, "--out", str(tmp_path), "--workers", "1"] + extra) == 0
    text = (tmp_path / f"{exp}.csv").read_text()
    header = next(line for line in text.splitlines() if not line.startswith("#"))
    assert header.split(",") == cli.SCHEMAS[exp]


def test_fit_pass_on_power_law(tmp_path, capsys):
    path = synthetic_csv(tmp_path / "a.csv", 0.5)
    verdicts = cli.fit_report([path], tolerance=1e-6)
    assert [v.status for v in verdicts] == ["PASS"]
    assert verdicts[0].measured == pytest.approx(0.5, abs=1e-12)
    assert cli.main(["fit", str(path), "--tolerance", "1e-6", "--out", str(tmp_path / "rep")]) == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "rep" / "fit_report.txt").exists()


def test_fit_fail_exit_code(tmp_path):
    path = synthetic_csv(tmp_path / "a.csv", 0.9)
    assert cli.main(["fit", str(path)]) == 1


def test_fit_partial_torus_prediction(tmp_path):
    path = synthetic_csv(tmp_path / "a.csv", 0.5, d=3, p=5.0, theta="1,1,sqrt2")
    (v,) = cli.fit_report([path], tolerance=1e-6)
    assert v.predicted == pytest.approx(0.5) and v.status == "PASS"


def test_fit_eps_regime_is_report_only(tmp_path):
    path = synthetic_csv(tmp_path / "a.csv", 0.2, p=6.0)
    (v,) = cli.fit_report([path])
    assert v.status == "REPORT-ONLY"


def test_fit_rejects_mixed_configs(tmp_path, capsys):
    a = synthetic_csv(tmp_path / "a.csv", 0.5, config_hash="one")
    b = synthetic_csv(tmp_path / "b.csv", 0.5, config_hash="two")
    with pytest.raises(cli.SchemaError):
        cli.fit_report([a, b])
    assert cli.main(["fit", str(a), str(b)]) == 2
    assert "different configs" in capsys.readouterr().err


def test_fit_schema_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("# config_hash: x\nrow,d,theta\ndata,2,1\n")
    with pytest.raises(cli.SchemaError):
        cli.read_sweep_csv(bad)
    assert cli.main(["fit", str(bad)]) == 2


def test_bad_config_exit_code(tmp_path, capsys):
    assert cli.main(["strichartz", "--out", str(tmp_path), "--set", "nonsense=1"]) == 2
    assert "unknown config key" in capsys.readouterr().err
    assert cli.main(["moment", "--config", str(tmp_path / "missing.ini")]) == 2
