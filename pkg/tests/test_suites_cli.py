import json
import subprocess
import sys

import pytest

from domeforge import cli, suites
from domeforge.geom import INF


def test_reports_are_reproducible():
    cfg = suites.SuiteConfig("vertex-sums", seed=7, samples={"configs": 5})
    a, b = suites.run_suite(cfg), suites.run_suite(cfg)
    assert a.to_bytes() == b.to_bytes()
    assert a.passed and len(a.records) == 10


def test_parallel_workers_give_same_bytes(monkeypatch):
    cfg = suites.SuiteConfig("vertex-sums", seed=3, samples={"configs": 4})
    monkeypatch.setenv("DOMEFORGE_THREADS", "1")
    serial = suites.run_suite(cfg).to_bytes()
    monkeypatch.setenv("DOMEFORGE_THREADS", "2")
    assert suites.run_suite(cfg).to_bytes() == serial


def test_config_validation():
    with pytest.raises(suites.ConfigError):
        suites.SuiteConfig.from_json({"suite": "nope"})
    with pytest.raises(suites.ConfigError):
        suites.SuiteConfig.from_json({"suite": "thin", "tolerances": {"bogus": 1}})
    with pytest.raises(suites.ConfigError):
        suites.SuiteConfig.from_json({"seed": 1})


def test_family_generation():
    D = suites.gen_config("random-6-inf", 4)
    assert len(D.points) == 6 and INF in D.points
    A = suites.gen_config("annulus(s=1.5,n=6)", 0)
    assert len(A.points) == 12
    with pytest.raises(suites.ConfigError):
        suites.parse_family("spiral")


def run_cli(args, stdin=""):
    p = subprocess.run([sys.executable, "-m", "domeforge.cli", *args], input=stdin, capture_output=True, text=True, timeout=600)
    return p.returncode, p.stdout, p.stderr


def test_cli_constants():
    code, out, _ = run_cli(["constants"])
    assert code == 0
    assert json.loads(out)["G_asinh1"] == pytest.approx(0.838682, abs=1e-6)


def test_cli_retract_and_metric():
    cfg = json.dumps({"points": [{"re": 0}, {"re": 1}, "inf"], "z": {"re": 0, "im": 1}})
    code, out, _ = run_cli(["retract"], cfg)
    assert code == 0
    r = json.loads(out)
    assert r["foot"]["kind"] == "edge" and r["h"] == pytest.approx(1.0)
    code, out, _ = run_cli(["metric"], cfg)
    assert code == 0 and json.loads(out)["q"] == pytest.approx(1.0)


def test_cli_metric_sweep_csv():
    cfg = json.dumps({"annulus": {"s": 2.0}, "zs": [[1.5, 0], [2.7, 0.1]]})
    code, out, _ = run_cli(["metric", "--sweep"], cfg)
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 3
    assert lines[0].startswith("re,im,q,beta")


def test_cli_svg(tmp_path):
    cfg = tmp_path / "sq.json"
    cfg.write_text(json.dumps({"points": [[1, 0], [0, 1], [-1, 0], [0, -1]]}))
    out = tmp_path / "sq.svg"
    assert cli.main(["svg", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().count("<path") == 6


def test_cli_exit_codes(tmp_path):
    assert cli.main(["bogus"]) == 2
    assert cli.main(["verify", "nosuch"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["hull", "--config", str(bad)]) == 2
    dup = tmp_path / "dup.json"
    dup.write_text(json.dumps({"points": [[0, 0], [0, 0], [1, 0]]}))
    assert cli.main(["hull", "--config", str(dup)]) == 2
    assert cli.main(["verify", "constants", "--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["pass"] is True
