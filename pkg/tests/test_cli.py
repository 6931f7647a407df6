import csv
import io
import json

import pytest

from prlab import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list(capsys):
    code, out, _ = run(["list"], capsys)
    assert code == 0 and "cp-duality" in out and "mixture-variance" in out


def test_run_with_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "decider-witness"}))
    code, out, _ = run(["run", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path)],
                       capsys)
    assert code == 0 and "PASS" in out
    report = json.loads((tmp_path / "decider-witness.report.json").read_text())
    assert report["config"]["seed"] == 4


def test_unknown_and_invalid(capsys):
    code, _, err = run(["run", "--experiment", "nope"], capsys)
    assert code == 1 and "available" in err
    code, _, err = run(["run", "--experiment", "decider-witness", "--param", "x=1"], capsys)
    assert code == 1 and "invalid config" in err


def test_failure_and_infeasible_exit_codes(capsys):
    code, _, _ = run(["run", "--experiment", "restriction-exact", "--samples", "2",
                      "--param", "tol=1e-30"], capsys)
    assert code == 1
    code, _, err = run(["run", "--experiment", "restriction-check", "--samples", "500",
                        "--param", "floor=0.99"], capsys)
    assert code == 2 and "infeasible" in err


def test_sample_csv_and_summary(tmp_path, capsys):
    nu = tmp_path / "nu.json"
    nu.write_text(json.dumps({"sites": [1, 2], "atoms": [{"set": [1], "mass": 0.5},
                                                         {"set": [1, 2], "mass": 0.2}]}))
    code, out, _ = run(["sample", str(nu), "--samples", "50", "--seed", "1"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["mask", "1", "2"] and len(rows) == 51
    code, out, _ = run(["sample", str(nu), "--samples", "2000", "--summary", "--gamma",
                        "maxsize:1"], capsys)
    rows = {r[0]: r for r in csv.reader(io.StringIO(out))}
    assert float(rows["P(X(2)=1)"][1]) == 0.0


def test_decide(tmp_path, capsys):
    law = tmp_path / "law.json"
    law.write_text(json.dumps({"sites": [1, 2], "probs": [0.1, 0.4, 0.4, 0.1]}))
    code, out, _ = run(["decide", str(law)], capsys)
    assert code == 0 and json.loads(out)["verdict"] == "NotRepresentable"


def test_ising_decide_flags(tmp_path, capsys):
    code, out, _ = run(["ising-decide", "--beta", "0.4", "--box", "1", "--boundary", "free",
                        "--clamp-spec", "0,0=1", "--out", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "ising-decide.report.json").read_text())
    assert report["config"]["params"]["clamps"] == "0,0=1"


def test_cp_flags_map_to_params(capsys):
    code, out, _ = run(["cp-generator-identity", "--lambda", "3", "--dim", "1", "--box", "4",
                        "--horizon", "10", "--samples", "4000", "--seed", "2",
                        "--param", "m=1"], capsys)
    report = json.loads(out)
    assert report["config"]["params"]["window"] == 4
    assert report["config"]["params"]["burn_in"] == 10
    assert code in (0, 1)


def test_flag_not_applicable(capsys):
    with pytest.raises(SystemExit):
        cli.main(["ising-decide", "--sweeps", "10"])


def test_ising_schonmann_trend(tmp_path, capsys):
    code, out, err = run(["ising-schonmann", "--variant", "one-sided", "--beta", "0.0",
                          "--box", "6", "--n", "1", "--m", "3", "4", "--sweeps", "20",
                          "--samples", "400", "--param", "thin=1", "--param", "chains=4",
                          "--out", str(tmp_path)], capsys)
    rows = list(csv.reader((tmp_path / "schonmann-b.trend.csv").open()))
    assert rows[0][0] == "m" and [r[0] for r in rows[1:]] == ["3", "4"]
