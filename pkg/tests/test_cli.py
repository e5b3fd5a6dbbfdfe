import csv
import io
import json
import math

import pytest

from taukit import cli
from taukit.suites import RECORD_KEYS


def run_main(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_claims_exits_zero(capsys):
    code, out, _ = run_main(["verify", "--suite", "claims", "--threads", "1"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["schema"] == cli.SCHEMA and doc["name"] == "claims"
    assert doc["summary"] == {"records": 4, "verdicts": {"pass": 4}, "ok": True}
    assert all(tuple(r) == RECORD_KEYS for r in doc["records"])


@pytest.mark.parametrize("argv", [["verify", "--suite", "nope"], ["verify"], ["experiment"],
                                  ["experiment", "--experiment", "corollary1", "--dims", "0"],
                                  ["experiment", "--experiment", "corollary1", "--samples", "0"],
                                  ["experiment", "--experiment", "corollary1", "--t-grid", "-1"],
                                  ["experiment", "--experiment", "corollary1", "--dims", "40"]])
def test_usage_errors_exit_two(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_corollary1_rows(capsys):
    code, out, _ = run_main(["experiment", "--experiment", "corollary1", "--dims", "10", "--t-grid", "1,2,4,8",
                             "--samples", "20000", "--threads", "1"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["records"]) == 4
    for r in doc["records"]:
        assert r["bound"] == pytest.approx(2 * math.exp(-r["param"]))


def test_corollary2_lambda_zero(capsys):
    code, out, _ = run_main(["experiment", "--experiment", "corollary2", "--lambda-grid", "0", "--dims", "8",
                             "--samples", "20000", "--threads", "1"], capsys)
    recs = json.loads(out)["records"]
    assert code == 0
    linear = [r for r in recs if "linear" in r["case"]]
    assert len(linear) == 1 and linear[0]["estimate"] == 1.0 and linear[0]["bound"] == 1.0
    assert all(r["estimate"] == 1.0 and r["bound"] == 1.0 for r in recs)


def test_lemma4_exact_rows_have_both_tails(capsys):
    code, out, _ = run_main(["experiment", "--experiment", "lemma4", "--dims", "1", "--samples", "20000",
                             "--threads", "1"], capsys)
    recs = json.loads(out)["records"]
    assert code == 0 and all(r["exact"] is not None and r["estimate"] is not None for r in recs)


def test_csv_columns(capsys, tmp_path):
    path = tmp_path / "c1.csv"
    code = cli.main(["experiment", "--experiment", "corollary1", "--t-grid", "1,2", "--samples", "20000",
                     "--format", "csv", "--out", str(path), "--threads", "1"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert tuple(rows[0]) == cli.CSV_COLUMNS
    assert len(rows) == 3
    assert rows[1][cli.CSV_COLUMNS.index("verdict")] == "pass"


def test_same_config_identical_report(tmp_path):
    cfg = {"seed": 3, "samples": 20000, "dims": [1, 4], "t_grid": None, "lambda_grid": None, "threads": 2,
           "strict": False, "suite": None, "experiment": "lemma4", "format": "json", "out": None}
    a, _ = cli.run_experiment(dict(cfg))
    b, _ = cli.run_experiment(dict(cfg))
    strip = lambda d: [{k: v for k, v in r.items() if k != "wall_time"} for r in d["records"]]
    assert cli.to_json(strip(a)) == cli.to_json(strip(b))


def test_config_env_and_flag_precedence(tmp_path, monkeypatch, capsys):
    conf = tmp_path / "cfg.json"
    conf.write_text(json.dumps({"seed": 5, "samples": 20000, "experiment": "lemma4"}))
    monkeypatch.setenv("TAUKIT_SEED", "9")
    code, out, _ = run_main(["experiment", "--config", str(conf), "--threads", "1"], capsys)
    assert code == 0 and json.loads(out)["config"]["seed"] == 5
    code, out, _ = run_main(["experiment", "--config", str(conf), "--seed", "7", "--threads", "1"], capsys)
    assert json.loads(out)["config"]["seed"] == 7
    conf.write_text(json.dumps({"samples": 20000, "experiment": "lemma4"}))
    code, out, _ = run_main(["experiment", "--config", str(conf), "--threads", "1"], capsys)
    assert json.loads(out)["config"]["seed"] == 9
    conf.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["experiment", "--config", str(conf)]) == 2


def test_report_roundtrip(tmp_path, capsys):
    path = tmp_path / "r.json"
    assert cli.main(["verify", "--suite", "claims", "--out", str(path), "--threads", "1"]) == 0
    code, out, _ = run_main(["report", "--input", str(path)], capsys)
    assert code == 0 and "4 records" in out
    csv_path = tmp_path / "r.csv"
    assert cli.main(["report", "--input", str(path), "--format", "csv", "--out", str(csv_path)]) == 0
    assert csv_path.read_text().splitlines()[0] == ",".join(cli.CSV_COLUMNS)


def test_report_fail_exit_and_strict(tmp_path, capsys):
    base = {"schema": cli.SCHEMA, "records": []}
    rec = {k: None for k in RECORD_KEYS}
    rec.update(suite="x", case="y", verdict="inconclusive")
    path = tmp_path / "r.json"
    path.write_text(json.dumps(dict(base, records=[rec])))
    assert cli.main(["report", "--input", str(path)]) == 0
    assert cli.main(["report", "--input", str(path), "--strict"]) == 1
    rec["verdict"] = "fail"
    path.write_text(json.dumps(dict(base, records=[rec])))
    assert cli.main(["report", "--input", str(path)]) == 1
    capsys.readouterr()


def test_json_nonfinite_and_precision():
    text = cli.to_json({"a": math.inf, "b": -math.inf, "c": math.nan, "d": 0.1, "e": [1, 2.5]})
    doc = json.loads(text)
    assert doc["a"] == "inf" and doc["b"] == "-inf" and doc["c"] == "nan"
    assert doc["d"] == 0.1 and doc["e"] == [1, 2.5]


def test_write_atomic_leaves_no_temp(tmp_path):
    path = tmp_path / "out.txt"
    cli.write_atomic(str(path), "hello")
    assert path.read_text() == "hello"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
