import csv
import json
import os

import numpy as np
import pytest

from pathrep.cli import main, read_ensemble, write_ensemble
from pathrep.report import (
    VerificationReport,
    append_ledger,
    config_digest,
    exact_report,
    read_ledger,
    write_csv,
)
from pathrep.verify import make_cfg


def test_report_verdict_logic():
    r = VerificationReport("x", 1.001, 0.001, 100, {"ref": 1.0}, 7)
    assert r.verdict == "pass"
    r = VerificationReport("x", 1.1, 0.001, 100, {"ref": 1.0}, 7)
    assert r.verdict == "fail"
    r = VerificationReport("x", 1.1, 0.001, 100, {"ref": 1.0}, 7, bias_allowance=0.2)
    assert r.verdict == "pass"
    r = VerificationReport("x", 1.0, float("inf"), 100, {"ref": 1.0}, 7)
    assert r.verdict == "inconclusive"
    assert exact_report("y", 1e-14, 1e-12).verdict == "pass"
    assert exact_report("y", 1e-10, 1e-12).verdict == "fail"


def test_config_digest_stable():
    assert config_digest({"a": 1, "b": 2}) == config_digest({"b": 2, "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_ledger_and_csv_roundtrip(tmp_path):
    ledger = str(tmp_path / "ledger.jsonl")
    reports = [
        VerificationReport("id/one", 1.25, 0.01, 100, {"ref": 1.24}, 7, {"N": 10}),
        exact_report("id/two", 1e-13, 1e-10, 7),
    ]
    append_ledger(ledger, reports)
    append_ledger(ledger, reports[:1])
    docs = read_ledger(ledger)
    assert len(docs) == 3
    assert docs[0]["identity"] == "id/one"
    out = str(tmp_path / "out.csv")
    write_csv(out, docs)
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    # numeric round trip through repr
    assert float(rows[0]["estimate"]) == 1.25
    assert float(rows[1]["estimate"]) == 1e-13


def test_ensemble_write_read_and_digest(tmp_path):
    cfg = make_cfg(group="torus", N=20, M=30, seed=5)
    p1, p2 = str(tmp_path / "a.bin"), str(tmp_path / "b.bin")
    d1 = write_ensemble(p1, cfg)
    d2 = write_ensemble(p2, cfg)
    assert d1 == d2
    header, rows = read_ensemble(p1)
    assert rows.shape == (30, 20, 1)
    assert header["seed"] == 5
    # corruption is detected
    blob = bytearray(open(p1, "rb").read())
    blob[-20] ^= 0xFF
    open(p1, "wb").write(bytes(blob))
    with pytest.raises(ValueError):
        read_ensemble(p1)


def test_cli_simulate_and_validation(tmp_path, capsys):
    out = str(tmp_path / "ens.bin")
    rc = main(["simulate", "--group", "torus", "--N", "10", "--M", "5", "--seed", "3", "--out", out])
    assert rc == 0
    assert os.path.exists(out)
    with pytest.raises(SystemExit):
        main(["simulate", "--N", "0", "--M", "5"])


def test_cli_verify_and_report(tmp_path, capsys):
    ledger = str(tmp_path / "c.jsonl")
    rc = main([
        "verify", "--suite", "exact", "--group", "torus", "--N", "20",
        "--ledger", ledger,
    ])
    assert rc == 0
    docs = read_ledger(ledger)
    assert docs and all(d["verdict"] == "pass" for d in docs)
    outcsv = str(tmp_path / "c.csv")
    figdir = str(tmp_path / "figs")
    rc = main(["report", "--ledger", ledger, "--format", "csv", "--out", outcsv,
               "--figures", figdir])
    assert rc == 0
    assert os.path.exists(outcsv)
    assert os.path.exists(os.path.join(figdir, "differences.png"))
    assert os.path.exists(os.path.join(figdir, "verdicts.png"))
    # verdict filter
    rc = main(["report", "--ledger", ledger, "--format", "csv", "--out", outcsv,
               "--verdict", "fail"])
    assert rc == 0
    with open(outcsv) as fh:
        assert len(list(csv.DictReader(fh))) == 0
    # missing ledger errors
    assert main(["report", "--ledger", str(tmp_path / "missing.jsonl")]) == 1


def test_cli_empty_ledger(tmp_path):
    ledger = str(tmp_path / "empty.jsonl")
    open(ledger, "w").close()
    assert main(["report", "--ledger", ledger]) == 0


def test_cli_config_override_and_env_seed(tmp_path, monkeypatch):
    cfgfile = str(tmp_path / "cfg.json")
    json.dump({"N": 16, "group": "torus"}, open(cfgfile, "w"))
    ledger = str(tmp_path / "d.jsonl")
    monkeypatch.setenv("PATHREP_SEED", "21")
    rc = main(["verify", "--suite", "exact", "--config", cfgfile, "--ledger", ledger])
    assert rc == 0
    docs = read_ledger(ledger)
    assert docs[0]["seed"] == 21
    assert docs[0]["config"]["N"] == 16


def test_cli_identity_glob(tmp_path):
    rc = main(["verify", "--identity", "symbolic/fw-*", "--group", "torus", "--N", "16"])
    assert rc == 0
    assert main(["verify", "--identity", "no-such-identity", "--group", "torus"]) == 2
