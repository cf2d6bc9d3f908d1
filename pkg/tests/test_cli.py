import json
import os

import pytest

from kpz_exact.cli import (
    _parse_argv,
    emit_plotdata,
    main,
    run,
    validate_config,
    worker_count,
)
from kpz_exact.errors import InvalidConfig


def test_validate_config_defaults():
    params = validate_config("duality-check", {})
    assert params["N"] == 5
    assert params["q"] == 0.5
    assert params["trials"] == 1000
    assert params["seed"] == 0


def test_validate_config_rejects_unknown_key():
    with pytest.raises(InvalidConfig, match="unknown key"):
        validate_config("duality-check", {"bogus": "1"})


def test_validate_config_rejects_bad_q():
    with pytest.raises(InvalidConfig, match="q must lie in"):
        validate_config("moments", {"q": "1.5"})


def test_validate_config_rejects_infeasible_nesting():
    # ten nested circles at q = 0.5 push the outermost radius past 1
    with pytest.raises(InvalidConfig, match="nesting infeasible"):
        validate_config("moments", {"n": ",".join(["1"] * 10)})


def test_validate_config_grid_parsing():
    params = validate_config("tracy-widom", {"s-grid": "-1:1:0.5"})
    assert params["s-grid"] == [-1.0, -0.5, 0.0, 0.5, 1.0]


def test_parse_argv_forms():
    known, overrides = _parse_argv(
        ["moments", "--out", "d", "--q", "0.3", "--t=2.0"])
    assert known.experiment == "moments"
    assert known.out == "d"
    assert overrides == {"q": "0.3", "t": "2.0"}
    with pytest.raises(InvalidConfig, match="missing value"):
        _parse_argv(["moments", "--q"])
    with pytest.raises(InvalidConfig, match="unexpected argument"):
        _parse_argv(["moments", "stray"])


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("KPZ_EXACT_WORKERS", raising=False)
    assert worker_count() >= 1
    monkeypatch.setenv("KPZ_EXACT_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("KPZ_EXACT_WORKERS", "zero")
    with pytest.raises(InvalidConfig):
        worker_count()


def test_emit_plotdata_empty_warns(tmp_path):
    with pytest.warns(UserWarning, match="no curves"):
        assert emit_plotdata(str(tmp_path), {}) == []


def test_run_duality_manifest(tmp_path):
    params = validate_config("duality-check", {"trials": "50"})
    code, manifest = run("duality-check", params, str(tmp_path))
    assert code == 0
    assert all(entry["pass"] for entry in manifest["checks"])
    path = tmp_path / "manifest.json"
    data = json.loads(path.read_text())
    assert list(data) == sorted(data)
    assert data["config"]["experiment"] == "duality-check"
    assert data["version"]
    assert data["workers"] >= 1


def test_main_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "a")
    code = main(["duality-check", "--trials", "50", "--out", out])
    assert code == 0
    text = capsys.readouterr().out
    assert "PASS" in text
    # invalid config -> 1
    assert main(["duality-check", "--q", "2.0", "--out", out]) == 1
    # failed check -> 2 (impossible tolerance; q != 0.5 so the residual is
    # rounding-level but nonzero)
    out2 = str(tmp_path / "b")
    code2 = main(["duality-check", "--trials", "50", "--q", "0.35",
                  "--tol", "1e-30", "--out", out2])
    assert code2 == 2


def test_main_validate_subcommand(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "moments", "q": 0.3}))
    assert main(["validate", "--config", str(cfg)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["ok"] is True
    assert report["params"]["q"] == 0.3


def test_config_file_overridden_by_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 10, "q": 0.3}))
    out = str(tmp_path / "out")
    code = main(["duality-check", "--config", str(cfg), "--q", "0.4",
                 "--out", out])
    assert code == 0
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["config"]["params"]["q"] == 0.4
    assert manifest["config"]["params"]["trials"] == 10


def test_rerun_is_deterministic(tmp_path):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        code = main(["chaos", "--alphas", "5", "--samples", "100000",
                     "--out", str(out)])
        assert code == 0
        files = sorted(os.listdir(out))
        outs.append({f: (out / f).read_bytes()
                     for f in files if f != "manifest.json"})
    assert outs[0] == outs[1]
    csv_files = [f for f in outs[0] if f.endswith(".csv")]
    assert csv_files
    assert b"\r\n" in outs[0][csv_files[0]]
