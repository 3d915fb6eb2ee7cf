import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from conftest import FULL_COVERAGE, load_golden
from mbtkit.cli import main, meta_path
from mbtkit.runner import bundled_path

MODEL = str(bundled_path("reference.efsm"))
TABLE = str(bundled_path("reference_table.json"))
RAW_TABLE = str(bundled_path("reference_table_raw.json"))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """generate + instantiate once for the whole module."""
    d = tmp_path_factory.mktemp("cli")
    suite = d / "suite.jsonl"
    assert main(["generate", MODEL, "--seed", "7", "--criteria", FULL_COVERAGE,
                 "--out", str(suite)]) == 0
    concrete = d / "concrete.jsonl"
    assert main(["instantiate", str(suite), "--table", TABLE, "--out", str(concrete)]) == 0
    return d, suite, concrete


def write_config(path, faults):
    path.write_text(json.dumps({"baseState": "Welcome", "faults": faults}))
    return str(path)


def test_validate_bundled_model(capsys):
    assert main(["validate", MODEL]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["findings"] == [] and out["states"] == 31


def test_validate_graphml_directory():
    assert main(["validate", str(bundled_path("reference_graphml"))]) == 0


def test_validate_bad_model(tmp_path):
    bad = tmp_path / "bad.efsm"
    bad.write_text('model m { state v_A start; state v_B exit; trans e_Go: v_A -> v_B '
                   'guard "1 + true"; }')
    assert main(["validate", str(bad)]) == 3
    broken = tmp_path / "broken.efsm"
    broken.write_text("model m { state")
    assert main(["validate", str(broken)]) == 3


def test_usage_errors(tmp_path, capsys):
    assert main(["generate", MODEL]) == 2
    assert "--out" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "absent.efsm")]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["generate", MODEL, "--out", str(tmp_path / "s"), "--criteria", "bogus(1)"]) == 2
    assert main(["run", str(tmp_path / "x"), "--jobs", "0"]) == 2


def test_generate_is_byte_identical(pipeline, tmp_path):
    _, suite, _ = pipeline
    again = tmp_path / "again.jsonl"
    assert main(["generate", MODEL, "--seed", "7", "--criteria", FULL_COVERAGE,
                 "--out", str(again)]) == 0
    assert again.read_bytes() == suite.read_bytes()
    meta = json.loads(meta_path(suite).read_text())
    assert meta["tests"] == 100 and meta["coverage"]["transitionPercent"] == 100


def test_generate_with_test_data(tmp_path):
    out = tmp_path / "s.jsonl"
    assert main(["generate", MODEL, "--seed", "1", "--criteria", "max_tests(3)",
                 "--qtds", str(bundled_path("qtds_users.json")), "--maturity", "advanced",
                 "--out", str(out)]) == 0
    first = json.loads(out.read_text().splitlines()[0])
    assert first["steps"][0]["ctx"]["maturity"] == "advanced"
    assert main(["generate", MODEL, "--maturity", "new", "--out", str(out)]) == 2


def test_clean_run(pipeline, capsys):
    d, _, concrete = pipeline
    report = d / "clean.json"
    assert main(["run", str(concrete), "--driver", "refsut", "--report", str(report)]) == 0
    assert json.loads(report.read_text())["summary"]["passed"] == 100


def test_fault_run_names_the_asserting_state(pipeline, tmp_path):
    _, _, concrete = pipeline
    report = tmp_path / "r.json"
    cfg = write_config(tmp_path / "cfg.json", ["FAULT_WRONG_SETTINGS_TAB"])
    assert main(["run", str(concrete), "--config", cfg, "--jobs", "3",
                 "--report", str(report)]) == 1
    data = json.loads(report.read_text())
    failed = [t for t in data["tests"] if t["verdict"] == "failed"]
    assert failed and {t["label"] for t in failed} == {"InGame.Settings.v_ProfileTab"}


def test_run_errors(pipeline, tmp_path):
    _, _, concrete = pipeline
    assert main(["run", str(concrete), "--driver", "appium"]) == 2
    assert main(["run", str(concrete), "--config",
                 write_config(tmp_path / "c.json", ["FAULT_NOPE"])]) == 2


def test_report_conversion(pipeline, tmp_path):
    _, _, concrete = pipeline
    report = tmp_path / "r.json"
    cfg = write_config(tmp_path / "cfg.json", ["FAULT_WRONG_HEADER"])
    main(["run", str(concrete), "--config", cfg, "--report", str(report)])
    junit = tmp_path / "r.xml"
    assert main(["report", str(report), "--format", "junit", "--out", str(junit)]) == 0
    root = ET.parse(junit).getroot()
    assert root.get("tests") == "100" and int(root.get("failures")) > 0
    assert main(["report", str(tmp_path / "none.json")]) == 2


def test_labels_check_and_update(tmp_path, capsys):
    assert main(["labels", MODEL, "--table", TABLE]) == 0
    table = tmp_path / "t.json"
    assert main(["labels", MODEL, "--table", str(table)]) == 2
    assert main(["labels", MODEL, "--table", str(table), "--update", "--flavor", "raw"]) == 0
    capsys.readouterr()
    assert main(["labels", MODEL, "--table", str(table)]) == 3
    out = json.loads(capsys.readouterr().out)
    golden = load_golden("reference_inventory.json")
    assert len(out["todo"]) == len(golden["states"]) + len(golden["transitions"])
    before = table.stat().st_mtime_ns
    assert main(["labels", MODEL, "--table", str(table), "--update"]) == 0
    assert table.stat().st_mtime_ns == before


def test_instantiate_modes(pipeline, tmp_path):
    _, suite, _ = pipeline
    out = tmp_path / "emit"
    assert main(["instantiate", str(suite), "--table", RAW_TABLE, "--out", str(out),
                 "--mode", "emit", "--model", MODEL]) == 0
    files = sorted(out.iterdir())
    assert len(files) == 100 and files[0].name == "test_0000.txt"
    assert files[0].read_text().startswith("r = app.read()\n")
    assert main(["instantiate", str(suite), "--table", RAW_TABLE, "--out",
                 str(tmp_path / "x")]) == 3


def test_instantiate_hash_mismatch(pipeline, tmp_path):
    _, suite, _ = pipeline
    stale = json.load(open(TABLE))
    stale["modelHash"] = "0" * 64
    (tmp_path / "stale.json").write_text(json.dumps(stale))
    assert main(["instantiate", str(suite), "--table", str(tmp_path / "stale.json"),
                 "--out", str(tmp_path / "c.jsonl")]) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mbtkit", "validate", MODEL],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    proc = subprocess.run([sys.executable, "-m", "mbtkit", "run", "c.jsonl", "--bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "--bogus" in proc.stderr
