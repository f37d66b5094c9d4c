import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from mmdclass.cli import main, read_columns
from mmdclass.config import config_hash, load_config

ROOT = Path(__file__).resolve().parent.parent
SMALL = """
seed = 7
[defaults]
trials = 30
[[tests]]
name = "fixed"
test = "fixed"
[tests.sweep]
param = "n"
start = 2
stop = 41
[[tests]]
name = "seq"
test = "sequential"
case = "general"
hypothesis = "null"
[tests.sweep]
param = "N0"
values = [3, 6]
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


def body(path):
    return [line for line in Path(path).read_text().splitlines() if not line.startswith("#")]


def test_simulate_writes_csvs_and_manifest(small_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(small_cfg), "--out", str(out), "--workers", "1"]) == 0
    digest = config_hash(load_config(small_cfg))
    lines = (out / "fixed.csv").read_text().splitlines()
    assert lines[0].startswith(f"# config_hash={digest}")
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 40
    assert list(rows[0]) == ["x_param", "x_value", "expected_tau", "error_prob", "ci95", "censored_frac",
                             "mean_wall_time_s", "trials", "seed"]
    assert rows[0]["x_param"] == "n" and rows[-1]["x_value"] == "41" and rows[5]["trials"] == "30"
    assert float(rows[-1]["expected_tau"]) == 41
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == digest
    assert sorted(Path(p).name for p in manifest["output_paths"]) == ["fixed.csv", "seq.csv"]
    assert manifest["started_at"] <= manifest["finished_at"]


def test_simulate_rerun_identical(small_cfg, tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(small_cfg), "--out", str(tmp_path / name), "--no-timing",
                     "--workers", "1"]) == 0
    for csv_name in ("fixed.csv", "seq.csv"):
        assert (tmp_path / "a" / csv_name).read_bytes() == (tmp_path / "b" / csv_name).read_bytes()


def test_simulate_overrides(small_cfg, tmp_path):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(small_cfg), "--out", str(out), "--seed", "99", "--trials", "3",
                 "--workers", "1"]) == 0
    row = list(csv.DictReader(body(out / "seq.csv")))[0]
    assert row["seed"] == "99" and row["trials"] == "3"


def test_simulate_unwritable_out(small_cfg, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--config", str(small_cfg), "--out", str(blocker / "sub")]) == 2


def test_simulate_invalid_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text('[[tests]]\ntest = "sequential"\ncase = "general"\nlambda1 = 0.3\nlambda2 = 0.1\n')
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "lambda1" in capsys.readouterr().err
    bad.write_text("seed = = 1")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_simulate_missing_config_is_io_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)]) == 2


def test_exponents_table(capsys):
    assert main(["exponents", "--config", str(ROOT / "configs" / "benchmark.cfg")]) == 0
    out = capsys.readouterr().out
    assert "D1     = 0.3217871606" in out and "D2_bar" in out
    rows = {tuple(line.split()[:2]): line.split() for line in out.splitlines()
            if line.split()[:1] and line.split()[0] in ("fixed", "sequential", "two_phase")}
    assert len(rows) == 6
    fixed = float(rows["fixed", "simple"][3])
    seq = float(rows["sequential", "simple"][3])
    assert seq >= fixed


def test_exponents_csv_and_delta_sweep(tmp_path, capsys):
    path = tmp_path / "e.csv"
    assert main(["exponents", "--config", str(ROOT / "configs" / "delta_sweep.cfg"), "--csv", str(path),
                 "--delta-sweep", "0.01,0.03,0.05,0.08"]) == 0
    text = path.read_text().split("\n\n")
    table = list(csv.DictReader(text[0].splitlines()))
    assert len(table) == 6
    deltas = list(csv.DictReader(text[1].splitlines()))
    for col in [c for c in deltas[0] if c not in ("delta", "d1", "d2")]:
        vals = [float(r[col]) for r in deltas]
        assert all(a > b for a, b in zip(vals, vals[1:])), col


def test_exponents_without_null_general_test(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text('clusters = [{mean = 0.0, radius = 0.1}, {mean = 3.0, radius = 0.1}]\n'
                   '[[tests]]\ncase = "general"\n')
    assert main(["exponents", "--config", str(cfg)]) == 1


def test_exponents_without_null_reports_na(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text('clusters = [{mean = 0.0, radius = 0.1}, {mean = 3.0, radius = 0.1}]\n')
    assert main(["exponents", "--config", str(cfg)]) == 0
    assert "no null cluster" in capsys.readouterr().out


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def test_classify_constant_sequences(tmp_path, capsys):
    x = write_csv(tmp_path / "x.csv", ["x"], [[0], [0]])
    ys = write_csv(tmp_path / "ys.csv", ["y1", "y2"], [[0, 5], [0, 5]])
    assert main(["classify", "--x", str(x), "--ys", str(ys)]) == 0
    assert capsys.readouterr().out.strip() == '{"decision":"H1","tau":2}'


def test_classify_sequential_and_two_phase(tmp_path, capsys):
    x = write_csv(tmp_path / "x.csv", ["x", "y1", "y2"], [[0, 0, 5]] * 12)
    assert main(["classify", "--x", str(x), "--test", "sequential", "--lambda", "1", "--N0", "5"]) == 0
    assert json.loads(capsys.readouterr().out) == {"decision": "H1", "tau": 4}
    assert main(["classify", "--x", str(x), "--test", "two_phase", "--lambda", "3", "--n", "4"]) == 0
    assert json.loads(capsys.readouterr().out) == {"decision": "H1", "tau": 8, "phase": "second"}
    assert main(["classify", "--x", str(x), "--test", "sequential", "--lambda", "3", "--N0", "5"]) == 0
    assert json.loads(capsys.readouterr().out) == {"decision": "censored", "tau": 12}


def test_classify_errors(tmp_path):
    one = write_csv(tmp_path / "one.csv", ["x", "y1", "y2"], [[0, 0, 5]])
    assert main(["classify", "--x", str(one)]) == 1
    two = write_csv(tmp_path / "two.csv", ["x", "y1", "y2"], [[0, 0, 5], [0, 0, 5]])
    assert main(["classify", "--x", str(two), "--case", "general"]) == 1
    bad = write_csv(tmp_path / "bad.csv", ["x", "y1", "y2"], [[0, "a", 5], [0, 0, 5]])
    assert main(["classify", "--x", str(bad)]) == 1
    nan = write_csv(tmp_path / "nan.csv", ["x", "y1", "y2"], [[0, "nan", 5], [0, 0, 5]])
    assert main(["classify", "--x", str(nan)]) == 1
    single = write_csv(tmp_path / "single.csv", ["x", "y1"], [[0, 0], [0, 0]])
    assert main(["classify", "--x", str(single)]) == 1
    assert main(["classify", "--x", str(two), "--test", "batch"]) == 1


def test_read_columns_ragged(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("x,y1\n1,2\n3,\n")
    assert read_columns(path) == {"x": [1.0, 3.0], "y1": [2.0]}


def test_module_entry_point(tmp_path):
    x = write_csv(tmp_path / "x.csv", ["x", "y1", "y2"], [[0, 0, 5], [0, 0, 5]])
    proc = subprocess.run([sys.executable, "-m", "mmdclass", "classify", "--x", str(x)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["decision"] == "H1"
