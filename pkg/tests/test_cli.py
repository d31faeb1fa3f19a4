import csv
import json
import subprocess
import sys

import pytest

from v2icpd.cli import main


@pytest.fixture(scope="module")
def dos_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    trace, labels = d / "dos.csv", d / "dos_labels.csv"
    assert main(["simulate", "--attack", "dos", "--duration", "30", "--seed", "3",
                 "--out", str(trace), "--labels", str(labels), "--spec", str(d / "spec.json")]) == 0
    return d, trace, labels


def test_simulate_outputs(dos_files):
    d, trace, labels = dos_files
    rows = trace.read_text().splitlines()
    assert len(rows) > 1
    assert json.loads((d / "spec.json").read_text())["kind"] == "DOS"


def test_detect_then_evaluate(dos_files, capsys):
    d, trace, labels = dos_files
    events, report = d / "events.csv", d / "report.json"
    assert main(["detect", "--algo", "em", "--feature", "mvs", "--trace", str(trace), "--labels", str(labels),
                 "--out", str(events), "--report", str(report), "--repeats", "1"]) == 0
    embedded = json.loads(report.read_text())
    with open(events, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == embedded["samples"]

    capsys.readouterr()
    assert main(["evaluate", "--events", str(events), "--labels", str(labels),
                 "--trace", str(trace), "--feature", "mvs"]) == 0
    scored = json.loads(capsys.readouterr().out)
    assert scored["confusion"] == embedded["confusion"]
    assert scored["accuracy"] == embedded["accuracy"]
    assert scored["wall_time"] is None


def test_detect_with_params_file(dos_files, tmp_path):
    _, trace, _ = dos_files
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"mu1": 10.0, "sigma": 0.5}))
    assert main(["detect", "--algo", "cusum", "--feature", "mvs", "--trace", str(trace), "--params", str(params),
                 "--out", str(tmp_path / "e.csv"), "--repeats", "1"]) == 0


def test_arl(tmp_path):
    out = tmp_path / "arl.json"
    assert main(["arl", "--algo", "cusum", "--trials", "20", "--max-len", "5000", "--out", str(out)]) == 0
    est = json.loads(out.read_text())
    assert est["trials"] == 20 and est["out_of_control_arl"] < est["in_control_arl"]


def test_bench(tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--sizes", "0,50", "--algo", "cusum", "--attack", "imp", "--repeats", "1",
                 "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "attack,detector,n=0,n=50"


@pytest.mark.parametrize(
    "argv",
    [
        ["detect", "--algo", "em", "--feature", "mvs", "--trace", "/nonexistent.csv", "--out", "x.csv"],
        ["evaluate", "--events", "/nonexistent.csv", "--labels", "/nonexistent.csv"],
        ["simulate", "--attack", "dos", "--duration", "-5", "--out", "x.csv"],
    ],
)
def test_input_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_bad_trace_row_exit_2(tmp_path):
    trace = tmp_path / "bad.csv"
    trace.write_text("1.0,1,95.0,-82.0,1.0\n")
    assert main(["detect", "--algo", "cusum", "--feature", "mvs", "--trace", str(trace),
                 "--out", str(tmp_path / "e.csv")]) == 2


def test_label_count_mismatch_exit_2(dos_files, tmp_path):
    d, trace, labels = dos_files
    events = tmp_path / "e.csv"
    main(["detect", "--algo", "cusum", "--feature", "mvs", "--trace", str(trace), "--out", str(events),
          "--repeats", "1"])
    assert main(["evaluate", "--events", str(events), "--labels", str(labels)]) == 2


@pytest.mark.parametrize("argv", [["detect", "--algo", "kalman"], ["bench", "--sizes", "a,b"], []])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "v2icpd", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "simulate" in r.stdout
