import hashlib
import json
import os
import subprocess
import sys

import pytest

from sogppa.cli import DATA_DIR, DEFAULT_LABELS, main
from sogppa.labels import load_labels
from sogppa.sog import AND2, OR2, load_sog, save_sog

ADDER = os.path.join(DATA_DIR, "adder4.json")
SAIF = os.path.join(DATA_DIR, "cpu_w8_r4.saif")
CPU = os.path.join(DATA_DIR, "designs", "cpu_w8_r4.json")


def _subset(n=24):
    return ",".join(sorted(load_labels(DEFAULT_LABELS))[:n])


def _sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


@pytest.fixture(scope="module")
def models(tmp_path_factory):
    out = tmp_path_factory.mktemp("models")
    assert main(["train", "all", "--only", _subset(), "-o", str(out)]) == 0
    return out


def test_lower_then_stats(tmp_path, capsys):
    sog = tmp_path / "adder.sog"
    assert main(["lower", ADDER, "-o", str(sog)]) == 0
    assert main(["stats", str(sog)]) == 0
    out = capsys.readouterr().out
    assert "7 3 7 0 0 0" in out and "registers 0" in out


def test_stats_json_dump(tmp_path):
    p = tmp_path / "s.json"
    assert main(["stats", ADDER, "-o", str(p)]) == 0
    d = json.loads(p.read_text())
    assert d["features"] == {"and": 7, "or": 3, "xor": 7, "not": 0, "mux": 0, "reg": 0}
    assert d["nodes"] == 29 and d["edges"] == 38


def test_check_exhaustive(capsys):
    assert main(["check", ADDER, "--exhaustive"]) == 0
    assert "256 vectors" in capsys.readouterr().out


def test_check_corrupted_sog(tmp_path, capsys):
    sog = tmp_path / "adder.sog"
    main(["lower", ADDER, "-o", str(sog)])
    g = load_sog(sog)
    g.kinds[g.kinds.index(AND2)] = OR2
    g._invalidate()
    bad = tmp_path / "bad.sog"
    save_sog(g, bad)
    assert main(["check", ADDER, "--sog", str(bad), "--exhaustive"]) == 4
    assert "counterexample" in capsys.readouterr().out


def test_usage_and_input_errors(tmp_path):
    assert main(["frobnicate"]) == 1
    assert main(["stats", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["stats", str(bad)]) == 2


def test_area_floor_exit(tmp_path, capsys):
    assert main(["train", "area", "--only", _subset(5), "-o", str(tmp_path)]) == 3
    assert "insufficient designs" in capsys.readouterr().err


def test_deterministic_training(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["train", "path-delay", "--only", _subset(8), "--seed", "5", "-o", str(d)]) == 0
    assert _sha(a / "path_delay.json") == _sha(b / "path_delay.json")


def test_predict_default_and_saif(models, capsys):
    assert main(["predict", CPU, "--models", str(models)]) == 0
    r1 = json.loads(capsys.readouterr().out)
    assert r1["activity_source"] == "default"
    assert main(["predict", CPU, "--models", str(models), "--saif", SAIF]) == 0
    r2 = json.loads(capsys.readouterr().out)
    assert r2["activity_source"] == "saif" and r2["power"] != r1["power"]


def test_predict_layout(models, capsys):
    assert main(["predict", CPU, "--models", str(models), "--layout"]) == 0
    r = json.loads(capsys.readouterr().out)
    assert set(r["placement"]) == {"tns", "wns", "power", "area"}


def test_predict_layout_without_model(models, tmp_path, capsys, caplog):
    for f in os.listdir(models):
        if not f.startswith("layout_"):
            (tmp_path / f).write_bytes((models / f).read_bytes())
    assert main(["predict", CPU, "--models", str(tmp_path), "--layout"]) == 0
    assert "placement" not in json.loads(capsys.readouterr().out)
    assert "no layout model" in caplog.text


def test_predict_csv(models, capsys):
    assert main(["predict", CPU, "--models", str(models), "--format", "csv"]) == 0
    header = capsys.readouterr().out.splitlines()[0].split(",")
    assert "tns" in header and "area" in header


def test_eval_family_split(tmp_path, capsys):
    out = tmp_path / "ev"
    names = sorted(load_labels(DEFAULT_LABELS))
    cpu = [n for n in names if n.startswith("cpu")][:24]
    other = [n for n in names if not n.startswith("cpu")][:6]
    code = main(["eval", "--only", ",".join(cpu + other), "--split", "family:cpu", "-o", str(out),
                 "--timing-budget"])
    assert code == 0
    cap = capsys.readouterr()
    assert cap.out.startswith("task,")
    assert {"tns", "wns", "power", "area"} <= {line.split(",")[0] for line in cap.out.splitlines()[1:]}
    assert "[time]" in cap.err
    for task in ("tns", "area"):
        assert (out / f"scatter_{task}.csv").exists() and (out / f"scatter_{task}.png").exists()
    assert (out / "metrics.csv").exists()


def test_gen_manifest(tmp_path):
    assert main(["gen", "-n", "5", "--seed", "1", "-o", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert len(m["designs"]) == 5 and len({d["seed"] for d in m["designs"]}) == 5
    for d in m["designs"]:
        assert main(["check", str(tmp_path / d["file"]), "--samples", "64"]) == 0


def test_entry_point_help():
    r = subprocess.run([sys.executable, "-m", "sogppa.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "predict" in r.stdout
