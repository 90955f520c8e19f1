import csv
import json

import pytest

from twinloops.cli import main


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_invariants_t1(capsys, tmp_path):
    path = tmp_path / "t1.json"
    code, _, _ = run(capsys, "invariants", "compute", "--family", "t", "--i", "1", "--json", str(path))
    assert code == 0
    data = json.loads(path.read_text())
    assert data["w2_text"] in ("x^2", "-x^2")
    assert {"t", "z1", "z2", "sign", "k"} <= set(data["classes"][0])
    assert data["certification"]["swap_checks_passed"]
    manifest = json.loads((tmp_path / "t1.json.manifest.json").read_text())
    assert manifest["command"] == "invariants compute" and "wall_time" in manifest


def test_invariants_spin(capsys):
    code, out, err = run(capsys, "invariants", "compute", "--family", "spin", "--i", "1")
    assert code == 0
    data = json.loads(out)
    assert data["w1"] == 1 and data["w2_text"] == "0"
    assert json.loads(err)["command"] == "invariants compute"


def test_usage_errors(capsys):
    assert run(capsys, "invariants", "compute", "--family", "nope", "--i", "1")[0] == 1
    assert run(capsys, "invariants", "compute", "--family", "t")[0] == 1
    assert run(capsys, "invariants", "compute", "--family", "t", "--i", "99")[0] == 1
    assert run(capsys, "presentation", "m0", "--n", "1,2", "--signs", "+,?")[0] == 1


def test_certification_failure_exit_code(capsys):
    code, _, err = run(capsys, "invariants", "compute", "--family", "t", "--i", "1", "--det-floor", "1.0")
    assert code == 2 and "NonTransverse" in err


def test_export_import_and_format_error(capsys, tmp_path):
    out = tmp_path / "tb.txt"
    assert run(capsys, "families", "export", "--family", "tbar", "--i", "2", "--out", str(out))[0] == 0
    code, stdout, _ = run(capsys, "invariants", "compute", "--family", "import", "--path", str(out))
    assert code == 0 and json.loads(stdout)["w2_text"] in ("2*x^2", "-2*x^2")
    bad = tmp_path / "bad.txt"
    bad.write_text(out.read_text()[:5000])
    assert run(capsys, "theorem", "--N", "1", "--path", str(bad))[0] == 3
    assert run(capsys, "invariants", "compute", "--family", "import", "--path", str(tmp_path / "missing"))[0] == 3


def test_collisions_dump(capsys, tmp_path):
    path = tmp_path / "c.csv"
    assert run(capsys, "collisions", "dump", "--family", "tbar", "--i", "3", "--csv", str(path))[0] == 0
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 6
    assert sum(int(r["sign"]) for r in rows if abs(int(r["k"])) >= 2) in (3, -3)


@pytest.mark.parametrize("family,i", [("tbar", 3), ("spin", 0), ("t", 2)])
def test_slice_profile(capsys, tmp_path, family, i):
    path = tmp_path / "s.csv"
    assert run(capsys, "slices", "profile", "--family", family, "--i", str(i), "--csv", str(path))[0] == 0
    rows = list(csv.DictReader(path.open()))
    by_t = {}
    for r in rows:
        assert int(r["sign"]) in (1, -1)
        by_t.setdefault(r["t"], []).append(int(r["sign"]))
    assert len(by_t) == 64
    if family == "tbar":
        assert all(sum(v) == 1 for v in by_t.values())
    if family == "spin":
        assert all(v == [1] for v in by_t.values())


def test_presentation_m0(capsys):
    code, out, _ = run(capsys, "presentation", "m0", "--n", "1,2,3", "--signs", "+,-,+")
    data = json.loads(out)
    assert code == 0 and data["verdict"] == "quotient of ℤ/2"
    assert set(data["invariant_factors"]) <= {1, 2}


def test_theorem_n1(capsys):
    code, out, _ = run(capsys, "theorem", "--N", "1")
    assert code == 0 and json.loads(out)["verdict"] == "quotient of ℤ/2"


def test_theorem_rejects_large_N(capsys):
    assert run(capsys, "theorem", "--N", "9")[0] == 1
