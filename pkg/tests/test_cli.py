import csv
import json
import subprocess
import sys

import pytest

from polydbar.cli import main



def test_list_cases(capsys):
    assert main(["list-cases", "--n", "1"]) == 0
    out = capsys.readouterr().out
    assert "zero-n1" in out and "mono-n2" not in out


def test_verify_small(tmp_path):
    out = tmp_path / "r"
    assert main(["verify", "--case", "mono-n1-mix", "--case", "zero-n2", "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["passed"] and doc["seed"] == 0
    assert {"n": 2, "r": 1, "sign": 1} in doc["henkin_signs"]
    header = (out / "report.csv").read_text().splitlines()[0]
    assert header == "check_id,case_id,n,residual,tolerance,passed"
    assert (out / "timings.csv").read_text().startswith("check_id,case_id,n,runtime_ms")


def test_verify_deterministic(tmp_path):
    args = ["verify", "--case", "mono-n2-conj2", "--case", "rough-a0.5", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("report.json", "report.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_lowered_tolerance_fails(tmp_path):
    assert main(["verify", "--case", "mono-n1-mix", "--tolerance", "1e-15", "--out", str(tmp_path)]) == 1


def test_verify_bad_case(tmp_path):
    assert main(["verify", "--case", "no-such-case", "--out", str(tmp_path)]) == 2


def test_config_file_and_schema(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"cases": ["mono-n1-conj"], "seed": 3, "grid": {"radial": 16, "angular": 32}}))
    assert main(["verify", "--config", str(good), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["seed"] == 3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {"angular": 33}}))
    assert main(["verify", "--config", str(bad), "--out", str(tmp_path)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"colour": "red"}))
    assert main(["verify", "--config", str(unknown), "--out", str(tmp_path)]) == 2


def test_torus_guard_rejected_before_work(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"cases": ["mono-n3-conj3"], "grid": {"torus_m": 1000}}))
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_solve(tmp_path, capsys):
    pts = tmp_path / "p.csv"
    pts.write_text("# z0, z1\n0.2,0.3\n")
    assert main(["solve", "--case", "mono-n2-dz1", "--points", str(pts), "--henkin", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "solve.csv").open()))
    assert [r["method"] for r in rows] == ["T", "H"]
    for r in rows:
        assert abs(float(r["value_re"]) - 0.2) < 1e-10 and abs(float(r["value_im"])) < 1e-10


def test_solve_empty_and_exterior(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert main(["solve", "--case", "mono-n2-dz1", "--points", str(empty), "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "solve.csv").read_text().splitlines()) == 1
    ext = tmp_path / "x.csv"
    ext.write_text("0.2,0.3\n1.5,0\n")
    assert main(["solve", "--case", "mono-n2-dz1", "--points", str(ext), "--out", str(tmp_path)]) == 1
    rows = list(csv.DictReader((tmp_path / "solve.csv").open()))
    assert rows[0]["status"] == "ok" and rows[1]["status"] != "ok"


def test_solve_poly_file(tmp_path):
    poly = tmp_path / "u.txt"
    poly.write_text("(0 1 | 0 1) 1 0\n")
    pts = tmp_path / "p.csv"
    pts.write_text("0.7,0.3\n")
    assert main(["solve", "--case", f"poly:{poly}", "--points", str(pts), "--out", str(tmp_path)]) == 0
    row = next(csv.DictReader((tmp_path / "solve.csv").open()))
    assert abs(float(row["value_re"]) - 0.21) < 1e-12


def test_holder(tmp_path):
    assert main(["holder", "--case", "rough-a0.5", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "holder.json").read_text())
    est = doc["estimates"][0]
    assert 0.45 <= est["Tg"]["alpha_hat"] <= 0.6
    assert (tmp_path / "holder_bins.csv").read_text().startswith("case_id,function,scale,sup_delta")
    assert main(["holder", "--case", "zero-n2", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "holder.json").read_text())["estimates"][0]["Tg"]["degenerate"]


def test_calibrate(tmp_path, capsys):
    assert main(["calibrate", "--n", "2", "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "signs.json").read_text())["henkin_signs"]
    assert sorted((r["n"], r["r"]) for r in rows) == [(2, 0), (2, 1)]
    assert main(["calibrate", "--n", "1", "--out", str(tmp_path)]) == 0
    assert len(json.loads((tmp_path / "signs.json").read_text())["henkin_signs"]) == 1
    assert main(["calibrate", "--n", "2", "--case", "zero-n2", "--out", str(tmp_path)]) == 1
    assert "more than one sign table" in capsys.readouterr().err


def test_convergence(tmp_path):
    assert main(["convergence", "--case", "mono-n2-conj2", "--resolutions", "16,32,64",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "convergence-mono-n2-conj2.csv").read_text().splitlines()
    assert lines[0] == "resolution,error,fitted_order" and len(lines) == 4


def test_bad_grid_flag():
    with pytest.raises(SystemExit) as info:
        main(["verify", "--grid", "8"])
    assert info.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "polydbar", "list-cases", "--n", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "zero-n3" in proc.stdout
