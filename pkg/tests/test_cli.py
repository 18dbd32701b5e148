import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from spinmix.cli import (FULL_COLUMNS, REDUCED_COLUMNS, ZEEMAN_COLUMNS, CROSSING_COLUMNS,
                         config_hash, main, read_csv, resolve_config)
from spinmix.zeeman import load_constants

GOLDEN = Path(__file__).parent / "golden"


def run(*args):
    return main([str(a) for a in args])


def header_columns(path):
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    return lines[0].split(",")


def test_golden_column_schemas():
    golden = json.loads((GOLDEN / "columns.json").read_text())
    assert golden == {"reduced-sweep": REDUCED_COLUMNS, "full-solve": FULL_COLUMNS,
                      "zeeman": ZEEMAN_COLUMNS, "crossings": CROSSING_COLUMNS,
                      "profile": ["k", "weight", "amplitude"]}


def test_reduced_sweep_outputs(tmp_path):
    out = tmp_path / "r"
    assert run("reduced-sweep", "--N", 100, "--gamma2", -1, 0, "--profiles", 0, "--out", out) == 0
    meta, rows = read_csv(out / "sweep.csv")
    assert header_columns(out / "sweep.csv") == REDUCED_COLUMNS
    assert meta[0].startswith("spinmix ") and meta[1] == "command: reduced-sweep"
    assert meta[2].startswith("config_sha256: ") and len(meta[2].split()[1]) == 64
    cfg = json.loads(meta[3][len("config: "):])
    assert cfg["N"] == 100 and cfg["gamma2"] == [-1.0, 0.0]
    coh, uni = rows
    for m in ("A0", "A-1", "B0", "B+1"):
        assert float(coh[f"n_mean_{m}"]) == pytest.approx(50, abs=1e-6)
    assert float(coh["n_fluct_A0"]) == pytest.approx(4.218163, abs=1e-5)
    assert float(uni["n_fluct_A0"]) == pytest.approx(math.sqrt(850), rel=1e-9)
    assert float(uni["entropy_norm"]) == pytest.approx(1.0, abs=1e-9)
    assert uni["classification"] == "uniform" and uni["error"] == ""
    pmeta, prof = read_csv(out / "profile_gamma2_0.0.csv")
    assert len(prof) == 101 and pmeta[-1] == "gamma2: 0.0"
    assert float(prof[7]["weight"]) == pytest.approx(1 / 101, abs=1e-9)


def test_outputs_bit_reproducible(tmp_path):
    for d in ("a", "b"):
        assert run("reduced-sweep", "--N", 20, "--gamma2-range", -1, 0.3, 7, "--jobs", 2,
                   "--out", tmp_path / d) == 0
    assert (tmp_path / "a/sweep.csv").read_bytes() == (tmp_path / "b/sweep.csv").read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 10, "gamma2": [0.0], "solver": {"method": "dense"}}))
    assert run("reduced-sweep", "--config", cfg, "--N", 12, "--out", tmp_path / "o") == 0
    meta, rows = read_csv(tmp_path / "o/sweep.csv")
    resolved = json.loads(meta[3][len("config: "):])
    assert resolved["N"] == 12 and resolved["solver"] == {"method": "dense"}
    assert float(rows[0]["n_mean_A0"]) == pytest.approx(6.0)


def test_config_hash_ignores_output_location():
    a = resolve_config("zeeman", {}, {"out": "x"})
    b = resolve_config("zeeman", {}, {"out": "y"})
    c = resolve_config("zeeman", {}, {"B_max": 2.0})
    assert config_hash(a) == config_hash(b) != config_hash(c)


@pytest.mark.parametrize("cfg", [{"gamma2": []}, {"gamma2": [0.0], "bogus": 1},
                                 {"gamma2": [0.0], "solver": {"nope": 1}},
                                 {"gamma2": [0.0], "N": 3.5}, {"N": 10}])
def test_reduced_sweep_usage_errors(tmp_path, cfg, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert run("reduced-sweep", "--config", p, "--out", tmp_path / "o") == 2
    assert "error" in capsys.readouterr().err


def test_odd_n_rejected_before_compute(tmp_path):
    assert run("reduced-sweep", "--N", 3, "--gamma2", 0, "--out", tmp_path) == 2
    assert not (tmp_path / "sweep.csv").exists()


def test_invalid_json_and_missing_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    assert run("zeeman", "--config", p) == 2
    assert run("zeeman", "--config", tmp_path / "missing.json") == 1


def test_full_solve_zero_field(tmp_path):
    assert run("full-solve", "--N1", 12, "--N2", 12, "--out", tmp_path) == 0
    _, rows = read_csv(tmp_path / "full.csv")
    r = rows[0]
    assert header_columns(tmp_path / "full.csv") == FULL_COLUMNS
    for m in ("A+1", "A0", "A-1"):
        assert float(r[f"n_mean_{m}"]) == pytest.approx(4.0, rel=1e-9)
    assert float(r["n_mean_B0"]) / 12 == pytest.approx(0.5, rel=0.05)
    assert float(r["n_mean_B+1"]) / 12 == pytest.approx(0.25, rel=0.05)
    assert float(r["B_gauss"]) == 0.0 and float(r["p1"]) == 0.0


def test_full_solve_resonance_preset(tmp_path):
    assert run("full-solve", "--N1", 6, "--N2", 6, "--field", "resonance", "--c12b", 0, 0.5,
               "--out", tmp_path) == 0
    _, rows = read_csv(tmp_path / "full.csv")
    assert [float(r["c12b"]) for r in rows] == [0.0, 0.5]
    assert all(float(r["B_gauss"]) == 0.97 for r in rows)


def test_full_solve_guard(tmp_path, capsys):
    assert run("full-solve", "--N1", 25, "--N2", 25, "--out", tmp_path) == 2
    assert "--allow-large" in capsys.readouterr().err


def test_zeeman_outputs(tmp_path, capsys):
    assert run("zeeman", "--out", tmp_path) == 0
    _, rows = read_csv(tmp_path / "detunings.csv")
    assert len(rows) == 3001 and header_columns(tmp_path / "detunings.csv") == ZEEMAN_COLUMNS
    assert float(rows[0]["dE4"]) == 0.0
    _, cross = read_csv(tmp_path / "crossings.csv")
    found = {int(c["process"]): float(c["B_gauss"]) for c in cross}
    assert found.keys() == {1, 3}
    assert found[3] == pytest.approx(0.9916, abs=1e-3) and found[1] == pytest.approx(1.6913, abs=1e-3)
    assert "dE3 crosses zero" in capsys.readouterr().out


def test_zeeman_ranges(tmp_path):
    assert run("zeeman", "--B-min", 2, "--B-max", 3, "--out", tmp_path) == 0
    _, cross = read_csv(tmp_path / "crossings.csv")
    assert cross == []
    assert run("zeeman", "--B-min", 1, "--B-max", 1, "--out", tmp_path) == 2


def test_classify_and_constants(tmp_path, capsys):
    run("reduced-sweep", "--N", 20, "--gamma2", 0.1, "--profiles", "all", "--out", tmp_path)
    capsys.readouterr()
    assert run("classify", tmp_path / "profile_gamma2_0.1.csv") == 0
    assert capsys.readouterr().out.strip() == "bimodal"
    bare = tmp_path / "flat.txt"
    bare.write_text("\n".join(["0.2"] * 5))
    assert run("classify", bare) == 0
    assert capsys.readouterr().out.strip() == "uniform"
    bare.write_text("0.5\n0.7\n")
    assert run("classify", bare) == 2
    assert run("constants") == 0
    assert json.loads(capsys.readouterr().out) == load_constants()


def test_plot_written(tmp_path):
    pytest.importorskip("matplotlib")
    assert run("zeeman", "--B-points", 31, "--plot", "--out", tmp_path) == 0
    assert (tmp_path / "detunings.svg").read_text().lstrip().startswith("<?xml")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "spinmix", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("spinmix ")
    bad = subprocess.run([sys.executable, "-m", "spinmix", "nosuch"], capture_output=True, text=True)
    assert bad.returncode == 2
