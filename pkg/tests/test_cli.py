import csv
import json
import math
import os

import pytest

from magspec.cli import main

FLAT = """scenarios:
  - name: flat
    geometry: {type: flat_torus, resolution: 32}
    potential:
      A: {kind: constant, components: [1.5707963267948966, 0.0]}
      q: 1.0
    solver: {k: 4, seed: 3}
    checks: [flat_torus_equality, lambda1_general, diamagnetic]
"""


def write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_verify_exit_zero_and_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["verify", "--config", write(tmp_path, FLAT), "--out-dir", str(out)]) == 0
    reps = json.loads((out / "flat.reports.json").read_text())
    eq = next(r for r in reps if r["name"] == "flat_torus_equality")
    assert eq["holds"] and abs(eq["margin"]) < 1e-12
    rows = list(csv.reader((out / "flat.spectrum.csv").open()))
    assert rows[0] == ["index", "eigenvalue", "residual"] and len(rows) == 5


def test_summary_numbers_appear_in_json(tmp_path):
    out = tmp_path / "out"
    main(["verify", "--config", write(tmp_path, FLAT), "--out-dir", str(out)])
    reps = json.loads((out / "flat.reports.json").read_text())
    rows = list(csv.DictReader((out / "summary.csv").open()))
    assert len(rows) == len(reps)
    for row, rep in zip(rows, reps):
        for key in ("lhs", "rhs", "margin", "tol"):
            assert float(row[key]) == rep[key]


def test_outputs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, FLAT)
    a, b = tmp_path / "a", tmp_path / "b"
    main(["verify", "--config", cfg, "--out-dir", str(a)])
    main(["verify", "--config", cfg, "--out-dir", str(b), "--jobs", "1"])
    for name in sorted(os.listdir(a)):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_corrupt_flag_exits_two(tmp_path):
    assert main(["verify", "--config", write(tmp_path, FLAT), "--out-dir", str(tmp_path / "o"), "--selftest-corrupt"]) == 2


def test_exact_verb(tmp_path):
    out = tmp_path / "e"
    assert main(["exact", "--config", write(tmp_path, FLAT), "--out-dir", str(out), "--k", "3"]) == 0
    rows = list(csv.reader((out / "flat.spectrum.csv").open()))
    assert float(rows[1][1]) == pytest.approx(math.pi**2 / 4 + 1)


def test_solve_verb(tmp_path):
    assert main(["solve", "--config", write(tmp_path, FLAT), "--out-dir", str(tmp_path / "s")]) == 0
    assert json.loads((tmp_path / "s" / "flat.reports.json").read_text()) == []


def test_input_errors_exit_one(tmp_path, capsys):
    g2 = "scenarios:\n  - name: g\n    geometry: {type: surface, genus: 2}\n"
    assert main(["verify", "--config", write(tmp_path, g2), "--out-dir", str(tmp_path)]) == 1
    assert "unsupported" in capsys.readouterr().err
    assert main(["verify", "--config", write(tmp_path, "scenarios: [\n", "m.yaml"), "--out-dir", str(tmp_path)]) == 1
    assert main(["verify", "--config", str(tmp_path / "missing.yaml")]) == 1


def test_exact_rejects_non_flat(tmp_path):
    cfg = "scenarios:\n  - name: s\n    geometry: {type: sphere, subdiv: 1}\n"
    assert main(["exact", "--config", write(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 1


SWEEP = """scenarios:
  - name: q
    geometry: {type: flat_torus, resolution: 16}
    potential:
      A: {kind: constant, components: [1.0, 0.5]}
      q: 0.0
    solver: {k: 2}
sweep:
  param: potential.q
"""


def test_sweep_q_is_affine_with_unit_slope(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", write(tmp_path, SWEEP), "--out-dir", str(out), "--values=-1,0,2.5"]) == 0
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    lam = [float(r["lambda_1"]) for r in rows]
    q = [float(r["parameter"]) for r in rows]
    for i in (1, 2):
        assert (lam[i] - lam[0]) / (q[i] - q[0]) == pytest.approx(1.0, abs=1e-9)


def test_sweep_empty_range_gives_header_only(tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", write(tmp_path, SWEEP), "--out-dir", str(out), "--range", "1", "0", "0.1"]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines == ["parameter,lambda_1,lambda_2,gamma,closed_bound,exact_lambda_1"]


def test_usage_error_exits_one():
    assert main(["verify", "--k", "notanumber"]) == 1


def test_bundled_selftest(tmp_path):
    assert main(["selftest", "--out-dir", str(tmp_path / "st")]) == 0
