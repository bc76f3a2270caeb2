import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from orliczgen.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _sections(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    blocks, cur = [], []
    for line in lines:
        if line == "":
            blocks.append(cur)
            cur = []
        else:
            cur.append(line)
    blocks.append(cur)
    return [list(csv.DictReader(io.StringIO("\n".join(b)))) for b in blocks if b]


def test_norm(capsys):
    assert run(capsys, "norm", "--fn", "power:q=2", "--x", "3,4")[:2] == (0, "5\n")
    code, out, _ = run(capsys, "norm", "--fn", "power:q=1.5|normalize", "--x", "1,0,0")
    assert code == 0 and float(out) == pytest.approx(1.0, rel=1e-9)
    assert run(capsys, "norm", "--musielak", "power:q=2;power:q=2", "--x", "3,4")[1] == "5\n"


def test_norm_config_errors(capsys):
    code, _, err = run(capsys, "norm", "--fn", "power:q=1.5|normalze", "--x", "1")
    assert code == 2 and "position 12" in err
    assert run(capsys, "norm", "--fn", "power:q=2", "--x", "1,a")[0] == 2
    assert run(capsys, "norm", "--fn", "power:q=2")[0] == 2
    assert run(capsys, "norm", "--musielak", "power:q=2", "--x", "1,2")[0] == 2


def test_generate_max(capsys):
    code, out, _ = run(capsys, "generate", "max", "--fn", "power:q=2|normalize", "--points", "50")
    assert code == 0
    table, atoms = _sections(out)
    t = np.array([float(r["t"]) for r in table])
    tail = np.array([float(r["tail"]) for r in table])
    np.testing.assert_allclose(tail, np.minimum(1, t**-2.0), rtol=1e-11)
    assert atoms == []


def test_generate_rejects_negative_density(capsys):
    code, _, err = run(capsys, "generate", "lp", "--p", "2", "--fn", "power:q=3|normalize")
    assert code == 3 and "NegativeDensity" in err


def test_generate_p2_smoothed_has_no_atoms(capsys, tmp_path):
    out = tmp_path / "law.csv"
    code, _, _ = run(capsys, "generate", "p2", "--fn", "power:q=1.5|normalize|smooth:c=1.1", "--out", str(out))
    assert code == 0
    table, atoms = _sections(out.read_text())
    assert atoms == [] and len(table) == 200


def test_generate_lp_atom_table(capsys):
    _, out, _ = run(capsys, "generate", "lp", "--p", "2", "--fn", "power:q=1.5|normalize", "--points", "10")
    _, atoms = _sections(out)
    assert float(atoms[0]["mass"]) == pytest.approx(0.75)


def test_verify_roundtrips(capsys):
    code, out, _ = run(capsys, "verify", "roundtrip-max", "--fn", "power:q=1.5|normalize")
    rep = json.loads(out)
    assert code == 0 and rep["pass"] and rep["sup_error"] <= 1e-6
    code, out, _ = run(capsys, "verify", "roundtrip-p", "--p", "2", "--fn", "power:q=1.5|normalize|smooth:c=1.1")
    assert code == 0 and json.loads(out)["sup_error"] <= 1e-4
    assert run(capsys, "verify", "roundtrip-p", "--fn", "power:q=2|normalize")[0] == 2


def test_verify_convolution(capsys):
    args = ["verify", "convolution", "--fnM", "power:q=1.5|normalize|smooth:c=1.1", "--fnN", "power:q=2|normalize"]
    code, out, _ = run(capsys, *args, "--mu", "point:2")
    assert code == 1 and json.loads(out)["residual"] > 0.1
    code, out, _ = run(capsys, *args, "--p", "2")
    assert code == 0 and json.loads(out)["residual"] <= 1e-4


def test_verify_mc_and_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# pareto run\nn = 8\nn_mc = 5000\np = 2\nseed = 3\n")
    csv_path = tmp_path / "rep.csv"
    code, out, _ = run(capsys, "verify", "pareto", "--config", str(cfg), "--csv", str(csv_path))
    rep = json.loads(out)
    assert code == 0 and rep["seed"] == 3 and rep["config"]["n_mc"] == 5000
    assert csv_path.read_text().startswith("label,norm,mc_mean,mc_stderr,ratio")
    # flags override the file
    _, out2, _ = run(capsys, "verify", "pareto", "--config", str(cfg), "--seed", "4")
    assert json.loads(out2)["seed"] == 4
    # a tiny threshold is breached
    assert run(capsys, "verify", "pareto", "--config", str(cfg), "--threshold", "1.0000001")[0] == 1


def test_verify_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("ORLICZ_SEED", "11")
    _, out, _ = run(capsys, "verify", "pareto", "--p", "2", "--n", "4", "--n-mc", "1000")
    assert json.loads(out)["seed"] == 11


def test_verify_embedding_hypothesis_failure(capsys):
    code, _, err = run(capsys, "verify", "embedding", "--fn", "power:q=3|normalize", "--n", "4", "--n-mc", "1000")
    assert code == 3 and "2-concave" in err


def test_verify_khintchine(capsys):
    code, out, _ = run(capsys, "verify", "khintchine", "--x", "1,1")
    assert code == 0 and json.loads(out)["ratios"]["x"] == pytest.approx(0.707106781187)


def test_bad_config_values(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = many\n")
    assert run(capsys, "verify", "pareto", "--config", str(cfg), "--p", "2")[0] == 2
    assert run(capsys, "verify", "pareto", "--p", "0.5")[0] == 2
    assert run(capsys, "verify", "pareto", "--p", "2", "--n-mc", "10")[0] == 2
    assert run(capsys, "verify", "max", "--config", str(tmp_path / "missing.cfg"), "--fn", "power:q=2")[0] == 2


def test_smooth(capsys):
    code, out, _ = run(capsys, "smooth", "--fn", "power:q=1.5|normalize", "--c", "1.1", "--points", "512")
    assert code == 0
    header = [l for l in out.splitlines() if l.startswith("#")]
    assert any(l.startswith("# delta=") for l in header)
    rows = _sections(out)[0]
    M = np.array([float(r["M"]) for r in rows])
    N = np.array([float(r["N"]) for r in rows])
    assert float(rows[-1]["N2"]) == 0.0
    assert np.all(N <= M * (1 + 1e-11)) and np.all(M <= 1.1 * N * (1 + 1e-11))
    assert run(capsys, "smooth", "--fn", "power:q=1.5")[0] == 2


def test_module_entry_point_is_reproducible():
    cmd = [sys.executable, "-m", "orliczgen", "verify", "max", "--fn", "power:q=2|normalize",
           "--n", "4", "--n-mc", "2000", "--seed", "5"]
    a = subprocess.run(cmd, capture_output=True, text=True)
    b = subprocess.run(cmd, capture_output=True, text=True)
    assert a.returncode == 0 and a.stdout == b.stdout


def test_verify_inline_suite(capsys):
    code, out, _ = run(capsys, "verify", "pareto", "--p", "2", "--suite", "a=1,0;b=1,1", "--n-mc", "1000")
    rep = json.loads(out)
    assert code == 0 and [e["label"] for e in rep["entries"]] == ["a", "b"]
    assert rep["config"]["n"] == 2
