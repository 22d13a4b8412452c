import json

import numpy as np

from densegen import numkernel as nk
from densegen.cli import main
from densegen.generators import casen3_pair
from densegen.words import Word, evaluate_word


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_generate_writes_pair(tmp_path, capsys):
    out = tmp_path / "pair.json"
    code, _ = run(capsys, "generate", "--dim", "3", "--out", str(out))
    assert code == 0
    assert json.loads(out.read_text())["dim"] == 3


def test_combine_json(capsys):
    code, out = run(capsys, "--json", "combine", "--p", "1,1", "--q", "1,1", "--z", "1")
    assert code == 0
    assert json.loads(out)["result"] == [[2.0, 0.0], [2.0, 0.0]]


def test_plan_real_minus(tmp_path, capsys):
    out = tmp_path / "plan.json"
    code, _ = run(capsys, "plan", "--mode", "real-", "--target", "0,0", "--out", str(out))
    assert code == 0
    assert json.loads(out.read_text())["mode"] == "RealMinus"


def test_plan_typed_error(capsys):
    code = main(["plan", "--mode", "real-", "--target", "1,3"])
    assert code == 1
    assert "DegenerateTarget" in capsys.readouterr().err


def write_matrix(path, M):
    path.write_text(json.dumps(nk.matrix_to_json(M)))
    return str(path)


def test_approx_hit_and_miss(tmp_path, capsys):
    p = casen3_pair()
    T = write_matrix(tmp_path / "t.json", evaluate_word(Word.parse("A B B A"), p) + 1e-3)
    code, _ = run(capsys, "approx", "--pair", "real:3", "--target", T, "--eps", "1e-2")
    assert code == 0
    out = tmp_path / "r.json"
    code, _ = run(capsys, "approx", "--pair", "real:3", "--target", T, "--eps", "1e-9",
                  "--budget", "1e3", "--out", str(out))
    assert code == 2
    assert json.loads(out.read_text())["achieved_error"] > 1e-9


def test_upsilon_and_factor(tmp_path, capsys):
    r = np.random.default_rng(0)
    G = r.normal(size=(3, 3))
    g = write_matrix(tmp_path / "g.json", G)
    code, out = run(capsys, "--json", "upsilon", "--matrix", g)
    assert code == 0 and "class" in json.loads(out)
    code, out = run(capsys, "--json", "factor", "--g1", g, "--g2", g)
    assert code == 0 and json.loads(out)["residual"] <= 1e-10


def test_global_flags_before_subcommand(capsys):
    code, out = run(capsys, "--seed", "5", "--json", "check-dependence", "--trials", "3")
    assert code == 0 and json.loads(out)["passed"]


def test_verify_density_bit_identical(tmp_path, capsys):
    args = ["verify-density", "--seed", "42", "--samples", "2", "--witness", "5", "--budget", "1e4"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_transitivity_command(capsys):
    code, out = run(capsys, "--json", "transitivity", "--budget", "1e3")
    assert code in (0, 2)
    assert "distance" in json.loads(out)
