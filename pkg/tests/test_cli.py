import json
import math

import pytest

from delidx import cli
from delidx.errors import NumericError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_profile_cylinder_summary(capsys):
    code, out, _ = run(capsys, "profile", "--mu", "0.25")
    assert code == 0
    s = json.loads(out)
    assert s["a_minus"] == s["a_plus"] == 0.5
    assert s["period"] == pytest.approx(math.pi, abs=1e-14)
    assert (s["zeta1"], s["zeta2"]) == pytest.approx((math.pi / 4, 3 * math.pi / 4))


def test_profile_csv_and_summary_files(capsys, tmp_path):
    out = tmp_path / "prof.csv"
    code, _, _ = run(capsys, "profile", "--mu", "0.15", "--samples", "128", "--format", "csv", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,f,fprime"
    s = json.loads(out.with_suffix(".json").read_text())
    assert s["sup_B2V"] == pytest.approx(1.4, abs=1e-9)


def test_index_dirichlet_block(capsys):
    code, out, _ = run(capsys, "index", "--mu", "0.15", "--block", "B", "--l", "4")
    rep = json.loads(out)
    assert code == 0
    assert rep["total_index"] == 3
    assert rep["checks"]["prop42"] == "pass"


def test_index_csv_mu_list(capsys):
    code, out, _ = run(capsys, "index", "--mu", "0.25,0.15", "--block", "C", "--l", "3", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "mu,k,mult,neg,zeros,lambda_min"
    first = lines[1].split(",")
    assert (float(first[0]), int(first[1]), int(first[3])) == (0.25, 0, 6)
    assert {float(r.split(",")[0]) for r in lines[1:]} == {0.25, 0.15}


def test_hyperbolic_requires_H_above_one(capsys):
    code, _, err = run(capsys, "profile", "--space", "hyperbolic", "--H", "1.0", "--mu", "0.1")
    assert code == 2
    assert "H must exceed 1" in err


@pytest.mark.parametrize("argv", [
    ("index", "--block", "slab"),
    ("profile", "--mu", "1e-6"),
    ("profile", "--mu", "0.3"),
    ("profile", "--n", "1"),
    ("index", "--l", "0"),
    ("profile", "--samples", "16"),
    ("profile", "--bogus"),
    ("verify", "--only", "nosuch"),
])
def test_invalid_input_exits_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_config_file_and_override(capsys, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# block setup\nmu = 0.15\nblock = B\nl = 3\n")
    code, out, _ = run(capsys, "index", "--config", str(conf))
    assert code == 0 and json.loads(out)["total_index"] == 2
    code, out, _ = run(capsys, "index", "--config", str(conf), "--l", "5")
    assert json.loads(out)["total_index"] == 4
    conf.write_text("colour = red\n")
    assert run(capsys, "index", "--config", str(conf))[0] == 2


def test_output_is_deterministic(capsys):
    argv = ("index", "--mu", "0.1,0.2", "--block", "C", "--l", "2")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--jobs", "2")
    assert a == b


def test_strict_exit_on_failed_check(capsys, monkeypatch):
    real = cli.block_index

    def broken(block, settings):
        rep = real(block, settings)
        rep.checks["prop42"] = "fail"
        return rep

    monkeypatch.setattr(cli, "block_index", broken)
    assert run(capsys, "index", "--mu", "0.15", "--l", "2")[0] == 0
    assert run(capsys, "index", "--mu", "0.15", "--l", "2", "--strict")[0] == 1


def test_numeric_failure_exits_3(capsys, monkeypatch):
    def fail(block, settings):
        raise NumericError("refinement did not settle", residual=0.1)

    monkeypatch.setattr(cli, "block_index", fail)
    code, _, err = run(capsys, "index", "--mu", "0.15")
    assert code == 3 and "did not settle" in err


def test_growth_two_ends(capsys, tmp_path):
    out = tmp_path / "g.csv"
    code, _, _ = run(capsys, "growth", "--mu", "0.15,0.24", "--periods", "20", "--format", "csv", "--out", str(out))
    assert code == 0
    assert out.read_text().splitlines()[0] == "X,index_dirichlet,index_neumann"
    s = json.loads(out.with_suffix(".json").read_text())
    assert s["num_ends"] == 2
    assert s["rel_err"] <= 0.05


def test_verify_only_and_seed(capsys, tmp_path):
    out = tmp_path / "v.json"
    code, text, _ = run(capsys, "verify", "--only", "oracle,period", "--seed", "3", "--out", str(out))
    assert code == 0
    assert text.count("PASS") == 2 and "all 2 criteria passed" in text
    first = json.loads(out.read_text())
    run(capsys, "verify", "--only", "oracle,period", "--seed", "3", "--out", str(out))
    assert json.loads(out.read_text()) == first
