import csv

import pytest

from ulo.cli import main


def test_toy_solve(tmp_path, capsys):
    path = str(tmp_path / "tik.json")
    assert main(["gen", "toy", "--which", "tikhonov", "-o", path]) == 0
    assert main(["solve", "--problem", path, "--eps", "0", "--eps-rel", "0", "--start", "0"]) == 0
    out = capsys.readouterr().out
    assert "F*=-3.125\n" in out
    x = [float(v) for v in out.split("x=")[1].split()]
    assert x == pytest.approx([-1.5, -0.25], abs=1e-6)


def test_poplp_prints_both_senses(tmp_path, capsys):
    path = str(tmp_path / "p.json")
    assert main(["gen", "poplp", "--n", "4", "--m", "5", "--p", "3", "-o", path]) == 0
    assert main(["solve", "--problem", path, "--algo", "ram"]) == 0
    assert "original maximisation value" in capsys.readouterr().out


def test_table4_preset(capsys):
    assert main(["simulate", "--preset", "table4", "--starts", "9"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rows = list(csv.DictReader(lines))
    assert len(rows) == 9 and all(float(r["F_hat"]) == 2.0 for r in rows)


def test_simulate_grid(tmp_path, capsys):
    out = str(tmp_path / "grid.csv")
    args = ["simulate", "--n", "15", "--m", "40", "--sigma-act", "0.1", "--sigma-deg", "0.1",
            "--upsilon", "0,5", "--instances", "2", "--starts", "2", "--out", out]
    assert main(args) == 0
    assert (tmp_path / "grid_summary.csv").exists()
    assert capsys.readouterr().out.count("upsilon_param=") == 2


def test_usage_errors(tmp_path):
    assert main(["solve", "--no-such-flag"]) == 2
    assert main(["report", "--in", str(tmp_path), "--out", str(tmp_path / "r")]) == 2
    assert main(["report", "--in", str(tmp_path), "--out", str(tmp_path / "r"), "--f-star", "abc"]) == 2
    assert main(["solve", "--problem", str(tmp_path / "missing.json")]) == 2


def test_es_trace_deterministic(tmp_path):
    prob = str(tmp_path / "p.json")
    main(["gen", "poplp", "--n", "6", "--m", "8", "--p", "3", "-o", prob])
    rows = []
    for k in range(2):
        t = str(tmp_path / f"t{k}.csv")
        assert main(["solve", "--algo", "es", "--problem", prob, "--seed", "4", "--trace", t]) == 0
        with open(t) as fh:
            rows.append([{c: v for c, v in r.items() if c != "t_wall_s"} for r in csv.DictReader(fh)])
    assert rows[0] == rows[1] and rows[0][-1]["kind"] == "Exit"


@pytest.mark.parametrize("kind", ["table4"])
def test_gen_table4(tmp_path, kind):
    path = tmp_path / "t4.json"
    assert main(["gen", kind, "-o", str(path)]) == 0
    assert '"n": 9' in path.read_text()
