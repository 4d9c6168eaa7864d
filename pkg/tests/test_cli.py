import csv
import subprocess
import sys

import pytest

from hmcpflow.cli import main
from hmcpflow.harness import generate_random
from hmcpflow.problem import augment_infeasible, dump_problem, make_lp


@pytest.fixture
def lp_file(tmp_path):
    path = tmp_path / "lp.json"
    path.write_text(dump_problem(make_lp([1.0], [[1.0]], [1.0])))
    return path


def test_solve_optimal(lp_file, tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    assert main(["solve", str(lp_file), "--tp", "0.5", "--traj", str(traj)]) == 0
    out = capsys.readouterr().out
    assert "outcome: optimal" in out and "x*:" in out and "kkt:" in out
    assert "tau:" in out and "kappa:" in out
    rows = list(csv.reader(open(traj)))
    assert rows[0] == ["t", "x_1", "y_1", "tau", "s_1", "v_1", "kappa", "z_norm"]
    assert float(rows[-1][0]) == pytest.approx(0.5)


def test_solve_infeasible_exit_code(tmp_path, capsys):
    path = tmp_path / "inf.json"
    path.write_text(dump_problem(augment_infeasible(generate_random("qp", 5, 2, seed=1))))
    assert main(["solve", str(path)]) == 2
    assert "outcome: infeasible" in capsys.readouterr().out


def test_solve_errors(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"family": "lp", "n": 1}')
    assert main(["solve", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["solve"])


def test_oracle(lp_file, capsys):
    assert main(["oracle", str(lp_file)]) == 0
    out = capsys.readouterr().out
    assert "status: optimal" in out and "objective: 1" in out


def test_bench_infeasible(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    assert main(["bench", "infeasible", "--family", "lp", "--count", "2", "--seed", "3",
                 "--out", str(out)]) == 0
    assert "detection rate 1.00" in capsys.readouterr().out
    assert len(list(csv.reader(open(out)))) == 4


def test_bench_settling(tmp_path, capsys):
    d = tmp_path / "settle"
    assert main(["bench", "settling", "--tp-list", "1,0.5", "--init-list", "3",
                 "--out-dir", str(d)]) == 0
    assert sorted(p.name for p in d.iterdir()) == ["init_sweep.csv", "summary.csv", "tp_sweep.csv"]
    assert "T_p 0.5" in capsys.readouterr().out


def test_bad_float_list(capsys):
    with pytest.raises(SystemExit):
        main(["bench", "settling", "--tp-list", "1,x"])


def test_module_entry_point(lp_file):
    res = subprocess.run([sys.executable, "-m", "hmcpflow", "solve", str(lp_file)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "optimal" in res.stdout
