import csv
import io
import math

import numpy as np
import pytest

from oracles import equilateral_star_eigenvalues
from qgheat import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_spectrum_zero_potential(capsys):
    code, out, _ = run(capsys, "spectrum", "--builtin", "interval", "--h", "0.02", "--neigs", "10")
    assert code == 0
    table = rows(out)
    assert table[0] == ["n", "lambda_n", "mu_n"]
    assert len(table) == 11
    assert all(r[1] == r[2] for r in table[1:])
    assert float(table[1][1]) == 0.0


def test_spectrum_constant_shift(capsys):
    code, out, _ = run(
        capsys, "spectrum", "--builtin", "interval", "--potential", "const 1", "--h", "0.02", "--neigs", "10"
    )
    assert code == 0
    for _, lam, mu in rows(out)[1:]:
        assert abs(float(mu) - float(lam) - 1.0) < 1e-9


def test_spectrum_star3_oracle(capsys):
    code, out, _ = run(capsys, "spectrum", "--builtin", "star3", "--h", "0.005", "--neigs", "6")
    lam = np.array([float(r[1]) for r in rows(out)[1:]])
    assert lam[0] == 0.0
    assert np.allclose(lam, equilateral_star_eigenvalues(3, 1.0, 6), rtol=1e-3, atol=0)


def test_output_file_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert cli.main(["sigma", "--builtin", "lasso", "--potential", "cos amp=1 mode=1",
                         "--h", "0.02", "--out", str(p)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_sigma_zero(capsys):
    code, out, err = run(capsys, "sigma", "--builtin", "star3", "--h", "0.02")
    assert code == 0
    assert all(abs(float(r[1])) < 1e-10 for r in rows(out)[1:])
    assert "sigma limit" in err


def test_sigma_constant(capsys):
    code, out, err = run(
        capsys, "sigma", "--builtin", "interval", "--potential", "const 0.5",
        "--h", "0.005", "--tmin", "3e-4", "--tmax", "0.05", "--tpoints", "8",
    )
    assert code == 0
    limit = float(err.split(":")[1].split("+-")[0])
    assert abs(limit - 0.5 / math.sqrt(4 * math.pi)) < 5e-3


def test_check_reports(capsys):
    code, out, _ = run(capsys, "check", "--builtin", "interval", "--h", "0.005",
                       "--potential", "cos amp=1 mode=1")
    assert code == 0
    assert "[FAIL] ambarzumyan" in out and "mu_1" in out
    assert "premain" in out and "not applicable" in out
    assert "sandwich" in out and "[PASS] sandwich" in out


def test_check_zero_passes(capsys):
    code, out, _ = run(capsys, "check", "--builtin", "star3", "--h", "0.01")
    assert "[PASS] ambarzumyan" in out


def test_kernel_closed_form(capsys):
    code, out, _ = run(capsys, "kernel", "--builtin", "interval", "--h", "0.005",
                       "--t", "0.1", "--x", "e1:0.5", "--y", "e1:0.5")
    assert code == 0
    diff = float(out.split("|diff| = ")[1].split(")")[0])
    assert diff < 1e-4
    assert "bracketed          = True" in out


def test_kernel_large_t(capsys):
    code, out, _ = run(capsys, "kernel", "--builtin", "lasso", "--h", "0.02", "--t", "50")
    k0 = float(out.splitlines()[1].split("=")[1])
    assert abs(k0 - 0.5) < 1e-8


def test_graph_file(tmp_path, capsys):
    p = tmp_path / "g.txt"
    p.write_text("vertex a\nvertex b\nedge e1 a b length=2\npotential e1 const 0.25\n")
    code, out, _ = run(capsys, "spectrum", "--graph", str(p), "--h", "0.05", "--neigs", "3")
    assert code == 0
    assert abs(float(rows(out)[2][1]) - (math.pi / 2) ** 2) < 2e-3


def test_ground_and_residual(capsys):
    code, out, err = run(capsys, "ground", "--builtin", "interval", "--h", "0.05",
                         "--potential", "cos amp=1 mode=1", "--spoints", "5")
    assert code == 0 and rows(out)[0] == ["s", "F"] and "concave: True" in err
    code, out, err = run(capsys, "residual", "--builtin", "star3", "--h", "0.02",
                         "--potential", "bump amp=1 center=0.5 width=0.1", "--tmin", "0.005")
    assert code == 0
    assert rows(out)[0] == ["t", "trace0", "traceH", "first_order_term", "rho"]


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum"],
        ["spectrum", "--builtin", "interval", "--h", "-1"],
        ["spectrum", "--builtin", "interval", "--tmin", "1", "--tmax", "0.1"],
        ["spectrum", "--builtin", "interval", "--d", "2"],
        ["spectrum", "--builtin", "interval", "--h", "2"],
        ["spectrum", "--graph", "/nonexistent/graph"],
        ["spectrum", "--builtin", "interval", "--potential", "wave 3"],
        ["kernel", "--builtin", "interval", "--x", "e7:0.1"],
        ["kernel", "--builtin", "interval", "--x", "0.1"],
        ["kernel", "--builtin", "interval", "--h", "0.1", "--t", "0.01"],
    ],
)
def test_validation_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_bad_graph_file_exit_2(tmp_path, capsys):
    p = tmp_path / "g.txt"
    p.write_text("vertex a\nvertex b\nedge e1 a b length=-1\n")
    code, _, err = run(capsys, "spectrum", "--graph", str(p))
    assert code == 2 and "line 3" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["spectrum", "--builtin", "hexagon"])
    assert info.value.code == 2


def test_truncation_exit_3(capsys):
    code, _, err = run(capsys, "sigma", "--builtin", "interval", "--potential", "const 1",
                       "--h", "0.1", "--tmin", "1e-5", "--tmax", "0.1")
    assert code == 3
    assert "numerical failure" in err
