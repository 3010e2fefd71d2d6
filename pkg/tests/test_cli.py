import json
import math
import subprocess
import sys

import pytest

from isingchain.cli import main, parse_angle, parse_grid


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("text,value", [("90deg", math.pi / 2), ("0.5pi", math.pi / 2),
                                        ("pi/2", math.pi / 2), ("pi/4", math.pi / 4),
                                        ("1.2rad", 1.2), ("0.3", 0.3), ("45 deg", math.pi / 4),
                                        ("1e-1", 0.1)])
def test_parse_angle(text, value):
    assert parse_angle(text) == pytest.approx(value, rel=1e-15)


def test_parse_angle_snaps_right_angle():
    assert parse_angle("90deg") == math.pi / 2
    assert parse_angle("pi/2") == math.pi / 2


@pytest.mark.parametrize("text", ["", "deg", "abc", "1/0", "pi/0", "5gon"])
def test_parse_angle_rejects(text):
    with pytest.raises(Exception):
        parse_angle(text)


def test_parse_grid():
    assert parse_grid("1,2,3", float) == [1.0, 2.0, 3.0]
    g = parse_grid("0:pi/2:3", parse_angle)
    assert g == [0.0, pytest.approx(math.pi / 4), math.pi / 2]


def test_solve_k1(capsys, tmp_path):
    code, out, _ = _run(capsys, "solve", "--k", "1", "--beta", "90deg", "--out-dir", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["duration"] == pytest.approx(2.72, abs=0.01)
    solution = json.loads((tmp_path / "solution.json").read_text())
    assert solution["duration"] == pytest.approx(2.72, abs=0.01)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["fidelity"] >= 1 - 1e-6
    assert (tmp_path / "pulse.csv").read_text().startswith("t,u,control_index\n")


def test_solve_trivial_and_k2(capsys):
    code, out, _ = _run(capsys, "solve", "--k", "1", "--beta", "0deg")
    assert code == 0 and json.loads(out)["duration"] == pytest.approx(math.pi / 2, abs=1e-8)
    code, out, _ = _run(capsys, "solve", "--k", "2", "--beta", "45deg")
    assert code == 0 and json.loads(out)["fidelity"] >= 1 - 1e-6


def test_solve_is_deterministic(capsys, tmp_path):
    for name in ("a", "b"):
        assert _run(capsys, "solve", "--k", "2", "--alpha", "0.3", "--beta", "0.9",
                    "--out-dir", str(tmp_path / name))[0] == 0
    for f in ("solution.json", "pulse.csv", "report.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


@pytest.mark.parametrize("argv", [["solve", "--k", "-1"], ["solve", "--k", "1", "--beta", "100deg"],
                                  ["solve"], ["sweep", "--kind", "bogus"]])
def test_usage_errors_exit_2(capsys, argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_validate_roundtrip_and_zeroed(capsys, tmp_path):
    assert _run(capsys, "solve", "--k", "1", "--out-dir", str(tmp_path))[0] == 0
    code, out, _ = _run(capsys, "validate", str(tmp_path / "pulse.csv"), "--k", "1")
    assert code == 0
    assert json.loads(out)["fidelity"] >= 1 - 1e-6
    lines = (tmp_path / "pulse.csv").read_text().splitlines()
    zeroed = [lines[0]] + [f"{l.split(',')[0]},0,1" for l in lines[1:]]
    (tmp_path / "zero.csv").write_text("\n".join(zeroed) + "\n")
    code, out, _ = _run(capsys, "validate", str(tmp_path / "zero.csv"), "--k", "1")
    assert code == 1
    assert abs(json.loads(out)["fidelity"]) <= 1e-6


def test_validate_parse_error_has_line(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,u,control_index\n0,1,1\n0.1,oops,1\n")
    code, _, err = _run(capsys, "validate", str(bad), "--k", "1")
    assert code == 2
    assert "line 3" in err


def test_export_conventional_validates(capsys, tmp_path):
    path = tmp_path / "conv.csv"
    assert _run(capsys, "export", "conventional", "--k", "2", "-o", str(path))[0] == 0
    code, out, _ = _run(capsys, "validate", str(path), "--k", "2")
    assert code == 0 and json.loads(out)["fidelity"] >= 1 - 1e-9


def test_export_chain_conventional(capsys, tmp_path):
    chain = tmp_path / "chain.json"
    chain.write_text('{"couplings_hz": [91, 15, 55]}')
    path = tmp_path / "conv.csv"
    assert _run(capsys, "export", "conventional", "--chain", str(chain), "-o", str(path))[0] == 0
    code, out, _ = _run(capsys, "validate", str(path), "--chain", str(chain))
    assert code == 0 and json.loads(out)["fidelity"] >= 1 - 1e-9


def test_sweep_time_vs_k(capsys):
    code, out, _ = _run(capsys, "sweep", "--kind", "time_vs_k", "--k", "1")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "k,T,error"
    k, t, err = row.split(",")
    assert float(t) == pytest.approx(2.72, abs=0.01) and err == ""


def test_sweep_ratio_vs_k_symmetry(capsys):
    code, out, _ = _run(capsys, "sweep", "--kind", "ratio_vs_k", "--k", "0.5,2")
    assert code == 0
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    etas = [float(r[3]) for r in rows]
    assert all(e <= 1.0 for e in etas)
    assert etas[0] == pytest.approx(etas[1], abs=1e-3)


def test_sweep_alpha_beta_grid(capsys, tmp_path):
    path = tmp_path / "ab.csv"
    code, _, _ = _run(capsys, "sweep", "--kind", "time_vs_alpha_beta", "--k", "2",
                      "--alpha", "0,30deg", "--beta", "0,pi/4,pi/2", "-o", str(path))
    assert code == 0
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "k,alpha,beta,T,error"
    assert len(rows) == 1 + 2 * 3
    first = rows[1].split(",")
    assert float(first[3]) == pytest.approx(math.pi / 2, abs=1e-8)


def test_sweep_parallel_matches_serial(capsys):
    serial = _run(capsys, "sweep", "--kind", "time_vs_k_beta", "--k", "2,3", "--beta", "0.2,0.4")[1]
    parallel = _run(capsys, "sweep", "--kind", "time_vs_k_beta", "--k", "2,3", "--beta", "0.2,0.4",
                    "--jobs", "2")[1]
    assert serial == parallel


def test_sweep_needs_chain_for_objective(capsys):
    code, _, err = _run(capsys, "sweep", "--kind", "objective_vs_gamma", "--gamma", "0.1")
    assert code == 2


def test_plan_two_and_three_spins(capsys, tmp_path):
    two = tmp_path / "two.json"
    two.write_text('{"couplings_hz": [20]}')
    code, out, _ = _run(capsys, "plan", str(two), "--out-dir", str(tmp_path / "p2"))
    assert code == 0 and json.loads(out)["total_time"] == pytest.approx(math.pi / 2)
    rows = (tmp_path / "p2" / "pulse.csv").read_text().splitlines()
    assert all(r.endswith(",0,0") for r in rows[1:])
    three = tmp_path / "three.json"
    three.write_text('{"couplings_hz": [20, 20]}')
    code, out, _ = _run(capsys, "plan", str(three))
    assert code == 0 and json.loads(out)["total_time"] == pytest.approx(2.72, abs=0.01)


@pytest.mark.slow
def test_plan_example2_with_curve(capsys, tmp_path):
    chain = tmp_path / "ex2.json"
    chain.write_text('{"couplings_hz": [91, 15, 55]}')
    code, out, _ = _run(capsys, "plan", str(chain), "--ref-index", "1", "--out-dir",
                        str(tmp_path / "out"), "--objective-curve", str(tmp_path / "curve.csv"),
                        "--gammas", "0:pi/2:7")
    assert code == 0
    summary = json.loads(out)
    assert summary["total_time"] == pytest.approx(2.01, abs=0.02)
    assert summary["betas"][1] / math.pi == pytest.approx(0.193, abs=0.01)
    assert summary["savings_percent"] == pytest.approx(12.2, abs=1.0)
    plan = json.loads((tmp_path / "out" / "plan.json").read_text())
    assert plan["units"] == "1/J_ref" and plan["ref_hz"] == 15.0
    assert len((tmp_path / "curve.csv").read_text().strip().splitlines()) == 8
    code, out, _ = _run(capsys, "validate", str(tmp_path / "out" / "pulse.csv"), "--chain",
                        str(chain), "--ref-index", "1")
    assert code == 0 and json.loads(out)["fidelity"] >= 1 - 1e-5


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "isingchain", "solve", "--k", "1", "--beta", "0"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["duration"] == pytest.approx(math.pi / 2, abs=1e-8)
    bad = subprocess.run([sys.executable, "-m", "isingchain", "frobnicate"], capture_output=True)
    assert bad.returncode == 2
