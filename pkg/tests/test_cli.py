import csv
import io
import json
import subprocess
import sys

import pytest

from ramanmem.cli import EXIT_CONFIG, EXIT_NUMERIC, main, parse_grid


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_derive(capsys):
    code, out, _ = run(capsys, "derive")
    assert code == 0 and "R = 0.622951" in out
    code, out, _ = run(capsys, "derive", "--p3", "0.5", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["kappa"] == pytest.approx(-1.291, abs=1e-3) and data["w"] == 0.0


def test_derive_from_config_file(capsys, tmp_path):
    cfg = tmp_path / "mem.cfg"
    cfg.write_text("# test config\nd = 2000\nC_override = none\n")
    code, out, _ = run(capsys, "derive", "--params", str(cfg), "--gamma", "0.02", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["C"] == pytest.approx((2000 * 0.02 / (0.31 * 15.2**2)) ** 0.5)


@pytest.mark.parametrize("argv", [
    ("derive", "--params", "missing.cfg"),
    ("derive", "--p1", "0.4", "--p3", "0.4"),
    ("derive", "--n", "100"),
    ("scan-r", "--grid", ""),
    ("scan-n", "--grid", "0:1"),
    ("g2", "--input", "squeezed:0.2"),
    ("analyze", "no-such-file.csv"),
])
def test_config_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_CONFIG and err.startswith("error:")


def test_malformed_config(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("d = eighteen hundred\n")
    code, _, err = run(capsys, "derive", "--params", str(cfg))
    assert code == EXIT_CONFIG and "d" in err


def test_numerical_failure_exit(capsys, tmp_path):
    path = tmp_path / "zero.csv"
    path.write_text("a\n1.0\n1.0\n1.0\n")
    # zero-variance samples are an input error, not a numerical failure
    assert run(capsys, "stats-test", "ttest", "--file", str(path), "--a", "a")[0] == EXIT_CONFIG
    runs = tmp_path / "runs.csv"
    runs.write_text("run_id,setting,bin,duration_s,c_her,c_her_H,c_her_V,c_her_H_V\n"
                    "1,scd,out,10,100,5,5,1\n1,scd,in,10,100,5,5,1\n"
                    "2,sd,in,10,100,0,0,0\n2,sd,out,10,100,0,0,0\n3,cd,out,10,100,1,1,0\n")
    assert run(capsys, "analyze", str(runs), "--efficiency")[0] == EXIT_NUMERIC
    assert EXIT_NUMERIC != EXIT_CONFIG


def test_greens_check(capsys, tmp_path):
    code, out, _ = run(capsys, "greens", "--check", "--n", "32", "--save", str(tmp_path / "g.npz"))
    assert code == 0 and "commutator_residual" in out and (tmp_path / "g.npz").exists()


def test_g2_examples(capsys):
    code, out, _ = run(capsys, "g2", "--input", "coherent:0.23", "--channel", "retrieval", "--format", "json")
    assert code == 0 and abs(json.loads(out)["retrieval"]["g2"] - 1.69) < 0.15
    code, out, _ = run(capsys, "g2", "--input", "fock:0.22", "--channel", "retrieval", "--format", "json")
    assert abs(json.loads(out)["retrieval"]["g2"] - 1.59) < 0.15
    code, out, _ = run(capsys, "g2", "--input", "vacuum", "--format", "json")
    data = json.loads(out)
    assert data["retrieval"]["g2"] == pytest.approx(data["retrieval"]["noise_g2"])


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_scan_r_crosses_one_below_point_three(capsys):
    code, out, _ = run(capsys, "scan-r", "--grid", "0,0.1,0.2,0.3,0.4,0.625", "--n", "64")
    rows = _rows(out)
    g2 = [float(r["g2_ret"]) for r in rows]
    assert code == 0 and list(rows[0]) == ["x", "g2_trans", "g2_ret", "mean_photons_trans", "mean_photons_ret",
                                           "eps_in", "eps_out"]
    assert all(b >= a for a, b in zip(g2, g2[1:]))
    crossing = next(float(r["x"]) for r in rows if float(r["g2_ret"]) >= 1.0)
    assert crossing <= 0.3


def test_scan_n_shape(capsys):
    code, out, _ = run(capsys, "scan-n", "--family", "fock", "--grid", "0:1:5", "--n", "32", "--format", "json")
    data = json.loads(out)
    assert code == 0 and len(data) == 5 and data[-1]["x"] == 1.0


def test_mc_zero_sigma_and_determinism(capsys, tmp_path):
    args = ("mc", "--grid", "0.2,1.0", "--samples", "20", "--n", "16", "--seed", "4")
    code, out, _ = run(capsys, *args, "--sigma-scale", "0")
    assert code == 0 and all(float(r["g2_std"]) == 0.0 for r in _rows(out))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, *args, "-o", str(a))
    run(capsys, *args, "-o", str(b), "--workers", "2")
    assert a.read_bytes() == b.read_bytes()
    assert all(float(r["g2_std"]) > 0 for r in _rows(a.read_text()))


def test_analyze_fixture(capsys, fixtures_dir):
    code, out, _ = run(capsys, "analyze", str(fixtures_dir / "table_s1_runs.csv"), "--welch", "coh_0.23", "spdc")
    report = json.loads(out)
    assert code == 0
    assert round(report["groups"]["spdc"]["scd/out"]["g2"], 2) == 1.59
    assert round(report["groups"]["noise"]["cd/out"]["g2"], 2) == 1.70
    assert report["welch"]["p"] < 0.05


def test_analyze_missing_setting(capsys, fixtures_dir):
    code, _, err = run(capsys, "analyze", str(fixtures_dir / "table_s1_runs.csv"), "--efficiency")
    assert code == EXIT_CONFIG and "scd, cd, sd" in err


def test_stats_test(capsys, tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("a,b\n1.7,1.5\n1.8,1.6\n1.65,1.62\n1.75,1.55\n")
    code, out, _ = run(capsys, "stats-test", "welch", "--file", str(path), "--a", "a", "--b", "b")
    data = json.loads(out)
    assert code == 0 and data["test"] == "welch" and data["p_value"] < 0.05 and "dof" in data
    assert run(capsys, "stats-test", "welch", "--file", str(path), "--a", "a")[0] == EXIT_CONFIG
    assert run(capsys, "stats-test", "shapiro", "--file", str(path), "--a", "zzz")[0] == EXIT_CONFIG


def test_grid_parsing():
    assert parse_grid("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_grid("0.1, 0.2") == [0.1, 0.2]


@pytest.mark.parametrize("argv", [
    ("derive", "--format", "json"),
    ("g2", "--n", "32", "--format", "json"),
    ("scan-n", "--n", "32", "--grid", "0:2.5:6"),
    ("scan-r", "--n", "16", "--grid", "0,0.25,0.625"),
    ("mc", "--n", "16", "--samples", "10", "--grid", "0.22", "--seed", "3"),
])
def test_console_script_is_byte_deterministic(tmp_path, argv):
    outputs = []
    for k in range(2):
        target = tmp_path / f"out{k}"
        subprocess.run([sys.executable, "-m", "ramanmem.cli", *argv, "-o", str(target)], check=True)
        outputs.append(target.read_bytes())
    assert outputs[0] == outputs[1] and outputs[0]
