import json

import numpy as np
import pytest

from diskescape import met_transportation_limit
from diskescape.cli import main, parse_config


def run_cli(args):
    return main(args)


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_empty_arguments_give_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        parse_config([])
    assert exc.value.code == 2
    assert "solve" in capsys.readouterr().err


def test_out_of_range_epsilon_exits_with_validation_code(capsys):
    code = run_cli(["solve", "--a", "0.1", "--eps", "4.0", "--lambda-lin", "0", "1", "2", "--n", "32"])
    assert code == 2
    assert "epsilon" in capsys.readouterr().err


def test_numerical_failure_exit_code(capsys):
    code = run_cli(["asymptotics", "--a", "0.001", "--eps", "0.1", "--n", "64"])
    assert code == 3


def test_io_failure_exit_code(tmp_path, capsys):
    out = tmp_path / "missing" / "out.csv"
    code = run_cli(
        ["closed-form", "transportation", "--eps", "0.1", "--d2", "1", "--output", str(out)]
    )
    assert code == 4


def test_transportation_value(tmp_path):
    out = tmp_path / "t.csv"
    assert run_cli(
        ["closed-form", "transportation", "--eps", "0.01", "--d2", "1", "--output", str(out)]
    ) == 0
    header, rows = read_csv(out)
    assert header == ["quantity", "value"]
    assert float(rows[0][1]) == pytest.approx(78.2898, abs=1e-4)


def test_spectrum_point_target_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert run_cli(
        ["spectrum", "--a", "0.001", "--eps", "0", "--n", "100", "--output", str(out)]
    ) == 0
    header, rows = read_csv(out)
    assert header == ["n", "lambda_n", "psi_n_sq"]
    assert len(rows) == 100
    got = np.array([float(r[1]) for r in rows])
    n = np.arange(1, 101)
    expected = np.sort(-np.expm1(n * np.log1p(-0.001)) / n**2)[::-1]
    assert np.allclose(got, expected, rtol=1e-12)


def test_solve_csv_format_and_precision(tmp_path):
    out = tmp_path / "solve.csv"
    args = [
        "solve", "--a", "0.1", "--eps", "0.1", "--d1", "1", "--d2", "2",
        "--lambda-log", "0.1", "100", "4", "--n", "256", "--output", str(out),
    ]
    assert run_cli(args) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    header, rows = read_csv(out)
    assert header == ["lambda", "met", "residual_estimate"]
    assert len(rows) == 4
    # 17 significant digits round-trip
    value = float(rows[0][1])
    assert f"{value:.17g}" == rows[0][1]


def test_solve_output_is_deterministic(tmp_path):
    args = ["solve", "--a", "0.05", "--eps", "0.2", "--lambda-lin", "0", "10", "3", "--n", "128"]
    a_path, b_path = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(args + ["--output", str(a_path)]) == 0
    assert run_cli(args + ["--output", str(b_path)]) == 0
    assert a_path.read_bytes() == b_path.read_bytes()


def test_json_round_trip_is_byte_identical(tmp_path):
    out = tmp_path / "limit.json"
    assert run_cli(
        ["limit", "--a", "1", "--eps", "0.1", "--n", "512", "--format", "json",
         "--output", str(out)]
    ) == 0
    text = out.read_text()
    assert json.dumps(json.loads(text), indent=2, sort_keys=True) + "\n" == text
    payload = json.loads(text)
    values = dict((row[0], row[1]) for row in payload["rows"])
    assert values["limit_t"] == pytest.approx(
        met_transportation_limit(0.1).value, rel=2e-2
    )


def test_solve_json_output(tmp_path):
    out = tmp_path / "solve.json"
    assert run_cli(
        ["solve", "--a", "0.1", "--eps", "0.2", "--lambda-log", "0.1", "10", "3",
         "--n", "128", "--format", "json", "--output", str(out)]
    ) == 0
    payload = json.loads(out.read_text())
    assert payload["columns"] == ["lambda", "met", "residual_estimate"]
    assert len(payload["rows"]) == 3
    assert all(isinstance(v, float) for row in payload["rows"] for v in row)


def test_config_file_with_flag_precedence(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"a": 0.1, "eps": 0.2, "n": 64, "lambda-lin": [0, 5, 2]}))
    cfg = parse_config(["solve", "--config", str(cfg_file), "--n", "32"])
    assert cfg.params.a == 0.1 and cfg.params.epsilon == 0.2
    assert cfg.n_trunc == 32  # flag wins over file
    assert cfg.lambda_grid == (0.0, 5.0, 2, "lin")


def test_config_file_unknown_key_is_an_error(tmp_path, capsys):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"a": 0.1, "eps": 0.2, "paths": 10}))
    code = run_cli(["solve", "--config", str(cfg_file), "--lambda-lin", "0", "1", "2"])
    assert code == 2
    assert "paths" in capsys.readouterr().err


def test_matrix_cache_reuse(tmp_path):
    cache = tmp_path / "op.vtvm"
    args = [
        "solve", "--a", "0.2", "--eps", "0.3", "--lambda-lin", "0", "1", "2",
        "--n", "64", "--matrix-cache", str(cache),
    ]
    out1, out2 = tmp_path / "1.csv", tmp_path / "2.csv"
    assert run_cli(args + ["--output", str(out1)]) == 0
    assert cache.exists()
    stamp = cache.stat().st_mtime_ns
    assert run_cli(args + ["--output", str(out2)]) == 0
    assert cache.stat().st_mtime_ns == stamp  # reused, not rewritten
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_deterministic_output(tmp_path):
    args = [
        "simulate", "--a", "0.2", "--eps", "0.4", "--lam", "1", "--paths", "512",
        "--seed", "5",
    ]
    a_path, b_path = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli(args + ["--output", str(a_path)]) == 0
    assert run_cli(args + ["--output", str(b_path)]) == 0
    assert a_path.read_bytes() == b_path.read_bytes()
    header, rows = read_csv(a_path)
    assert header == ["mean", "stderr", "n_paths", "seed"]


def test_compare_reports_agreement(tmp_path):
    out = tmp_path / "cmp.csv"
    args = [
        "compare", "--a", "0.2", "--eps", "0.4", "--lambda-lin", "0.5", "2", "2",
        "--n", "256", "--paths", "3000", "--seed", "23", "--output", str(out),
    ]
    assert run_cli(args) == 0
    header, rows = read_csv(out)
    assert header == [
        "lambda", "met_spectral", "met_diagonal", "mc_mean", "mc_stderr",
        "mc_agree", "diag_rel_gap",
    ]
    assert all(row[5] in ("PASS", "FAIL") for row in rows)
    assert all(row[5] == "PASS" for row in rows)


def test_closed_form_point_and_bounds(tmp_path):
    out = tmp_path / "pt.csv"
    assert run_cli(
        ["closed-form", "point", "--a", "0.1", "--eps", "0", "--lam", "100",
         "--output", str(out)]
    ) == 0
    _, rows = read_csv(out)
    point = float(rows[0][1])
    out2 = tmp_path / "b.csv"
    assert run_cli(
        ["closed-form", "bounds", "--a", "0.1", "--eps", "0", "--lam", "100",
         "--output", str(out2)]
    ) == 0
    _, rows2 = read_csv(out2)
    lower, upper = float(rows2[0][1]), float(rows2[1][1])
    assert lower <= point <= upper


def test_closed_form_d2crit(tmp_path):
    out = tmp_path / "crit.csv"
    assert run_cli(
        ["closed-form", "d2crit", "--a", "0.5", "--eps", "0", "--output", str(out)]
    ) == 0
    _, rows = read_csv(out)
    assert float(rows[0][1]) == pytest.approx(0.546036, rel=1e-4)
