import json

import numpy as np
import pytest

from nullest.cli import EXIT_IDENT, EXIT_INPUT, EXIT_OK, EXIT_VERIFY, dumps, format_number, main, parse_reals
from nullest.cli import CliError


def write_values(path, values, header=None):
    lines = [] if header is None else [header]
    lines += [repr(float(v)) for v in values]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def gaussian_file(tmp_path):
    rng = np.random.default_rng(0)
    x = 1.5 + 2.0 * rng.standard_normal(4000)
    x[:10] = 30.0
    return write_values(tmp_path / "x.txt", x, "# N(1.5, 4) with ten outliers")


def run_json(argv, tmp_path):
    out = tmp_path / "out.json"
    code = main(list(argv) + ["-o", str(out)])
    return code, (json.loads(out.read_text()) if code == EXIT_OK else None)


def test_estimate_fixed_k(gaussian_file, tmp_path):
    code, res = run_json(["estimate", gaussian_file, "--k", "10"], tmp_path)
    assert code == EXIT_OK
    assert abs(res["theta_hat"] - 1.5) < 0.3
    assert abs(res["sigma2_hat"] - 4.0) < 0.5
    assert res["k_used_or_adaptive"] == 10
    assert list(res) == ["theta_hat", "sigma2_hat", "k_used_or_adaptive", "tau", "pilot_sigma2", "tv_rate_bound"]


def test_estimate_adaptive(gaussian_file, tmp_path):
    code, res = run_json(["estimate", gaussian_file, "--adaptive"], tmp_path)
    assert code == EXIT_OK
    assert res["k_used_or_adaptive"] == "adaptive"
    assert abs(res["theta_hat"] - 1.5) < 0.3


def test_estimate_needs_exactly_one_mode(gaussian_file, capsys):
    assert main(["estimate", gaussian_file]) == EXIT_INPUT
    assert main(["estimate", gaussian_file, "--k", "3", "--adaptive"]) == EXIT_INPUT


def test_empty_file(tmp_path, capsys):
    p = tmp_path / "empty.txt"
    p.write_text("")
    assert main(["estimate", str(p), "--k", "1"]) == EXIT_INPUT
    assert "no values" in capsys.readouterr().err


def test_bad_line_reports_line_number(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("# header\n1.0\n2.0\nthree\n4.0\n")
    assert main(["estimate", str(p), "--k", "1"]) == EXIT_INPUT
    assert "line 4" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["estimate", str(tmp_path / "nope.txt"), "--k", "1"]) == EXIT_INPUT


def test_k_not_below_half(tmp_path, capsys):
    p = write_values(tmp_path / "x.txt", np.arange(10.0))
    assert main(["estimate", p, "--k", "5"]) == EXIT_IDENT
    assert main(["estimate", p, "--k", "10"]) == EXIT_IDENT


def test_bad_override(gaussian_file, capsys):
    assert main(["estimate", gaussian_file, "--k", "1", "--set", "nonsense=1"]) == EXIT_INPUT
    assert main(["estimate", gaussian_file, "--k", "1", "--set", "c_tau"]) == EXIT_INPUT


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == EXIT_INPUT


@pytest.mark.parametrize("v", [0.1, 1 / 3, 1e-300, 2.0**-1074, 123456789.123456789, -0.0, 1e308])
def test_format_number_round_trips(v):
    assert float(format_number(v)) == v


def test_dumps_parses_back():
    obj = {"a": 1 / 3, "b": [1, 2.5, None], "c": "x", "d": True, "e": float("inf")}
    back = json.loads(dumps(obj))
    assert back == {"a": 1 / 3, "b": [1, 2.5, None], "c": "x", "d": True, "e": None}
    assert list(back) == list(obj)


def test_parse_reals_header_and_trailing_blank():
    assert parse_reals(["# a", "# b", "1", "-2.5e1", "", ""]).tolist() == [1.0, -25.0]


@pytest.mark.parametrize("lines", [["1", "# late comment"], ["1", "", "2"], ["nan"], ["1e999"]])
def test_parse_reals_rejects(lines):
    with pytest.raises(CliError) as info:
        parse_reals(lines)
    assert info.value.code == EXIT_INPUT


def test_simulate_then_estimate(tmp_path):
    data = tmp_path / "sim.txt"
    code = main(["simulate", "--n", "3000", "--k", "30", "--theta", "-2", "--sigma2", "0.25", "--seed", "4", "-o", str(data)])
    assert code == EXIT_OK
    text = data.read_text().splitlines()
    assert text[0].startswith("# theta=-2")
    assert len(text) == 3001
    code, res = run_json(["estimate", str(data), "--k", "30"], tmp_path)
    assert code == EXIT_OK
    assert abs(res["theta_hat"] + 2) < 0.1
    assert abs(res["sigma2_hat"] - 0.25) < 0.05


def test_simulate_rejects(tmp_path, capsys):
    assert main(["simulate", "--n", "10", "--k", "5"]) == EXIT_IDENT
    assert main(["simulate", "--n", "1"]) == EXIT_INPUT


def test_sweep_minimal(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n": 200, "k": 5, "trials": 3, "estimators": ["median"], "seed": 2}))
    out = tmp_path / "out.csv"
    assert main(["sweep", str(spec), "--threads", "1", "-o", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "estimator,n,k,trials,median_err,q10,q90,theory_rate,ratio"
    assert len(lines) == 2
    assert lines[1].startswith("median,200,5,3,")


def test_sweep_json_format(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n": 200, "k": 5, "trials": 2, "estimators": ["zero"]}))
    code, res = run_json(["sweep", str(spec), "--format", "json"], tmp_path)
    assert code == EXIT_OK
    assert len(res["trials"]) == 2 and res["table"][0]["estimator"] == "zero"


@pytest.mark.parametrize(
    "content",
    [
        json.dumps({"n": 200, "estimators": ["oracle"]}),
        "[1, 2]",
        "{not json",
        json.dumps({"n": 100, "k": 60}),
    ],
)
def test_sweep_bad_spec(tmp_path, capsys, content):
    spec = tmp_path / "spec.json"
    spec.write_text(content)
    assert main(["sweep", str(spec)]) == EXIT_INPUT


@pytest.mark.slow
def test_verify_lowerbound_default(tmp_path):
    code, res = run_json(["verify-lowerbound"], tmp_path)
    assert code == EXIT_OK
    assert res["passed"] is True
    assert len(res["reports"]) == 3


def test_verify_lowerbound_half(tmp_path):
    code, res = run_json(["verify-lowerbound", "--eps", "0.5"], tmp_path)
    assert code == EXIT_OK
    assert res["passed"] is True


def test_verify_lowerbound_out_of_contract(tmp_path, capsys):
    out = tmp_path / "v.json"
    code = main(["verify-lowerbound", "--eps", "0.5", "--set", "c0=0.5", "-o", str(out)])
    assert code == EXIT_VERIFY
    res = json.loads(out.read_text())
    assert res["passed"] is False
    assert res["reports"][0]["failures"][0] == "c0"
    assert "verification failed" in capsys.readouterr().err


def test_verify_bad_eps_list(capsys):
    assert main(["verify-lowerbound", "--eps", "0.1,abc"]) == EXIT_INPUT


def test_rates(tmp_path):
    code, res = run_json(["rates", "--n", "10000", "--k", "2500"], tmp_path)
    assert code == EXIT_OK
    assert res["n"] == 10000 and res["k"] == 2500
    assert res["rate_location_sq"] > 0 and res["rate_tv"] > 0


def test_rates_rejects(capsys):
    assert main(["rates", "--n", "10", "--k", "5"]) == EXIT_IDENT
    assert main(["rates", "--n", "1", "--k", "0"]) == EXIT_INPUT


def test_help_exits_zero(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "c_tau" in capsys.readouterr().out
