import json
import logging
import math

import pytest

from ageleak.cli import main, parse_grid
from ageleak.errors import ParameterError
from ageleak.settings import get_settings, use_settings


@pytest.fixture(autouse=True)
def reset_package_logger():
    yield
    logger = logging.getLogger("ageleak")
    logger.handlers.clear()
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


# Grid Parsing Tests
def test_parse_grid():
    assert parse_grid("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    assert parse_grid("2,3, 5") == [2.0, 3.0, 5.0]
    with pytest.raises(ParameterError):
        parse_grid("1:2")


# Command Tests
def test_rate_command(capsys):
    code, out = _run(capsys, "rate", "--policy", "dad", "--tau", "4")
    assert code == 0
    assert json.loads(out) == {"policy": "dad", "rate_bits": 0.25, "leak_time": 4.0}


def test_age_command(capsys):
    code, out = _run(capsys, "age", "--policy", "lcfs-geo", "--tau", "4")
    assert code == 0
    assert json.loads(out)["delta"] == pytest.approx(6.0, abs=1e-9)


def test_leakage_command(capsys):
    code, out = _run(capsys, "leakage", "--policy", "lcfs-greedy", "--beta", "0.5", "--n", "4")
    assert code == 0
    assert json.loads(out)["bits"] == pytest.approx(2.339850, abs=1e-6)


def test_leakage_command_for_dump_policy(capsys):
    code, out = _run(capsys, "leakage", "--policy", "dad", "--tau", "3", "--n", "10")
    assert code == 0
    assert json.loads(out)["bits"] == pytest.approx(3.0)


def test_oracle_command(capsys):
    code, out = _run(capsys, "oracle", "--policy", "dad", "--tau", "2", "--n", "4")
    payload = json.loads(out)
    assert code == 0
    assert payload["bits"] == pytest.approx(2.0)
    assert payload["ml_input_verified"] is True


def test_oracle_command_for_fcfs(capsys):
    code, out = _run(capsys, "oracle", "--policy", "fcfs-greedy", "--beta", "0.5", "--n", "8")
    payload = json.loads(out)
    assert code == 0
    assert payload["bits"] == pytest.approx(8 * math.log2(1.5), abs=1e-9)


def test_optimize_decoupled(capsys):
    code, out = _run(capsys, "optimize", "--rate", "0.4")
    payload = json.loads(out)
    assert code == 0
    assert (payload["ddad"]["i"], payload["ddad"]["j"]) == (2, 3)
    assert payload["certificate"]["gamma_star"] == pytest.approx(2.632764398, abs=1e-9)


def test_optimize_coupled(capsys):
    code, out = _run(capsys, "optimize", "--beta", "0.5")
    payload = json.loads(out)
    assert code == 0
    assert payload["greedy_pmf"] == [[1, 0.5], [2, 0.5]]
    assert 0 < payload["fcfs_alpha"] <= 1


def test_sweep_to_stdout(capsys):
    code, out = _run(capsys, "sweep", "--policy", "dad", "--grid", "2:4:1")
    lines = out.strip().split("\n")
    assert code == 0
    assert lines[0].startswith("policy_tag,param,lambda")
    assert len(lines) == 4


def test_sweep_to_file(capsys, tmp_path):
    path = tmp_path / "ddad.csv"
    code, _ = _run(capsys, "sweep", "--policy", "ddad", "--grid", "0.25,0.4", "--out", str(path))
    assert code == 0
    assert len(path.read_text().strip().split("\n")) == 3


def test_sweep_from_spec_file(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"family": "rad-geo", "start": 2, "stop": 4, "step": 1}))
    code, out = _run(capsys, "sweep", "--spec", str(spec))
    assert code == 0
    assert out.count("rad-geo") == 3


def test_simulate_command(capsys):
    code, out = _run(capsys, "simulate", "--policy", "dad", "--tau", "5", "--slots", "50000", "--seed", "1")
    payload = json.loads(out)
    assert code == 0
    assert payload["mean_age"] == pytest.approx(5.0, rel=0.1)


def test_simulate_source_only(capsys):
    code, out = _run(capsys, "simulate", "--slots", "50000", "--warmup", "100")
    payload = json.loads(out)
    assert code == 0
    assert payload["mean_age"] == pytest.approx(2.0, rel=0.05)
    assert payload["age_pmf"]


def test_check_command(capsys):
    code, out = _run(capsys, "check", "--only", "fibonacci")
    assert code == 0
    assert out.startswith("PASS fibonacci")


def test_config_file_is_applied(capsys, tmp_path):
    config = tmp_path / "settings.json"
    config.write_text(json.dumps({"oracle_max_horizon": 3}))
    previous = get_settings()
    try:
        code, _ = _run(capsys, "--config", str(config), "oracle", "--policy", "dad", "--tau", "2", "--n", "4")
    finally:
        use_settings(previous)
    assert code == 2


# Exit Code Tests
def test_missing_policy_is_invalid_input(capsys):
    assert _run(capsys, "age", "--tau", "4")[0] == 2


def test_missing_parameter_is_invalid_input(capsys):
    assert _run(capsys, "rate", "--policy", "lcfs-greedy")[0] == 2


def test_fractional_dad_period_is_invalid_input(capsys):
    assert _run(capsys, "rate", "--policy", "dad", "--tau", "2.5")[0] == 2


def test_half_specified_markov_source_is_invalid_input(capsys):
    assert _run(capsys, "age", "--policy", "dad", "--tau", "4", "--p01", "0.1")[0] == 2


def test_oracle_horizon_is_invalid_input(capsys):
    assert _run(capsys, "oracle", "--policy", "dad", "--tau", "2", "--n", "15")[0] == 2


def test_out_of_range_beta_is_invalid_input(capsys):
    assert _run(capsys, "rate", "--policy", "lcfs-greedy", "--beta", "1.5")[0] == 2


def test_zero_lambda_is_invalid_input(capsys):
    assert _run(capsys, "optimize", "--beta", "0.5", "--lambda", "0")[0] == 2
