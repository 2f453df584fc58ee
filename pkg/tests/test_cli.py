import json

import pytest
from click.testing import CliRunner

from main import cli


def run(tmp_path, config, command, *extra, out="out"):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    args = ["--config", str(path), "--out", str(tmp_path / out), "--log-level", "WARNING", *extra, command]
    result = CliRunner().invoke(cli, args)
    payload = json.loads(result.stdout.strip().splitlines()[-1])
    return result, payload


def test_norm_oracle(tmp_path):
    config = {"function": {"kind": "power_shift", "a": 2.0}, "params": {"p": 2.0, "alpha": 0.0}}
    result, payload = run(tmp_path, config, "norm")
    assert result.exit_code == 0
    assert payload["verdict"] == "Convergent"
    assert payload["value"] == pytest.approx(0.886227, rel=1e-3)
    assert (tmp_path / "out" / "norm_ladder.csv").read_text().startswith("# config_hash=")
    assert payload["artifacts"] == ["config.json", "norm_ladder.csv", "norm.json"]
    assert json.loads((tmp_path / "out" / "config.json").read_text())["config"]["function"]["kind"] == "power_shift"


def test_empty_levelset(tmp_path):
    config = {
        "function": {"kind": "pure_power", "t": 1.0},
        "params": {"t": 1.0},
        "command": {"eps": 2.0, "resolution": [16, 16]},
    }
    result, payload = run(tmp_path, config, "levelset")
    assert result.exit_code == 0
    assert payload["member_pixels"] == 0
    lines = (tmp_path / "out" / "levelset.csv").read_text().splitlines()
    assert lines[2:] == ["row,col,x,y"]
    assert (tmp_path / "out" / "levelset.png").exists()


def test_hypothesis_violation_exit_code(tmp_path):
    config = {
        "function": {"kind": "pure_power", "t": 1.0},
        "params": {"q": 2.0, "nu": 0.0, "beta": 0.0},
        "command": {"eps": 0.5},
    }
    result, payload = run(tmp_path, config, "phi")
    assert result.exit_code == 2
    assert payload["error"] == "HypothesisViolation"
    assert payload["exit_code"] == 2


def test_phi_on_the_ball_is_rejected(tmp_path):
    config = {
        "domain": "ball",
        "function": {"kind": "ball_pole", "s": 1.0},
        "params": {"q": 2.0, "s": 1.0, "t": 2.0},
        "command": {"eps": 0.5},
    }
    result, payload = run(tmp_path, config, "phi")
    assert result.exit_code == 2
    assert payload["error"] == "ConfigurationError"


def test_unsupported_dimension(tmp_path):
    config = {"domain": "ball", "n": 3, "function": {"kind": "constant", "c": 1.0}, "command": {"eps": 0.5}}
    result, payload = run(tmp_path, config, "levelset")
    assert result.exit_code == 2
    assert payload["error"] == "UnsupportedDimension"


def test_invalid_config(tmp_path):
    result, payload = run(tmp_path, {"colour": "red"}, "norm")
    assert result.exit_code == 2
    assert payload["error"] == "ValidationError"


def test_missing_config(tmp_path):
    result = CliRunner().invoke(cli, ["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path), "norm"])
    assert result.exit_code == 2


def test_whitney_and_seed_override(tmp_path):
    config = {"command": {"region": [0.0, 1.0, 1.0, 2.0]}}
    result, payload = run(tmp_path, config, "whitney", "--seed", "7")
    assert result.exit_code == 0
    assert payload["squares"] == 1
    assert 1.0 / 3.0 <= payload["comparability"][0] <= payload["comparability"][1] <= 3.0
    rows = (tmp_path / "out" / "whitney_squares.csv").read_text().splitlines()
    assert rows[2:] == ["j,k,x0,x1,y0,y1", "0,0,0.0,1.0,1.0,2.0"]
    document = json.loads((tmp_path / "out" / "whitney.json").read_text())
    assert document["seed"] == 7


def test_threads_do_not_change_artifacts(tmp_path):
    config = {
        "function": {"kind": "pure_power", "t": 1.0},
        "params": {"t": 1.0},
        "command": {"eps": 0.5, "resolution": [24, 12]},
    }
    run(tmp_path, config, "levelset", "--threads", "1", out="a")
    run(tmp_path, config, "levelset", "--threads", "3", out="b")
    for name in ("config.json", "levelset.json", "levelset.csv", "levelset.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_lemma3_table(tmp_path):
    config = {"ladder": {"max_exp": 12}, "command": {"points": [[0.0, 1.0], [3.0, 2.0]]}}
    result, payload = run(tmp_path, config, "lemma3")
    assert result.exit_code == 0
    assert payload["max_rel_error"] <= 5e-3
    assert len((tmp_path / "out" / "lemma3.csv").read_text().splitlines()) == 5
