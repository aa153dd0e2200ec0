import json
import os
from pathlib import Path

import numpy as np

import pandas as pd

import pytest

from ramanujan.utils.utils import (
    config_hash,
    get_logger,
    load_or_store_baseline,
    load_run_config,
    parse_grid,
    save_table,
)


def test_parse_grid_inclusive_stop() -> None:
    nodes = parse_grid("0.05:0.45:0.05")
    assert nodes.size == 9
    assert np.isclose(nodes[-1], 0.45)
    assert np.allclose(parse_grid([0.5, 1.0, 2.0]), [0.5, 1.0, 2.0])


@pytest.mark.parametrize("grid", ["0:1", "1:0:0.1", "0:1:-0.1", [], [1.0, 0.5]])
def test_parse_grid_rejects(grid: object) -> None:
    with pytest.raises(ValueError):
        parse_grid(grid)  # type: ignore


def test_load_run_config_overrides(config_path: str) -> None:
    config = load_run_config(config_path, dict(alpha=0.5, n_max=5, roots=[2.0], format=None))
    assert config["model"]["alpha"] == 0.5
    assert config["model"]["roots"] == [2.0]
    assert config["ranges"]["n_max"] == 5
    assert config["output"]["format"] == "csv"

    with pytest.raises(KeyError):
        load_run_config(config_path, dict(unknown_key=1))
    with pytest.raises(ValueError):
        load_run_config(config_path, dict(quad_tol=-1.0))


def test_load_run_config_from_env(config_path: str, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("RAMANUJAN_CONFIG", config_path)
    assert load_run_config()["model"]["beta"] == 1.0


def test_config_hash() -> None:
    section = dict(alpha=1.0, beta=1.0)
    assert config_hash(section) == config_hash(dict(beta=1.0, alpha=1.0))
    assert config_hash(section) != config_hash(dict(alpha=1.0, beta=0.5))


def test_save_table(tmp_path: Path, capsys: pytest.CaptureFixture) -> None:
    table = pd.DataFrame(dict(n=[0, 1], nu=[1.0 / 3.0, 2.0]))
    save_table(table, None)
    assert capsys.readouterr().out.startswith("n,nu\n0,3.3333333333333331e-01")

    path = os.path.join(tmp_path, "sub", "table.json")
    save_table(table, path, "json")
    with open(path) as f:
        records = json.load(f)
    assert records[1] == dict(n=1, nu=2.0)


def test_get_logger_is_idempotent(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    logger = get_logger("idempotent", "ramanujan.test_logger")
    n_handlers = len(logger.handlers)
    assert get_logger("idempotent", "ramanujan.test_logger") is logger
    assert len(logger.handlers) == n_handlers
    assert os.path.exists(os.path.join(tmp_path, "log", "idempotent.log"))


def test_load_or_store_baseline(tmp_path: Path) -> None:
    values = dict(x=1.0)
    assert load_or_store_baseline(str(tmp_path), "case", values) is None
    assert load_or_store_baseline(str(tmp_path), "case", dict(x=2.0)) == values
