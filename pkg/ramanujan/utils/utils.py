import hashlib
import json
import os
import sys
from logging import DEBUG, FileHandler, Formatter, Logger, basicConfig, getLogger
from typing import Any, Dict, List, Optional, TypedDict, Union

import numpy as np

import pandas as pd

from ramanujan.utils.constants import NumericType, OutputFormat


CONFIG_ENV_KEY = "RAMANUJAN_CONFIG"
DEFAULT_CONFIG_PATH = "configs/default.json"
FLOAT_FORMAT = "%.16e"
GridType = Union[str, List[NumericType]]


class ModelSection(TypedDict):
    alpha: float
    beta: float
    roots: List[float]  # perturbation roots c_i > 1, empty for B = 1
    series_order: int


class ToleranceSection(TypedDict):
    ode_tol: float  # local error control of every ODE solve
    eigen_tol: float  # relative bracket tolerance of the eigenvalue refinement
    quad_tol: float  # absolute tolerance of the spectral-side quadratures
    route_tol: float  # acceptance tolerance between reconstruction routes


class RangeSection(TypedDict):
    n_max: int
    t_grid: GridType  # "start:stop:step" (stop inclusive) or an explicit list
    lambda_grid: GridType


class OutputSection(TypedDict):
    format: str  # csv or json
    path: Optional[str]  # None means results/<subcommand>/


class RunConfig(TypedDict):
    model: ModelSection
    tolerances: ToleranceSection
    ranges: RangeSection
    output: OutputSection


def get_logger(file_name: str, logger_name: str, disable: bool = False) -> Logger:
    subdirs = "/".join(file_name.split("/")[:-1])
    os.makedirs(f"log/{subdirs}", exist_ok=True)

    file_path = f"log/{file_name}.log"
    fmt = "%(asctime)s [%(levelname)s/%(filename)s:%(lineno)d] %(message)s"

    if not disable:
        basicConfig(filename=file_path, format=fmt, level=DEBUG)

    logger = getLogger(logger_name)
    if not logger.handlers:
        file_handler = FileHandler(file_path, mode="a")
        file_handler.setLevel(DEBUG)
        file_handler.setFormatter(Formatter(fmt))
        logger.propagate = False
        logger.addHandler(file_handler)

    return logger


def parse_grid(grid: GridType) -> np.ndarray:
    """
    Expand a grid specification.

    Args:
        grid (GridType):
            Either "start:stop:step" with an inclusive stop or an explicit list of numbers.

    Returns:
        nodes (np.ndarray): The sorted grid nodes.
    """
    if isinstance(grid, str):
        parts = grid.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be formatted as start:stop:step, but got {grid}")

        start, stop, step = map(float, parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid must satisfy start <= stop and step > 0, but got {grid}")

        n_steps = int(np.floor((stop - start) / step + 1e-9))
        nodes = start + step * np.arange(n_steps + 1)
    else:
        nodes = np.asarray(grid, dtype=float)

    if nodes.size == 0:
        raise ValueError("grid must be nonempty, but got an empty grid")
    if np.any(np.diff(nodes) <= 0):
        raise ValueError(f"grid must be sorted in increasing order, but got {nodes.tolist()}")

    return nodes


def validate_run_config(config: RunConfig) -> None:
    for key in ("model", "tolerances", "ranges", "output"):
        if key not in config:
            raise KeyError(f"config must have the section `{key}`, but got {list(config.keys())}")

    for key in ("alpha", "beta", "roots", "series_order"):
        if key not in config["model"]:
            raise KeyError(f"model section must have `{key}`, but got {list(config['model'].keys())}")

    for key, value in config["tolerances"].items():
        if value <= 0:
            raise ValueError(f"tolerance {key} must be positive, but got {value}")

    if config["ranges"]["n_max"] < 1:
        raise ValueError(f"n_max must be positive, but got {config['ranges']['n_max']}")

    parse_grid(config["ranges"]["t_grid"])
    parse_grid(config["ranges"]["lambda_grid"])
    OutputFormat(config["output"]["format"])


def load_run_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Load the run config and apply per-key overrides.

    Args:
        path (Optional[str]):
            The json path. If None, the environment variable RAMANUJAN_CONFIG
            and then configs/default.json are used.
        overrides (Optional[Dict[str, Any]]):
            Flat key -> value pairs. Keys are looked up in every section.

    Returns:
        config (RunConfig): The validated config.
    """
    path = path if path is not None else os.environ.get(CONFIG_ENV_KEY, DEFAULT_CONFIG_PATH)
    with open(path, mode="r") as f:
        config: RunConfig = json.load(f)

    for key, value in (overrides or {}).items():
        if value is None:
            continue

        sections = [name for name, section in config.items() if key in section]  # type: ignore
        if len(sections) != 1:
            raise KeyError(f"override key must exist in exactly one config section, but got {key}")

        config[sections[0]][key] = value  # type: ignore

    validate_run_config(config)
    return config


def config_hash(section: Dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(section, sort_keys=True).encode()).hexdigest()[:16]


def save_table(table: pd.DataFrame, file_path: Optional[str], format: str = "csv") -> None:
    """Write a table with 17 significant digits; None writes the csv to stdout."""
    if OutputFormat(format) == OutputFormat.json:
        if file_path is None:
            json.dump(json.loads(table.to_json(orient="records", double_precision=15)), sys.stdout, indent=4)
            return

        _makedirs(file_path)
        with open(file_path, mode="w") as f:
            json.dump(json.loads(table.to_json(orient="records", double_precision=15)), f, indent=4)
        return

    if file_path is None:
        sys.stdout.write(table.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
        return

    _makedirs(file_path)
    table.to_csv(file_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def save_json(file_path: str, data: Dict[str, Any]) -> None:
    _makedirs(file_path)
    with open(file_path, mode="w") as f:
        json.dump(data, f, indent=4, sort_keys=True)


def load_or_store_baseline(baseline_dir: str, name: str, values: Dict[str, float]) -> Optional[Dict[str, float]]:
    """
    Return the frozen baseline of a regression case, or freeze the given values.

    Args:
        baseline_dir (str): The directory that holds <name>.json.
        name (str): The regression case name.
        values (Dict[str, float]): The values produced by the current build.

    Returns:
        baseline (Optional[Dict[str, float]]):
            The stored baseline, or None if this call created it.
    """
    file_path = os.path.join(baseline_dir, f"{name}.json")
    if os.path.exists(file_path):
        with open(file_path, mode="r") as f:
            return json.load(f)

    save_json(file_path, values)
    return None


def _makedirs(file_path: str) -> None:
    subdirs = os.path.dirname(file_path)
    if subdirs:
        os.makedirs(subdirs, exist_ok=True)
