from __future__ import annotations

import shutil
import sys
from pathlib import Path
from typing import Any, Literal, overload

import yaml
from error_helper import error, hint, info, warning
from platformdirs import user_config_path
from yaml.error import MarkedYAMLError

from .. import __package__ as parent_package
from ..experiments import EXPORT_FORMATS
from ..qnm import QnmOptions
from ..region import CornerOrder, RegionOptions
from ..relaxation import SolverOptions

PARENT_DIR = Path(__file__).parent

_config_dir = None


def get_config_dir():
    return _config_dir


def set_config_dir(new_config_dir: Path):
    global _config_dir
    new_config_dir = Path(new_config_dir).resolve()
    new_config_dir.mkdir(parents=True, exist_ok=True)
    _config_dir = new_config_dir


# setup default config dir
set_config_dir(user_config_path(parent_package))

DEFAULT_CONFIG_VARS: dict[str, Any] = {
    "tol_rate": 1e-5,
    "tol_rank": 1e-6,
    "tol_bisect": 1e-4,
    "alpha_points": 41,
    "corner_order": CornerOrder.PRIVATE_FIRST.value,
    "grid_points": 0,
    "threads": 1,
    "solver_max_iters": 100,
    "solver_tol": 1e-8,
    "randomization_samples": 50,
    "qnm_starts": 20,
    "qnm_tol": 1e-7,
    "export_format": "csv",
}
VALID_CONFIG_VARS = {*DEFAULT_CONFIG_VARS}
RENAMED_CONFIG_VARS = {
    "tol_r": "tol_bisect",
}

POSITIVE_FLOAT_VARS = {"tol_rate", "tol_rank", "tol_bisect", "solver_tol", "qnm_tol"}
POSITIVE_INT_VARS = {"alpha_points", "threads", "solver_max_iters", "qnm_starts"}
NONNEGATIVE_INT_VARS = {"grid_points", "randomization_samples"}

_config_loaded = None
CONFIG = "config.yaml"


@overload
def get_config(reload: Literal[False] = False) -> dict[str, Any]: ...
@overload
def get_config(reload: Literal[True]) -> None: ...
def get_config(reload: bool = False):
    global _config_loaded
    if not reload and _config_loaded is not None:
        return _config_loaded

    assert _config_dir is not None
    config = _config_dir / CONFIG
    if not config.is_file():
        if reload:
            _config_loaded = None
            return _config_loaded
        info(f"failed to find {CONFIG} config file, creating default configuration", end="\n")
        hint("this is normal if you're using this program for the first time")
        shutil.copy(PARENT_DIR / f"default_{CONFIG}", config)

    try:
        loaded = yaml.safe_load(config.read_text(encoding="utf-8")) or {}
    except MarkedYAMLError as e:
        error(e, prefix="")
        sys.exit(1)
    if not isinstance(loaded, dict):
        error(f"'{CONFIG}' must contain a mapping", prefix="FATAL: ")
        sys.exit(1)

    for invalid_parameter in set(loaded) - VALID_CONFIG_VARS:
        if renamed_parameter := RENAMED_CONFIG_VARS.get(invalid_parameter):
            warning(
                f"deprecated parameter '{invalid_parameter}' in {CONFIG} "
                f"(renamed to '{renamed_parameter}')"
            )
            loaded[renamed_parameter] = loaded.pop(invalid_parameter)
        else:
            warning(f"invalid parameter '{invalid_parameter}' in '{CONFIG}'")
            del loaded[invalid_parameter]

    _config_loaded = {**DEFAULT_CONFIG_VARS, **_validated(loaded)}
    return _config_loaded


def _validated(config: dict[str, Any]):
    out: dict[str, Any] = {}
    for name, value in config.items():
        if _is_valid(name, value):
            out[name] = value
        else:
            warning(
                f"invalid value '{name}: {value}' in '{CONFIG}' "
                f"(using default '{DEFAULT_CONFIG_VARS[name]}')"
            )
    return out


def _is_valid(name: str, value: Any):
    if isinstance(value, bool):
        return False
    if name in POSITIVE_FLOAT_VARS:
        return isinstance(value, (int, float)) and value > 0
    if name in POSITIVE_INT_VARS:
        return isinstance(value, int) and value > 0
    if name in NONNEGATIVE_INT_VARS:
        return isinstance(value, int) and value >= 0
    if name == "corner_order":
        return value in {order.value for order in CornerOrder}
    if name == "export_format":
        return value in EXPORT_FORMATS
    return True


def solver_options(config: dict[str, Any], seed: int = 0):
    return SolverOptions(
        max_iters=config["solver_max_iters"],
        tol=float(config["solver_tol"]),
        tol_rank=float(config["tol_rank"]),
        randomization_samples=config["randomization_samples"],
        seed=seed,
    )


def region_options(config: dict[str, Any], seed: int = 0, threads: int | None = None):
    return RegionOptions(
        tol_r=float(config["tol_bisect"]),
        tol_rate=float(config["tol_rate"]),
        corner_order=CornerOrder(config["corner_order"]),
        grid_points=config["grid_points"],
        threads=config["threads"] if threads is None else threads,
        solver=solver_options(config, seed),
    )


def qnm_options(config: dict[str, Any], seed: int = 0, threads: int | None = None):
    return QnmOptions(
        starts=config["qnm_starts"],
        tol=float(config["qnm_tol"]),
        seed=seed,
        threads=config["threads"] if threads is None else threads,
    )
