import pytest

from backhaul_rate_split import config, experiments
from backhaul_rate_split.config import (
    CONFIG,
    DEFAULT_CONFIG_VARS,
    get_config,
    get_config_dir,
    qnm_options,
    region_options,
    set_config_dir,
)
from backhaul_rate_split.qnm import QnmOptions
from backhaul_rate_split.region import CornerOrder, RegionOptions


@pytest.fixture
def config_dir(tmp_path):
    previous = get_config_dir()
    set_config_dir(tmp_path)
    get_config(reload=True)
    yield tmp_path
    assert previous is not None
    set_config_dir(previous)
    get_config(reload=True)


def test_default_config_created(config_dir):
    assert get_config() == DEFAULT_CONFIG_VARS
    assert (config_dir / CONFIG).is_file()


def test_renamed_and_invalid_keys(config_dir):
    (config_dir / CONFIG).write_text("tol_r: 0.01\nthreads: -1\nbogus: 1\n")
    config = get_config(reload=True)
    assert config is not None
    assert config["tol_bisect"] == 0.01
    assert config["threads"] == 1
    assert "bogus" not in config and "tol_r" not in config


def test_invalid_values_fall_back(config_dir):
    (config_dir / CONFIG).write_text(
        "corner_order: random\nexport_format: pdf\ngrid_points: 3\nsolver_tol: true\n"
    )
    config = get_config(reload=True)
    assert config is not None
    assert config["corner_order"] == "private-first"
    assert config["export_format"] == "csv"
    assert config["grid_points"] == 3
    assert config["solver_tol"] == 1e-8


def test_broken_yaml(config_dir):
    (config_dir / CONFIG).write_text("tol_rate: [\n")
    with pytest.raises(SystemExit):
        get_config(reload=True)


def test_options_from_defaults():
    assert region_options(DEFAULT_CONFIG_VARS) == RegionOptions()
    assert qnm_options(DEFAULT_CONFIG_VARS) == QnmOptions()


def test_options_overrides():
    config = {**DEFAULT_CONFIG_VARS, "corner_order": "shared-first", "threads": 3}
    opts = region_options(config, seed=5, threads=2)
    assert opts.corner_order == CornerOrder.SHARED_FIRST
    assert opts.threads == 2
    assert opts.solver.seed == 5
    assert qnm_options(config).threads == 3


def test_export_formats_shared_with_writer():
    assert config.EXPORT_FORMATS is experiments.EXPORT_FORMATS
