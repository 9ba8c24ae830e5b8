from importlib import resources

import pytest

from quatpolar.config import (
    DEFAULT_CONFIG,
    SCHEMA_RESOURCE,
    Tolerance,
    get_config_file,
    load_config,
    load_schema,
    load_tolerance,
)
from quatpolar.errors import InvalidInputError


def test_defaults_without_config_file(isolated_config):
    assert not isolated_config.exists()
    assert load_config() == DEFAULT_CONFIG
    assert load_tolerance() == Tolerance()


def test_env_var_selects_config_file(isolated_config):
    assert get_config_file() == isolated_config
    isolated_config.write_text("cluster_radius: 1.0e-5\nmax_resample: 3\n")
    config = load_config()
    assert config["cluster_radius"] == 1e-5
    assert config["max_resample"] == 3
    assert config["rank_tol"] == DEFAULT_CONFIG["rank_tol"]
    assert load_tolerance().max_resample == 3


def test_cwd_fallback(monkeypatch, tmp_path):
    monkeypatch.delenv("QUATPOLAR_CONFIG")
    monkeypatch.chdir(tmp_path)
    assert get_config_file() == tmp_path / "quatpolar.yaml"


def test_empty_config_file(isolated_config):
    isolated_config.write_text("")
    assert load_config() == DEFAULT_CONFIG


@pytest.mark.parametrize(
    "content",
    ["rank_tol: 0\n", "unknown_key: 1\n", "max_resample: 1.5\n", "cond_cap: 0.5\n"],
)
def test_invalid_config(isolated_config, content):
    isolated_config.write_text(content)
    with pytest.raises(InvalidInputError, match="invalid config"):
        load_config()


def test_tolerance_validation():
    with pytest.raises(InvalidInputError):
        Tolerance(rank_tol=0.0)
    with pytest.raises(InvalidInputError):
        Tolerance().with_overrides(residual_tol=-1.0)


def test_tolerance_overrides_skip_none():
    tol = Tolerance()
    assert tol.with_overrides(rank_tol=None) is tol
    assert tol.with_overrides(rank_tol=1e-6, cluster_radius=None) == Tolerance(rank_tol=1e-6)


def test_schema_ships_with_the_package(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    assert resources.files("quatpolar").joinpath(SCHEMA_RESOURCE).is_file()
    schema = load_schema()
    assert {"Config", "MatrixFile"} <= set(schema["properties"])
    assert load_config() == DEFAULT_CONFIG
