"""Tolerance configuration loaded from quatpolar.yaml."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from quatpolar.errors import InvalidInputError

SCHEMA_RESOURCE = "ontology/quatpolar.schema.yaml"

DEFAULT_CONFIG: dict[str, Any] = {
    "rank_tol": 1e-10,
    "residual_tol": 1e-8,
    "cluster_radius": 1e-7,
    "cond_cap": 1e6,
    "max_resample": 20,
}


@dataclass(frozen=True)
class Tolerance:
    rank_tol: float = 1e-10
    residual_tol: float = 1e-8
    cluster_radius: float = 1e-7
    cond_cap: float = 1e6
    max_resample: int = 20

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not value > 0:
                raise InvalidInputError(f"tolerance field {name} must be positive, got {value}")

    def with_overrides(self, **overrides: float | None) -> Tolerance:
        """Returns a copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes) if changes else self


def load_schema() -> dict:
    """The Config and MatrixFile schemas shipped inside the package."""
    return yaml.safe_load(resources.files("quatpolar").joinpath(SCHEMA_RESOURCE).read_text())


def get_config_file() -> Path:
    env_path = os.environ.get("QUATPOLAR_CONFIG")
    if env_path:
        return Path(env_path)
    return Path.cwd() / "quatpolar.yaml"


def load_config() -> dict[str, Any]:
    """Loads quatpolar.yaml (or QUATPOLAR_CONFIG) and validates it against the schema."""
    schema = load_schema()
    config_file = get_config_file()
    if not config_file.exists():
        jsonschema.validate(instance=DEFAULT_CONFIG, schema=schema["properties"]["Config"])
        return dict(DEFAULT_CONFIG)

    with open(config_file) as f:
        loaded = yaml.safe_load(f) or {}

    try:
        jsonschema.validate(instance=loaded, schema=schema["properties"]["Config"])
    except jsonschema.ValidationError as e:
        raise InvalidInputError(f"invalid config {config_file}: {e.message}") from e

    return {**DEFAULT_CONFIG, **loaded}


def load_tolerance() -> Tolerance:
    return Tolerance(**load_config())
