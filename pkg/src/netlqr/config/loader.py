# src/netlqr/config/loader.py
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import pydantic
import yaml

from netlqr.config.models import ExperimentConfig
from netlqr.exceptions import ParseError, ValidationError

logger = logging.getLogger(__name__)


def _format_errors(exc: pydantic.ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def config_from_dict(data: dict[str, Any], source: str = "<dict>") -> ExperimentConfig:
    """Validate already-parsed config data."""
    try:
        return ExperimentConfig.model_validate(data)
    except pydantic.ValidationError as e:
        raise ValidationError(f"Invalid config {source}: {_format_errors(e)}") from e


def parse_config(path: str | Path) -> ExperimentConfig:
    """
    Read a YAML experiment config and validate it.

    Raises:
        ParseError: the file is missing or is not well-formed YAML (carries line and column).
        ValidationError: the document does not match the schema (lists each failing field path).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"Failed to read config {path}: {e}") from e
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark is not None else "unknown position"
        raise ParseError(f"Failed to parse {path} at {where}: {e.problem}") from e
    except yaml.YAMLError as e:
        raise ParseError(f"Failed to parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ParseError(f"Config {path} must be a mapping at the top level")
    config = config_from_dict(data, str(path))
    logger.info("Loaded config '%s' from %s (mode=%s)", config.name, path, config.mode.value)
    return config


def dump_config(config: ExperimentConfig, path: str | Path) -> Path:
    """Write the resolved config, defaults included, as YAML."""
    path = Path(path)
    path.write_text(yaml.safe_dump(config.echo(), sort_keys=False), encoding="utf-8")
    return path
