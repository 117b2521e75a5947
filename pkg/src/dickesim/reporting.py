"""Config parsing and deterministic report rendering for the CLI.

Reports never embed wall-clock data; identical (config, seed) runs must be
byte-identical.
"""
from __future__ import annotations

import json
from typing import Any, Sequence


class ConfigError(ValueError):
    """Malformed or unknown configuration input (CLI exit code 2)."""


def parse_config_text(text: str) -> dict:
    """Parse a config file: JSON object, or key = value lines.

    In the key=value form, blank lines and '#' comments are skipped and
    '[section]' lines are grouping markers only; keys stay flat and unique.
    Values are parsed as JSON literals when possible, else kept as strings.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON config: {err}") from None
    params: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno} is not 'key = value': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {lineno} has an empty key")
        if key in params:
            raise ConfigError(f"duplicate config key {key!r}")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def validate_keys(params: dict, allowed: Sequence[str], command: str) -> None:
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown config keys for {command}: {unknown}; allowed: {sorted(allowed)}")


def fmt_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    return str(value)


def complex_matrix_json(matrix) -> list:
    """Row-major nested lists of [real, imag] pairs."""
    return [[[float(x.real), float(x.imag)] for x in row] for row in matrix]


def render_json(meta: dict, data: dict) -> str:
    return json.dumps({"meta": meta, **data}, indent=2, sort_keys=True) + "\n"


def render_csv(meta: dict, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    lines = [f"# {key}={fmt_value(value)}" for key, value in sorted(_flatten(meta).items())]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt_value(cell) for cell in row))
    return "\n".join(lines) + "\n"


def _flatten(meta: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in meta.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, prefix=f"{name}."))
        else:
            flat[name] = value if not isinstance(value, list) else json.dumps(value)
    return flat
