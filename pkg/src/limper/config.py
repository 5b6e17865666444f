"""Flat key=value configuration files for the construction runs.

The on-disk format is one ``key = value`` pair per line, ``#`` comments,
and no sections; keys mirror the fields of the construction config
dataclasses plus the run-level scalars (construction tag, epsilon).
Values are parsed by the target field's type, so the same file drives
either construction and round-trips through format_config unchanged.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .construct_a import ConstructAConfig
from .construct_b import ConstructBConfig

#: Keys consumed by the runner itself rather than a config dataclass.
RUN_KEYS = ("construction", "eps")


def parse_config_text(text: str) -> dict[str, str]:
    """Raw key=value mapping from config text; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key in {raw!r}")
        out[key] = value.strip()
    return out


def _coerce(name: str, text: str, typ: type):
    if typ is int:
        return int(text)
    if typ is float:
        return float(text)
    if typ is str:
        return text
    raise ValueError(f"key {name}: unsupported field type {typ!r}")


def config_from_mapping(mapping: dict[str, str], construction: str):
    """Build the matching config dataclass from a raw mapping.

    Unknown keys (beyond the run-level ones) are rejected so typos fail
    loudly instead of silently running defaults.
    """
    cls = ConstructAConfig if construction.upper() == "A" else ConstructBConfig
    by_name = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in mapping.items():
        if key in RUN_KEYS:
            continue
        if key not in by_name:
            raise ValueError(f"unknown config key {key!r} for construction {construction}")
        f = by_name[key]
        typ = {"int": int, "float": float, "str": str}.get(str(f.type), f.type)
        kwargs[key] = _coerce(key, value, typ)
    return cls(**kwargs)


def load_config_file(path: str | Path, construction: str):
    """Parse a config file into the matching config dataclass."""
    return config_from_mapping(parse_config_text(Path(path).read_text()), construction)


def format_config(config, extra: dict | None = None) -> str:
    """Render a config dataclass (plus run-level keys) as key=value text."""
    lines = []
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    for f in fields(config):
        lines.append(f"{f.name} = {getattr(config, f.name)}")
    return "\n".join(lines) + "\n"


def config_echo(config, extra: dict | None = None) -> dict[str, str]:
    """String mapping of a config, as embedded in stage files."""
    echo = {key: str(value) for key, value in (extra or {}).items()}
    echo.update({f.name: str(getattr(config, f.name)) for f in fields(config)})
    return echo
