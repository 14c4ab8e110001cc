import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from wclab.cli.args import COMMANDS, CommonArgs
from wclab.core.errors import ConfigError


@dataclass
class ExperimentConfig:
    """`{"command": ..., "params": {...}}` where params are fields of the command's Args."""

    command: str
    params: dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def load(path: Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must hold a JSON object")
        unknown = set(data) - {"command", "params"}
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        if "command" not in data:
            raise ConfigError(f"Config {path} has no command")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("Config params must be a JSON object")
        config = ExperimentConfig(command=data["command"], params=params)
        config.validate()
        return config

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command: {self.command}")
        cls = COMMANDS[self.command]
        hints = typing.get_type_hints(cls, include_extras=True)
        names = {f.name for f in dataclasses.fields(cls)}
        for key, value in self.params.items():
            if key not in names:
                raise ConfigError(f"Unknown parameter for {self.command}: {key}")
            if key == "config":
                raise ConfigError("Configs cannot nest other configs")
            if not _accepts(hints[key], value):
                raise ConfigError(f"Parameter {key} = {value!r} does not match type {hints[key]}")

    def defaults(self) -> CommonArgs:
        """Args instance with the config values, used as the default of the flag parser."""
        cls = COMMANDS[self.command]
        hints = typing.get_type_hints(cls)
        values = {key: _convert(hints[key], value) for key, value in self.params.items()}
        return cls(**values)


def _strip(hint):
    # Annotated[X, ...] -> X
    while typing.get_origin(hint) is typing.Annotated:
        hint = typing.get_args(hint)[0]
    return hint


def _accepts(hint, value) -> bool:
    hint = _strip(hint)
    origin = typing.get_origin(hint)
    if hint is Any:
        return True
    if origin in (typing.Union, types.UnionType):
        return any(_accepts(arg, value) for arg in typing.get_args(hint))
    if hint is type(None):
        return value is None
    if origin is Literal:
        return value in typing.get_args(hint)
    if origin is tuple:
        args = typing.get_args(hint)
        return isinstance(value, list) and all(_accepts(args[0], v) for v in value)
    if hint is bool:
        return isinstance(value, bool)
    if hint is int:
        return isinstance(value, int) and not isinstance(value, bool)
    if hint is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if hint is str:
        return isinstance(value, str)
    if hint is Path:
        return isinstance(value, str)

    raise ConfigError(f"Unsupported parameter type: {hint}")


def _convert(hint, value):
    hint = _strip(hint)
    if value is None:
        return None
    if isinstance(value, list):
        return tuple(value)
    if hint is Path or Path in typing.get_args(hint):
        return Path(value)
    if hint is float or (float in typing.get_args(hint) and not isinstance(value, bool)):
        return float(value) if isinstance(value, int) else value
    return value
