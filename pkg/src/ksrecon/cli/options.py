"""Resolution of command options: command-line flag, then ``--config`` file, then default."""

import argparse
import math
from enum import Enum
from typing import Any, Callable, Mapping

from ksrecon.errors import ConfigurationError
from ksrecon.settings import merge_overrides, read_flat_config

REQUIRED = object()


def parse_float(text: Any) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    lowered = str(text).strip().lower()
    if lowered in {"inf", "+inf", "infinity"}:
        return math.inf
    try:
        return float(lowered)
    except ValueError as e:
        raise ConfigurationError(f"Expected a number, got '{text}'") from e


def parse_int(text: Any) -> int:
    try:
        return int(text)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Expected an integer, got '{text}'") from e


def parse_bool(text: Any) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ConfigurationError(f"Expected a boolean, got '{text}'")


def parse_enum(enum_cls: type[Enum]) -> Callable[[Any], Any]:
    def parse(text: Any) -> Any:
        try:
            return enum_cls(text)
        except ValueError as e:
            choices = ", ".join(m.value for m in enum_cls)
            raise ConfigurationError(f"Expected one of {choices}, got '{text}'") from e

    return parse


def parse_dims(ndim: int) -> Callable[[Any], tuple[int, ...]]:
    def parse(text: Any) -> tuple[int, ...]:
        if isinstance(text, tuple):
            return text
        try:
            dims = tuple(int(v) for v in str(text).lower().split("x"))
        except ValueError as e:
            raise ConfigurationError(f"Dims must look like {'x'.join(['64'] * ndim)}, got '{text}'") from e
        if len(dims) != ndim or min(dims) < 0:
            raise ConfigurationError(f"Expected {ndim} non-negative dims, got '{text}'")
        return dims

    return parse


def parse_list(item: Callable[[Any], Any]) -> Callable[[Any], list]:
    def parse(text: Any) -> list:
        if isinstance(text, list):
            return [item(v) for v in text]
        return [item(v) for v in str(text).split(",") if v.strip()]

    return parse


Option = tuple[Callable[[Any], Any], Any]


def resolve(args: argparse.Namespace, options: Mapping[str, Option]) -> dict[str, Any]:
    """Typed option values for one command; missing required options raise ConfigurationError"""
    file_values: dict[str, Any] = {}
    if getattr(args, "config", None):
        file_values = {k.replace("-", "_"): v for k, v in read_flat_config(args.config).items()}
    flags = {k: v for k, v in vars(args).items() if k in options}
    merged = merge_overrides(file_values, flags)

    resolved = {}
    for name, (parse, default) in options.items():
        value = merged.get(name)
        if value is None:
            if default is REQUIRED:
                raise ConfigurationError(f"Missing required option --{name.replace('_', '-')}")
            resolved[name] = default
        else:
            resolved[name] = parse(value)
    return resolved
