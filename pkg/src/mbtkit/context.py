"""Typed variable stores carried along a model traversal."""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from typing import Any, Union

BOOL = "bool"
INT = "int"
STRING = "string"
LIST = "list"
VOID = "void"

VALUE_TYPES = (BOOL, INT, STRING, LIST)

Value = Union[bool, int, str, tuple]


def value_type(value: Any) -> str:
    # bool is a subclass of int, so it has to be tested first
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT
    if isinstance(value, str):
        return STRING
    if isinstance(value, (tuple, list)) and all(isinstance(v, str) for v in value):
        return LIST
    raise TypeError(f"unsupported value {value!r}")


def freeze(value: Any) -> Value:
    """Normalize a value to its immutable representation (lists become tuples)."""
    if isinstance(value, list):
        value = tuple(value)
    value_type(value)
    return value


def thaw(value: Value) -> Any:
    return list(value) if isinstance(value, tuple) else value


class Context(Mapping):
    """An immutable mapping from variable names to values.

    Updates go through :meth:`updated`, which returns a new context and refuses
    to introduce names or to change the type of an existing binding.
    """

    __slots__ = ("_data",)

    def __init__(self, bindings: Mapping[str, Any] | Iterable = ()):
        self._data = {name: freeze(v) for name, v in dict(bindings).items()}

    @classmethod
    def _trusted(cls, data: dict) -> "Context":
        ctx = cls.__new__(cls)
        ctx._data = data
        return ctx

    def __getitem__(self, name):
        return self._data[name]

    def __iter__(self):
        return iter(self._data)

    def __len__(self):
        return len(self._data)

    def __hash__(self):
        return hash(tuple(sorted(self._data.items())))

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in sorted(self._data.items()))
        return f"Context({inner})"

    def types(self) -> dict[str, str]:
        return {name: value_type(v) for name, v in self._data.items()}

    def updated(self, changes: Mapping[str, Any]) -> "Context":
        data = dict(self._data)
        for name, value in changes.items():
            if name not in data:
                raise KeyError(f"undeclared variable {name!r}")
            value = freeze(value)
            if value_type(value) != value_type(data[name]):
                raise TypeError(
                    f"{name!r} is {value_type(data[name])}, cannot bind {value_type(value)}")
            data[name] = value
        return Context._trusted(data)

    def to_json(self) -> dict:
        return {name: thaw(self._data[name]) for name in sorted(self._data)}

    def canonical(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Context":
        return cls(data)
