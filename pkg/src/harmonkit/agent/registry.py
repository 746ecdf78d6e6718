"""Tool registry: named, described, schema-validated wrappers over the primitives."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Any, Callable

from ..errors import ToolError

_JSON_TYPES = {
    "string": str,
    "integer": int,
    "number": (int, float),
    "boolean": bool,
    "array": list,
    "object": dict,
}


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    parameters: dict
    func: Callable[..., Any]


class ToolRegistry:
    def __init__(self):
        self._tools: dict[str, ToolSpec] = {}

    def register(self, spec: ToolSpec) -> None:
        if spec.name in self._tools:
            raise ToolError(f"duplicate tool name {spec.name!r}")
        self._tools[spec.name] = spec

    def get(self, name: str) -> ToolSpec:
        try:
            return self._tools[name]
        except KeyError:
            raise ToolError(f"unknown tool {name!r}") from None

    def names(self) -> list[str]:
        return list(self._tools)

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def validate_args(self, name: str, args: dict) -> None:
        spec = self.get(name)
        properties = spec.parameters.get("properties", {})
        for required in spec.parameters.get("required", []):
            if required not in args:
                raise ToolError(f"tool {name!r}: missing required argument {required!r}")
        for key, value in args.items():
            if key not in properties:
                raise ToolError(f"tool {name!r}: unknown argument {key!r}")
            expected = _JSON_TYPES.get(properties[key].get("type", ""))
            if expected is not None and not isinstance(value, expected):
                raise ToolError(
                    f"tool {name!r}: argument {key!r} must be {properties[key]['type']}"
                )

    def invoke(self, session, name: str, args: dict, reviewer=None):
        spec = self.get(name)
        self.validate_args(name, args)
        return spec.func(session, args, reviewer)


def load_tool_descriptions() -> dict[str, dict]:
    """Tool descriptions and parameter schemas from the versioned resource file."""
    text = resources.files("harmonkit.agent").joinpath("resources/tools.json").read_text("utf-8")
    doc = json.loads(text)
    return {tool["name"]: tool for tool in doc["tools"]}


def _wrap(method_name: str, pass_reviewer: bool = False):
    def func(session, args: dict, reviewer=None):
        method = getattr(session, method_name)
        if pass_reviewer:
            return method(reviewer=reviewer, **args)
        return method(**args)

    return func


_TOOL_IMPLS = {
    "load_table": _wrap("load_table"),
    "match_schema": _wrap("match_schema"),
    "top_matches": _wrap("top_matches"),
    "match_values": _wrap("match_values"),
    "domain_of": _wrap("domain_of"),
    "review_column_matches": _wrap("review_column_matches", pass_reviewer=True),
    "review_value_matches": _wrap("review_value_matches", pass_reviewer=True),
    "build_spec": _wrap("build_spec"),
    "validate_spec": _wrap("validate_spec"),
    "materialize_mapping": _wrap("materialize_mapping"),
    "union_tables": _wrap("union_tables"),
    "write_table": _wrap("write_table"),
}


def build_default_registry() -> ToolRegistry:
    descriptions = load_tool_descriptions()
    missing = set(_TOOL_IMPLS) - set(descriptions)
    if missing:
        raise ToolError(f"tools without descriptions: {sorted(missing)}")
    registry = ToolRegistry()
    for name, impl in _TOOL_IMPLS.items():
        entry = descriptions[name]
        registry.register(
            ToolSpec(
                name=name,
                description=entry["description"],
                parameters=entry["parameters"],
                func=impl,
            )
        )
    return registry
