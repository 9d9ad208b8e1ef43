"""Canonical JSON serialization and schema validation for CLI reports.

Every emitted document validates against a schema shipped with the
package, and serialization is canonical (sorted keys, fixed separators)
so identical runs produce byte-identical outputs.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def pretty_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


@lru_cache(maxsize=None)
def _schema(name: str) -> dict:
    text = resources.files("eyescreen.schemas").joinpath(f"{name}.json").read_text("utf-8")
    return json.loads(text)


def validate(name: str, obj: dict) -> dict:
    """Validate `obj` against the named schema; returns it unchanged."""
    jsonschema.validate(obj, _schema(name))
    return obj
