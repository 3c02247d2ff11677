"""JSON report persistence: shipped schemas, validation and deterministic dumps."""

from __future__ import annotations

import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Union

import jsonschema

from .errors import ConfigurationError, ContractError
from .vsf import atomic_write_bytes

SCHEMAS = ("ladder-v1", "audit-v1", "verdict-v1", "genspec-v1", "scan-v1", "report-v1")


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise ConfigurationError(f"unknown schema {name!r}")
    text = resources.files("nsmorrey").joinpath("schemas", f"{name}.json").read_text("utf-8")
    return json.loads(text)


def validate(doc: dict, name: str = None) -> None:
    """Raise ContractError unless ``doc`` matches its schema (``doc["schema"]`` by default)."""
    name = name or doc.get("schema")
    if name is None:
        raise ContractError("document carries no schema tag")
    try:
        jsonschema.validate(doc, load_schema(name))
    except jsonschema.ValidationError as exc:
        raise ContractError(f"{name} validation failed: {exc.message}") from exc


def to_plain(obj):
    """Convert tuples, numpy scalars and non-finite floats into strict-JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return int(obj)
    if hasattr(obj, "item"):
        obj = obj.item()
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return float(obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(to_plain(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Union[str, Path], doc: dict, check: bool = True) -> None:
    """Validate (when tagged) and write atomically."""
    doc = to_plain(doc)
    if check and "schema" in doc:
        validate(doc)
    atomic_write_bytes(path, [dumps(doc).encode("utf-8")])


def write_text(path: Union[str, Path], text: str) -> None:
    atomic_write_bytes(path, [text.encode("utf-8")])


def read_json(path: Union[str, Path]) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractError(f"{path}: invalid JSON: {exc}") from exc


def _num(x) -> float:
    return math.inf if x == "inf" else float(x)


def merge_reports(docs: Iterable[tuple]) -> dict:
    """Combine ``(name, document)`` pairs into one ``report-v1`` summary.

    Ladders, audits, verdicts and scans are collected in input order; the
    summary keeps the max implied constant per inequality and verdict counts
    per criterion.
    """
    out = {"schema": "report-v1", "inputs": [], "ladders": [], "audits": [], "verdicts": [],
           "scans": []}
    best, counts = {}, {}
    for name, doc in docs:
        validate(doc)
        tag = doc["schema"]
        out["inputs"].append({"name": str(name), "schema": tag})
        if tag == "ladder-v1":
            out["ladders"].append(doc)
        elif tag == "audit-v1":
            out["audits"].append(doc)
            for rec in doc["audits"]:
                c = _num(rec["implied_constant"])
                best[rec["inequality_id"]] = max(best.get(rec["inequality_id"], 0.0), c)
        elif tag in ("verdict-v1", "scan-v1"):
            verdicts = [doc] if tag == "verdict-v1" else [e["verdict"] for e in doc["entries"]]
            (out["verdicts"] if tag == "verdict-v1" else out["scans"]).append(doc)
            for v in verdicts:
                per = counts.setdefault(v["criterion"], {})
                per[v["verdict"]] = per.get(v["verdict"], 0) + 1
        elif tag == "report-v1":
            raise ContractError(f"{name}: nested reports are not merged")
    out["summary"] = {"max_implied_constant": dict(sorted(best.items())),
                      "verdict_counts": {k: dict(sorted(v.items())) for k, v in sorted(counts.items())}}
    return to_plain(out)
