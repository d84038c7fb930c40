"""JSON scenario documents: schema, loader, and the two built-in worked examples."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from . import utility
from .errors import ScenarioError
from .market import (
    BackgroundRisk,
    LossDistribution,
    MarketScenario,
    Piece,
    TruncatedExponential,
    TruncatedPareto,
    Uniform,
)

_NUM = {"type": "number"}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["loss", "background", "w", "eta", "tau", "utility"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "loss": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "atoms": {"type": "array", "items": _PAIR},
                "pieces": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["lo", "hi", "kernel", "weight"],
                        "additionalProperties": False,
                        "properties": {
                            "lo": _NUM,
                            "hi": _NUM,
                            "weight": _NUM,
                            "kernel": {
                                "type": "object",
                                "required": ["kind"],
                                "properties": {
                                    "kind": {"enum": ["uniform", "truncated_pareto", "truncated_exponential"]},
                                    "scale": _NUM,
                                    "shape": _NUM,
                                    "rate": _NUM,
                                },
                                "additionalProperties": False,
                            },
                        },
                    },
                },
                "M": _NUM,
            },
        },
        "background": {
            "type": "object",
            "required": ["points"],
            "additionalProperties": False,
            "properties": {"points": {"type": "array", "items": _PAIR, "minItems": 1}},
        },
        "w": _NUM,
        "eta": _NUM,
        "tau": _NUM,
        "utility": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["power", "log", "exponential"]},
                "params": {"type": "object", "additionalProperties": _NUM},
            },
        },
    },
}


def _json_path(error: jsonschema.ValidationError) -> str:
    out = ""
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


def _kernel(block: dict, path: str):
    kind = block["kind"]
    try:
        if kind == "uniform":
            return Uniform()
        if kind == "truncated_pareto":
            return TruncatedPareto(float(block["scale"]), float(block["shape"]))
        return TruncatedExponential(float(block["rate"]))
    except KeyError as exc:
        raise ScenarioError(f"{path}.{exc.args[0]}", "missing kernel parameter") from None
    except ScenarioError as exc:
        raise ScenarioError(f"{path}.{exc.path.split('.')[-1]}", exc.reason) from None


def scenario_from_dict(doc: dict) -> MarketScenario:
    """Validate against the schema, then build the scenario (errors carry a field path)."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ScenarioError(_json_path(errors[0]), errors[0].message)
    loss_doc = doc["loss"]
    pieces = tuple(
        Piece(float(p["lo"]), float(p["hi"]), _kernel(p["kernel"], f"loss.pieces[{i}].kernel"), float(p["weight"]))
        for i, p in enumerate(loss_doc.get("pieces", []))
    )
    loss = LossDistribution(
        tuple(tuple(a) for a in loss_doc.get("atoms", [])), pieces, loss_doc.get("M")
    )
    background = BackgroundRisk(tuple(tuple(p) for p in doc["background"]["points"]))
    util = utility.from_dict(doc["utility"])
    return MarketScenario(
        loss, background, float(doc["w"]), float(doc["eta"]), float(doc["tau"]), util,
        name=doc.get("name", ""),
    )


def load_scenario(path) -> MarketScenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError("<file>", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    return scenario_from_dict(doc)


def scenario_to_dict(scenario: MarketScenario) -> dict:
    doc = scenario.to_dict()
    if scenario.name:
        doc["name"] = scenario.name
    if doc["loss"].get("M") is None:
        doc["loss"].pop("M", None)
    return doc


# -- built-in examples --------------------------------------------------------

_PARETO_LOSS = {
    "atoms": [[0.0, 0.1], [10.0, 0.1]],
    "pieces": [
        {"lo": 0.0, "hi": 10.0, "kernel": {"kind": "truncated_pareto", "scale": 10.0, "shape": 3.0}, "weight": 0.8}
    ],
}

BUILTIN = {
    # single reserve level; loading at the midpoint of the figure range
    "2": {
        "name": "pareto-single-reserve",
        "loss": _PARETO_LOSS,
        "background": {"points": [[5.0, 1.0]]},
        "w": 15.0,
        "eta": 0.2,
        "tau": 1.0,
        "utility": {"kind": "power", "params": {"gamma": 0.5}},
    },
    # two-point reserve shock
    "4": {
        "name": "pareto-two-state-reserve",
        "loss": _PARETO_LOSS,
        "background": {"points": [[2.0, 0.1], [8.0, 0.9]]},
        "w": 15.0,
        "eta": 0.1,
        "tau": 1.0,
        "utility": {"kind": "power", "params": {"gamma": 0.5}},
    },
}


def builtin_scenario(example_id) -> MarketScenario:
    key = str(example_id)
    if key not in BUILTIN:
        raise ScenarioError("example", f"unknown example id {example_id!r}; choose from {sorted(BUILTIN)}")
    return scenario_from_dict(json.loads(json.dumps(BUILTIN[key])))
