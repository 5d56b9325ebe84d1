"""JSON spec documents and deterministic report output."""

from __future__ import annotations

import json
import math
from typing import Any, Union

import numpy as np

from .errors import InvariantViolation, ParseError
from .measures import DiscreteMeasure, HalfPlaneAtom, example_family_measure
from .systems import DiagonalSystem

Spec = Union[DiscreteMeasure, DiagonalSystem]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _pair(value: Any, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value, 0.0)
    if not isinstance(value, list) or len(value) != 2:
        raise ParseError(f"{where}: expected [re, im], got {value!r}")
    return complex(_number(value[0], f"{where}[0]"), _number(value[1], f"{where}[1]"))


def _parse_measure(doc: dict) -> DiscreteMeasure:
    if doc.get("d", 1) != 1:
        raise ParseError(f"d: only the half-plane (d = 1) is supported, got {doc['d']!r}")
    atoms = doc["atoms"]
    if not isinstance(atoms, list):
        raise ParseError("atoms: expected a list")
    out = []
    for k, entry in enumerate(atoms):
        if not isinstance(entry, dict):
            raise ParseError(f"atoms[{k}]: expected an object")
        missing = [key for key in ("x", "t", "w") if key not in entry]
        if missing:
            raise ParseError(f"atoms[{k}]: missing field(s) {', '.join(missing)}")
        x, t, w = (_number(entry[key], f"atoms[{k}].{key}") for key in ("x", "t", "w"))
        try:
            out.append(HalfPlaneAtom(x, t, w))
        except InvariantViolation as exc:
            raise InvariantViolation(f"atoms[{k}]: {exc}") from None
    return DiscreteMeasure(tuple(out))


def _parse_system(doc: dict) -> DiagonalSystem:
    if "q" not in doc:
        raise ParseError("q: missing state exponent")
    q = _number(doc["q"], "q")
    modes = doc["modes"]
    if not isinstance(modes, list):
        raise ParseError("modes: expected a list")
    lambdas, bs = [], []
    for k, mode in enumerate(modes):
        if not isinstance(mode, dict) or "lambda" not in mode or "b" not in mode:
            raise ParseError(f"modes[{k}]: expected an object with 'lambda' and 'b'")
        lam = _pair(mode["lambda"], f"modes[{k}].lambda")
        if not lam.real > 0:
            raise InvariantViolation(f"modes[{k}].lambda: real part must be positive, got {lam}")
        lambdas.append(lam)
        bs.append(_pair(mode["b"], f"modes[{k}].b"))
    return DiagonalSystem(tuple(lambdas), tuple(bs), q)


def _parse_family(doc: dict) -> DiscreteMeasure:
    if doc["family"] != "example-e":
        raise ParseError(f"family: unknown family {doc['family']!r}")
    for key in ("epsilon", "gamma", "N"):
        if key not in doc:
            raise ParseError(f"{key}: missing family parameter")
    n = doc["N"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ParseError(f"N: expected an integer, got {n!r}")
    if "q" in doc and not _number(doc["q"], "q") > 1:
        raise InvariantViolation(f"q: must exceed 1, got {doc['q']}")
    return example_family_measure(_number(doc["epsilon"], "epsilon"), _number(doc["gamma"], "gamma"), n)


def load_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level: expected a JSON object")
    return doc


def parse_spec(text: str) -> Spec:
    """Parse a measure, system or family document."""
    doc = load_document(text)
    if "atoms" in doc:
        return _parse_measure(doc)
    if "modes" in doc:
        return _parse_system(doc)
    if "family" in doc:
        return _parse_family(doc)
    raise ParseError("top level: expected one of 'atoms', 'modes' or 'family'")


def to_document(obj: Spec) -> dict:
    if isinstance(obj, DiscreteMeasure):
        return {"atoms": [{"x": a.x, "t": a.t, "w": a.w} for a in obj.atoms]}
    if isinstance(obj, DiagonalSystem):
        return {
            "q": obj.q,
            "modes": [{"lambda": [lam.real, lam.imag], "b": [b.real, b.imag]}
                      for lam, b in zip(obj.lambdas, obj.b)],
        }
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def serialize(obj: Spec) -> str:
    return dumps(to_document(obj))


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def dumps(report: Any) -> str:
    """Stable JSON: sorted keys, fixed indentation, non-finite floats as strings."""
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"

