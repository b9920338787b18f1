"""Document (de)serialisation: POVMs, symmetric states, configs and CSV tables.

Complex numbers are written as ``[re, im]`` pairs.  Config documents are YAML
(JSON documents parse as well).
"""
from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidInput
from .povm import Povm
from .states import SymmetricState


def _pair(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _complex(pair) -> complex:
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise InvalidInput(f"complex entries must be [re, im] pairs, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def povm_to_dict(povm: Povm) -> dict:
    return {
        "effects": [[[_pair(z) for z in row] for row in e] for e in povm.effects],
        "values": [float(v) for v in povm.values],
    }


def povm_from_dict(doc: dict) -> Povm:
    try:
        effects = np.array([[[_complex(z) for z in row] for row in e] for e in doc["effects"]])
        values = np.array([float(v) for v in doc["values"]])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"malformed POVM document: {exc}") from None
    return Povm(effects, values)


def symmetric_to_dict(state: SymmetricState) -> dict:
    return {"two_j": state.two_j, "coeffs": [_pair(z) for z in state.coeffs]}


def symmetric_from_dict(doc: dict, normalize: bool = False) -> SymmetricState:
    try:
        two_j = int(doc["two_j"])
        coeffs = np.array([_complex(z) for z in doc["coeffs"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed symmetric-state document: {exc}") from None
    if normalize:
        coeffs = coeffs / np.linalg.norm(coeffs)
    return SymmetricState(two_j, coeffs)


def load_document(path) -> dict:
    """Read a YAML/JSON document; OSError propagates with the path attached."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidInput(f"{path}: not a valid YAML/JSON document ({exc})") from None
    if not isinstance(doc, dict):
        raise InvalidInput(f"{path}: top level must be a mapping")
    return doc


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def csv_text(header, rows, config: dict | None = None) -> str:
    """Comma-separated, LF-terminated table; the config (if any) goes in a leading ``#`` line."""
    buf = _io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config, sort_keys=True, default=_json_default) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v
