"""Experiment configuration: JSON schema, loading with located diagnostics, and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import jsonschema

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}
_vec = {"type": "array", "items": _num, "minItems": 1}

SYSTEM_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "julia"}, "c_re": _num, "c_im": _num},
            "required": ["kind", "c_re", "c_im"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "similarity2d"},
                "maps": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "object",
                        "properties": {
                            "ratio": _pos,
                            "angle_rad": _num,
                            "translation": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                        },
                        "required": ["ratio", "translation"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["kind", "maps"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "similarity1d"},
                "maps": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "object",
                        "properties": {"ratio": _pos, "translation": _num},
                        "required": ["ratio", "translation"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["kind", "maps"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "similarity"},
                "d": {"type": "integer", "minimum": 1},
                "maps": {
                    "type": "array",
                    "minItems": 2,
                    "items": {
                        "type": "object",
                        "properties": {
                            "ratio": _pos,
                            "rotation": {"type": "array", "items": _vec},
                            "translation": _vec,
                        },
                        "required": ["ratio", "translation"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["kind", "d", "maps"],
            "additionalProperties": False,
        },
    ]
}

POTENTIAL_SCHEMA = {
    "oneOf": [
        {"type": "object", "properties": {"kind": {"const": "bernoulli"}, "p": _vec},
         "required": ["kind", "p"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "constant"}, "c": _num, "m": {"type": "integer", "minimum": 2}},
         "required": ["kind", "c"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "markov"}, "table": {"type": "array", "items": _vec}},
         "required": ["kind", "table"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "geometric"}, "s": {"oneOf": [_num, {"const": "bowen"}]}},
         "required": ["kind", "s"], "additionalProperties": False},
    ]
}

R_GRID_SCHEMA = {
    "type": "object",
    "properties": {"r_max": _pos, "r_min": _pos, "count": {"type": "integer", "minimum": 4}, "geometric": {"type": "boolean"}},
    "required": ["r_max", "r_min", "count"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "system": SYSTEM_SCHEMA,
        "potential": POTENTIAL_SCHEMA,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "sampling": {
            "type": "object",
            "properties": {"N": _posint, "depth": _posint, "q": _posint, "write_cloud": {"type": "boolean"}},
            "required": ["N"],
            "not": {"required": ["depth", "q"]},
            "additionalProperties": False,
        },
        "r_grid": R_GRID_SCHEMA,
        "validate": {
            "type": "object",
            "properties": {"n_samples": _posint, "n_triples": _posint, "orbit_N": {"type": "integer", "minimum": 16}},
            "additionalProperties": False,
        },
        "pressure": {
            "type": "object",
            "properties": {"n_max": {"type": "integer", "minimum": 2}, "bowen": {"type": "boolean"}},
            "additionalProperties": False,
        },
        "gibbs": {
            "type": "object",
            "properties": {
                "levels": {"type": "integer", "minimum": 1},
                "qs": {"type": "array", "items": _posint, "minItems": 1},
            },
            "additionalProperties": False,
        },
        "orbit": {
            "type": "object",
            "properties": {
                "period": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "prefix": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "random_tail": {"type": "boolean"},
                "N": {"type": "integer", "minimum": 16},
                "depth": _posint,
            },
            "required": ["N"],
            "additionalProperties": False,
        },
        "eq": {
            "type": "object",
            "properties": {
                "qs": {"type": "array", "items": _posint, "minItems": 1},
                "n_rotations": {"type": "integer", "minimum": 8},
                "k": _posint,
                "beta_ref": _num,
            },
            "required": ["qs"],
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "angles": {"oneOf": [_posint, _vec]},
                "k": _posint,
                "beta_ref": _num,
            },
            "required": ["angles"],
            "additionalProperties": False,
        },
        "distance": {
            "type": "object",
            "properties": {
                "pin": _vec,
                "pin_word": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "eps": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["system", "seed"],
    "additionalProperties": False,
}

SUBCOMMAND_NEEDS = {
    "validate": [],
    "pressure": ["potential"],
    "gibbs-check": ["potential"],
    "dimension": ["potential", "sampling"],
    "orbit": ["orbit"],
    "eq": ["potential", "sampling", "eq"],
    "sweep": ["potential", "sampling", "sweep", "r_grid"],
    "distance": ["potential", "sampling", "distance"],
}


class ConfigError(ValueError):
    """A configuration that cannot be used, with a located message."""


def _line_of(text: str, path) -> int | None:
    """Best-effort line number of the innermost key on ``path`` in the JSON text."""
    pos, line = 0, None
    for part in path:
        if isinstance(part, str):
            k = text.find(f'"{part}"', pos)
            if k < 0:
                break
            pos = k
            line = text.count("\n", 0, k) + 1
    return line


def _explain(err):
    """For a failed oneOf over ``kind`` variants, the errors of the variant that was meant."""
    if err.validator != "oneOf" or not isinstance(err.instance, dict) or not err.context:
        return [err]
    branches: dict = {}
    for sub in err.context:
        branches.setdefault(sub.schema_path[0], []).append(sub)
    meant = [b for b in branches.values() if not any(list(s.relative_path) == ["kind"] for s in b)]
    if len(meant) != 1:
        kinds = sorted({s.schema["const"] for s in err.context if s.validator == "const"})
        err.message = f"unknown kind {err.instance.get('kind')!r}; expected one of {', '.join(kinds)}"
        return [err]
    return [leaf for s in meant[0] for leaf in _explain(s)]


def load_config(path, subcommand: str | None = None, seed: int | None = None) -> dict:
    """Parse and validate a config file; ``seed`` overrides the file's seed."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from exc
    if seed is not None:
        if isinstance(cfg, dict):
            cfg["seed"] = int(seed)
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg), key=lambda e: list(e.path))
    if errors:
        lines = []
        for e in (leaf for err in errors for leaf in _explain(err)):
            field = ".".join(str(p) for p in e.absolute_path) or "<root>"
            ln = _line_of(text, list(e.absolute_path))
            where = f"{path}:{ln}" if ln else str(path)
            lines.append(f"{where}: field '{field}': {e.message}")
        raise ConfigError("\n".join(lines))
    if subcommand is not None:
        missing = [k for k in SUBCOMMAND_NEEDS[subcommand] if k not in cfg]
        if missing:
            raise ConfigError(f"{path}: subcommand '{subcommand}' needs field(s): {', '.join(missing)}")
    return cfg


def digest(cfg: dict) -> str:
    """sha256 of the canonical JSON form (sorted keys, no whitespace)."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def fmt(v) -> str:
    """Shortest round-trip text for numbers; everything else via str."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float,)) or type(v).__name__.startswith("float"):
        f = float(v)
        if math.isnan(f):
            return "nan"
        return repr(f)
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    import numpy as np

    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
