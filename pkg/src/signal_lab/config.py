"""Scenario configuration: JSON schema, bundled defaults, and validation with line numbers."""
from __future__ import annotations

import copy
import json
from importlib import resources
from typing import Any

import jsonschema
import yaml

from .errors import ConfigError

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_ANGLES = {"type": "array", "items": _NUM}
_MATRIX = {
    "oneOf": [
        {"type": "string", "enum": ["x", "y", "z", "i"]},
        {"type": "object", "required": ["real"], "additionalProperties": False,
         "properties": {"real": {"type": "array", "items": _ANGLES},
                        "imag": {"type": "array", "items": _ANGLES}}},
    ]
}

CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "signal-lab scenario configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "theta_a": _NUM,
                "sweep": {"type": "object", "additionalProperties": False,
                          "required": ["start", "stop", "count"],
                          "properties": {"start": _NUM, "stop": _NUM, "count": {"type": "integer", "minimum": 1}}},
                "angles": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                "key_settings": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "alarm_threshold": _NUM,
                "eavesdropper": {
                    "oneOf": [
                        {"type": "null"},
                        {"type": "object", "additionalProperties": False,
                         "properties": {"basis_rule": {"enum": ["fixed", "uniform_random"]},
                                        "theta_e": _NUM,
                                        "fraction": {"type": "number", "minimum": 0, "maximum": 1}}},
                    ]
                },
                "alpha": _NUM,
                "alpha_prime": _NUM,
                "beta": _NUM,
                "kick": _NUM,
                "apparatus_dim": {"type": "integer", "minimum": 1},
                "n_settings": {"type": "integer", "minimum": 1},
                "instance_seed": _INT,
                "settings": {"type": "array", "items": _NUM, "minItems": 1},
                "remote": {"type": "string"},
                "t": _NUM,
                "partition": {"type": "array", "minItems": 2, "maxItems": 2,
                              "items": {"type": "array", "items": {"type": "string"}, "minItems": 1}},
                "sign": {"enum": ["paper", "standard"]},
                "expect_verdict": {"enum": ["invariant", "varies"]},
            },
        },
        "hamiltonian": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["local_sum", "von_neumann", "symmetrized", "bohm_1d"]},
                "lambda": _NUM,
                "hermitization": {"enum": ["momentum_form", "raw_derivative"]},
                "observable_a": _MATRIX,
                "observable_b": _MATRIX,
                "h_a": _MATRIX,
                "h_b": _MATRIX,
                "random_dims": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                "minItems": 2, "maxItems": 2},
                "random_seed": _INT,
                "potential": {"oneOf": [_NUM, _ANGLES]},
            },
        },
        "state": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["entangled_pointer", "schmidt", "gaussian", "plane_wave", "box",
                                  "two_gaussian", "product_gaussian"]},
                "coeffs": _ANGLES,
                "chi": _NUM,
                "pointer_width": _NUM,
                "center": _NUM,
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "k": _NUM,
                "length": {"type": "number", "exclusiveMinimum": 0},
                "separation": _NUM,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points": {"type": "integer", "minimum": 2},
                "spacing": {"type": "number", "exclusiveMinimum": 0},
                "origin": _NUM,
                "boundary": {"enum": ["periodic", "hard_wall"]},
            },
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"n": {"type": "integer", "minimum": 1},
                           "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}},
        },
        "tolerances": {"type": "object", "additionalProperties": _NUM},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"format": {"enum": ["csv", "json"]}, "path": {"type": ["string", "null"]}},
        },
    },
}

_MATRIX_OUT = {"type": "object", "required": ["labels", "dims", "real", "imag"],
               "properties": {"labels": {"type": "array", "items": {"type": "string"}},
                              "dims": {"type": "array", "items": {"type": "integer"}},
                              "real": {"type": "array"}, "imag": {"type": "array"}}}

AUDIT_REPORT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "audit report",
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "settings", "expectations", "marginals", "max_expectation_delta",
                 "max_trace_distance", "verdict"],
    "properties": {
        "scenario": {"type": "string"},
        "settings": {"type": "array"},
        "expectations": {"type": "array", "items": _NUM},
        "marginals": {"type": "array", "items": _MATRIX_OUT},
        "max_expectation_delta": {"type": "number", "minimum": 0},
        "max_trace_distance": {"type": "number", "minimum": 0},
        "verdict": {"enum": ["invariant", "varies"]},
    },
}

_CHECKS = {"type": "array", "items": {"type": "object", "required": ["name", "passed"],
                                      "properties": {"name": {"type": "string"}, "passed": {"type": "boolean"},
                                                     "value": {}, "tolerance": {}}}}


def _result_schema(title: str, required: list[str], props: dict) -> dict:
    return {"$schema": "https://json-schema.org/draft/2020-12/schema", "title": title, "type": "object",
            "required": required + ["checks"], "properties": {**props, "checks": _CHECKS}}


OUTPUT_SCHEMAS: dict[str, dict] = {
    "epr-correlate": _result_schema("correlation sweep", ["theta_a", "n", "seed", "rows"], {
        "theta_a": _NUM, "n": _INT, "seed": _INT,
        "rows": {"type": "array", "items": {"type": "object", "required": [
            "theta_ab", "e_exact", "e_empirical", "minus_cos"]}}}),
    "chsh": _result_schema("CHSH estimate", ["angles", "s_exact"], {
        "angles": _ANGLES, "s_exact": _NUM, "s_empirical": {"type": ["number", "null"]},
        "n": {"type": ["integer", "null"]}, "seed": {"type": ["integer", "null"]}}),
    "qkd": _result_schema("key sifting", ["key_length", "keys_match", "error_rate", "s_estimate", "alarm"], {
        "key_length": _INT, "keys_match": {"type": "boolean"}, "error_rate": _NUM,
        "s_estimate": _NUM, "alarm": {"type": "boolean"}, "eavesdropper": {"type": ["object", "null"]}}),
    "factorize": _result_schema("generator locality", ["hamiltonian", "partition", "locality_defect"], {
        "hamiltonian": {"type": "string"}, "locality_defect": _NUM, "frobenius_norm": _NUM,
        "factorization_residual": {"type": ["number", "null"]}, "t": _NUM}),
    "qpotential": _result_schema("quantum potential", ["dimension", "sign", "q_min", "q_max", "masked_points"], {
        "dimension": _INT, "sign": {"enum": ["paper", "standard"]}, "q_min": _NUM, "q_max": _NUM,
        "masked_points": _INT, "additivity_defect": {"type": ["number", "null"]}}),
    "audit": AUDIT_REPORT_SCHEMA,
}

DEFAULT_TOLERANCES = {
    "exact": 1e-12,
    "sigmas": 5.0,
    "invariance": 1e-9,
    "factorization": 1e-9,
    "locality": 1e-12,
    "relative": 0.01,
}


def _line_of(text: str, path) -> int | None:
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if node is None:
            break
        child = None
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == key:
                    child = v
                    line = k.start_mark.line + 1
                    break
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            child = node.value[key]
            line = child.start_mark.line + 1
        node = child
    return line


def validate(cfg: dict, text: str | None = None, source: str = "<config>"):
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    err = errors[0]
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    line = _line_of(text, err.absolute_path) if text is not None else None
    loc = f"{source}:{line}" if line is not None else source
    raise ConfigError(f"{loc}: schema violation at '{where}': {err.message}")


def bundled_default(subcommand: str) -> dict:
    name = subcommand.replace(" ", "-") + ".json"
    text = resources.files("signal_lab").joinpath("configs", name).read_text()
    return json.loads(text)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load(subcommand: str, path: str | None = None) -> dict:
    """Bundled defaults for ``subcommand`` overlaid with the file at ``path`` (validated)."""
    base = bundled_default(subcommand)
    validate(base, source=f"<bundled {subcommand}>")
    if path is None:
        return base
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    validate(user, text, path)
    return _merge(base, user)


def tolerances(cfg: dict) -> dict[str, float]:
    return {**DEFAULT_TOLERANCES, **cfg.get("tolerances", {})}


def output_schema(kind: str) -> dict:
    return OUTPUT_SCHEMAS[kind]


def check_output(kind: str, doc: Any):
    jsonschema.validate(doc, OUTPUT_SCHEMAS[kind])
