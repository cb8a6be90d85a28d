"""JSON schemas for the machine-readable artifacts.

Every JSON file the command line front end writes validates against one of
these; tests enforce it.
"""

from __future__ import annotations

import jsonschema

__all__ = [
    "ANALYSIS_REPORT_SCHEMA",
    "SEARCH_RESULT_SCHEMA",
    "TRAIN_REPORT_SCHEMA",
    "SKELETON_SIDECAR_SCHEMA",
    "SEARCH_SUMMARY_SCHEMA",
    "validate",
]

_NUMBER = {"type": "number"}
_NULLABLE_NUMBER = {"type": ["number", "null"]}

ANALYSIS_REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "rho",
        "cle",
        "mle",
        "spectrum",
        "steps_used",
        "rmse_per_component",
        "mean_q",
        "shape_dev",
        "classification",
        "eff_radius_pre",
        "eff_radius_post",
    ],
    "properties": {
        "rho": _NUMBER,
        "cle": _NULLABLE_NUMBER,
        "mle": _NUMBER,
        "spectrum": {"type": "array", "items": _NUMBER, "minItems": 1},
        "steps_used": {"type": "integer", "minimum": 1},
        "rmse_per_component": {"type": "array", "items": _NUMBER, "minItems": 1},
        "mean_q": _NULLABLE_NUMBER,
        "shape_dev": _NUMBER,
        "classification": {
            "enum": [
                "supervised-periodic",
                "semi-supervised-chaos",
                "collapsed-chaos",
                "untrained-other",
            ]
        },
        "eff_radius_pre": _NUMBER,
        "eff_radius_post": _NUMBER,
    },
    "additionalProperties": False,
}

SEARCH_RESULT_SCHEMA = {
    "type": "object",
    "required": ["rho_edge", "rho_supervised", "candidates", "full_scan", "failures"],
    "properties": {
        "rho_edge": _NUMBER,
        "rho_supervised": _NULLABLE_NUMBER,
        "candidates": {"type": "array", "items": ANALYSIS_REPORT_SCHEMA},
        "full_scan": {"type": "array", "items": ANALYSIS_REPORT_SCHEMA},
        "failures": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [_NUMBER, {"type": "string"}],
                "minItems": 2,
                "maxItems": 2,
            },
        },
    },
    "additionalProperties": False,
}

SEARCH_SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["seeds", "per_seed"],
    "properties": {
        "seeds": {"type": "array", "items": {"type": "integer"}},
        "per_seed": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["seed", "status", "rho_edge", "rho_supervised",
                             "n_candidates", "candidate_rhos"],
                "properties": {
                    "seed": {"type": "integer"},
                    "status": {"enum": ["ok", "bracket-error", "numeric-error"]},
                    "rho_edge": _NULLABLE_NUMBER,
                    "rho_supervised": _NULLABLE_NUMBER,
                    "n_candidates": {"type": "integer"},
                    "candidate_rhos": {"type": "array", "items": _NUMBER},
                    "message": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

TRAIN_REPORT_SCHEMA = {
    "type": "object",
    "required": ["rho", "rmse", "rmse_x", "eff_radius_pre", "eff_radius_post"],
    "properties": {
        "rho": _NUMBER,
        "rmse": {"type": "array", "items": _NUMBER, "minItems": 1},
        "rmse_x": _NUMBER,
        "eff_radius_pre": _NUMBER,
        "eff_radius_post": _NUMBER,
    },
    "additionalProperties": False,
}

SKELETON_SIDECAR_SCHEMA = {
    "type": "object",
    "required": ["dim", "period_steps", "label"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "period_steps": {"type": ["integer", "null"], "minimum": 1},
        "label": {"type": "string"},
    },
    "additionalProperties": False,
}


def validate(obj: dict, schema: dict) -> None:
    """Raise jsonschema.ValidationError when ``obj`` violates ``schema``."""
    jsonschema.validate(obj, schema)
