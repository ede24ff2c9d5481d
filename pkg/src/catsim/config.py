"""JSON experiment configuration: schema, loading and hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import fields

from jsonschema import Draft202012Validator

from .exceptions import ConfigError
from .herald import ExperimentConfig

_fraction = {"type": "number", "minimum": 0, "maximum": 1}
_rate = {"type": "number", "minimum": 0}
_cutoff = {"type": "integer", "minimum": 2}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "catsim experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "pump_powers": {"type": "array", "minItems": 1, "items": _rate},
        "tap_ratio": _fraction,
        "kappa": _rate,
        "signal_loss": _fraction,
        "squeezed_fake_loss": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "electrical_loss": _fraction,
        "snspd_efficiency": _fraction,
        "filter_transmission": _fraction,
        "dark_cps": _rate,
        "stray_fake_cps": _rate,
        "count_dark_separately": {"type": "boolean"},
        "filter_hwhm_hz": {"type": "number", "exclusiveMinimum": 0},
        "bases_deg": {"type": "array", "minItems": 2, "items": {"type": "number"}},
        "events_per_basis": {"type": "integer", "minimum": 2},
        "signal_cutoff": _cutoff,
        "idler_cutoff": _cutoff,
        "tomo_cutoff": _cutoff,
        "tomo_bin_width": {"type": "number", "exclusiveMinimum": 0},
        "tomo_max_iter": {"type": "integer", "minimum": 1},
        "sample_rate_hz": {"type": "number", "exclusiveMinimum": 0},
        "window_start_s": {"type": "number", "exclusiveMaximum": 0},
        "window_stop_s": {"type": "number", "exclusiveMinimum": 0},
        "trace_lowpass_hz": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
    },
}

assert set(SCHEMA["properties"]) == {f.name for f in fields(ExperimentConfig)}


def validate(data):
    errors = sorted(Draft202012Validator(SCHEMA).iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(
            ("/" + "/".join(str(p) for p in e.absolute_path), e.message) for e in errors
        )


def config_from_dict(data):
    validate(data)
    return ExperimentConfig(**data)


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"{path}: not valid JSON ({exc})")]) from exc
    except OSError as exc:
        raise ConfigError([("", f"{path}: {exc.strerror}")]) from exc
    return config_from_dict(data)


def config_hash(config):
    """SHA-256 of the canonical (sorted-key) JSON form."""
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
