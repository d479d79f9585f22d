"""Run-configuration files: one JSON document drives every subcommand.

Unknown keys are hard errors. All randomness derives from the single
top-level seed: stage seeds are sha256(f"{seed}:{label}") reduced mod
2**32, so runs are reproducible and stages are decoupled.
"""
from __future__ import annotations

import hashlib
import json

from .errors import ConfigError
from .library import UNARY_FNS
from .plants import SIGNAL_KINDS

_SCHEMA = {
    "seed": int,
    "workdir": str,
    "simulate": {
        "plant": str,
        "span_hours": float,
        "dt_hours": float,
        "segment_hours": float,
        "kinds": list,
        "amplitude_bounds": list,
        "noise_sigma": float,
        "dataset": str,
        "truth": str,
        "signal": str,
    },
    "fit": {
        "dataset": str,
        "input_column": str,
        "diff": str,
        "tv_reg": float,
        "tv_iters": int,
        "max_total_degree": int,
        "exponent_min": int,
        "exponent_max": int,
        "unary_fns": list,
        "include_constant": bool,
        "n_lambdas": int,
        "lambda_min_ratio": float,
        "refit": str,
        "selection": str,
        "score_alpha": float,
        "score_beta": float,
        "model": str,
        "paths": str,
    },
    "evaluate": {
        "model": str,
        "dataset": str,
        "plant": str,
        "span_hours": float,
        "dt_hours": float,
        "segment_hours": float,
        "kinds": list,
        "long_time_factor": float,
        "report_prefix": str,
    },
    "compare": {
        "models": list,
        "labels": list,
        "output_prefix": str,
    },
    "render": {
        "model": str,
        "output": str,
    },
}

DEFAULTS = {
    "seed": 0,
    "workdir": ".",
    "simulate": {
        "plant": "forced-linear-2",
        "span_hours": 100.0,
        "dt_hours": 0.01,
        "segment_hours": 1.0,
        "kinds": list(SIGNAL_KINDS),
        "amplitude_bounds": None,   # default: the plant's training bounds
        "noise_sigma": 0.0,
        "dataset": "dataset.csv",
        "truth": "truth.json",
        "signal": "signal.json",
    },
    "fit": {
        "dataset": "dataset.csv",
        "input_column": "u",
        "diff": "central",
        "tv_reg": 1e-3,
        "tv_iters": 100,
        "max_total_degree": 2,
        "exponent_min": -2,
        "exponent_max": 2,
        "unary_fns": list(UNARY_FNS),
        "include_constant": True,
        "n_lambdas": 30,
        "lambda_min_ratio": 1e-3,
        "refit": "ols",
        "selection": "cv-peak",
        "score_alpha": -0.05,
        "score_beta": -1.0,
        "model": "model.json",
        "paths": "paths.json",
    },
    "evaluate": {
        "model": "model.json",
        "dataset": "dataset.csv",
        "plant": None,
        "span_hours": None,
        "dt_hours": None,
        "segment_hours": None,
        "kinds": None,
        "long_time_factor": 2.5,
        "report_prefix": "evaluation",
    },
    "compare": {
        "models": [],
        "labels": None,
        "output_prefix": "compare",
    },
    "render": {
        "model": "model.json",
        "output": "equations.txt",
    },
}


def _key_line(text, key):
    needle = f'"{key}"'
    for lineno, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return lineno
    return None


def _check_keys(doc, text):
    for key, val in doc.items():
        if key not in _SCHEMA:
            line = _key_line(text, key)
            where = f" (line {line})" if line else ""
            raise ConfigError(f"unknown config key {key!r}{where}")
        if isinstance(_SCHEMA[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            for sub in val:
                if sub not in _SCHEMA[key]:
                    line = _key_line(text, sub)
                    where = f" (line {line})" if line else ""
                    raise ConfigError(
                        f"unknown config key {key}.{sub}{where}")


def load_config(path):
    """Parse, validate against the schema, and apply defaults."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: "
                          f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _check_keys(doc, text)
    merged = {"seed": doc.get("seed", DEFAULTS["seed"]),
              "workdir": doc.get("workdir", DEFAULTS["workdir"])}
    if not isinstance(merged["seed"], int):
        raise ConfigError("seed must be an integer")
    for section in ("simulate", "fit", "evaluate", "compare", "render"):
        out = dict(DEFAULTS[section])
        out.update(doc.get(section, {}))
        merged[section] = out
    return merged


def derive_seed(master, label):
    """Stage seed: sha256 of "<seed>:<label>" reduced mod 2**32."""
    digest = hashlib.sha256(f"{master}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2 ** 32)


def config_help():
    lines = ["Config file keys (JSON; unknown keys are errors):"]
    for key, val in _SCHEMA.items():
        if isinstance(val, dict):
            lines.append(f"  {key}:")
            for sub, typ in val.items():
                default = DEFAULTS[key].get(sub)
                lines.append(f"    {sub} ({typ.__name__}, default {default!r})")
        else:
            lines.append(f"  {key} ({val.__name__}, default "
                         f"{DEFAULTS[key]!r})")
    return "\n".join(lines)
