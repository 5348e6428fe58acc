"""Experiment configuration: JSON schema, defaults and validation.

A config is a single JSON object. Every key is optional except where a
method needs it; unknown keys are rejected. Defaults per method::

    fig1, qa, qja, qa-interp   50-site random potential, beta 0 -> 100,
                               tau in [1, 10, 100], n_steps "auto"
    je-check                   4-site random potential, beta 0 -> 2,
                               10 steps, 100000 samples
    dilate-check               4-site random potential (shifted to E >= 0),
                               beta 0 -> 2, 10 steps, p_error_cap 0.01
    spectrum                   50-site random potential, beta 0 -> 100,
                               grid of 101 betas

``instance`` is either a random-potential recipe
``{"n_sites", "seed", "v_low", "v_high", "boundary"}``, an explicit cost
function ``{"energies", "neighbors", ...}`` in the instance file format, or
a path to such a file.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .errors import ConfigError
from .model import OPEN_CHAIN, PERIODIC_CHAIN, CostFunction, build_random_potential

METHODS = ("qa", "qja", "qa-interp", "je-check", "dilate-check", "fig1", "spectrum")
ANNEAL_METHODS = ("qa", "qja", "qa-interp", "fig1")

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "method": {"enum": list(METHODS)},
        "instance": {
            "oneOf": [
                {"type": "string", "minLength": 1},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["n_sites"],
                    "properties": {
                        "n_sites": {"type": "integer", "minimum": 2},
                        "seed": {"type": "integer", "minimum": 0},
                        "v_low": {"type": "number"},
                        "v_high": {"type": "number"},
                        "boundary": {"enum": [OPEN_CHAIN, PERIODIC_CHAIN]},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["energies"],
                    "properties": {
                        "n": {"type": "integer", "minimum": 1},
                        "energies": {"type": "array", "minItems": 1, "items": {"type": "number"}},
                        "neighbors": {
                            "anyOf": [
                                {"enum": [OPEN_CHAIN, PERIODIC_CHAIN]},
                                {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
                            ]
                        },
                        "seed": {"type": "integer"},
                        "label": {"type": "string"},
                    },
                },
            ]
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta_max": _NONNEG,
                "tau": {"anyOf": [_POS, {"type": "array", "minItems": 1, "items": _POS}]},
                "n_steps": {"anyOf": [{"const": "auto"}, {"type": "integer", "minimum": 1}]},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string", "minLength": 1},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ground": _NONNEG,
                "qja_gibbs": _POS,
            },
        },
        "samples": {"type": "integer", "minimum": 2},
        "transverse_strength": _POS,
        "grid": {"type": "integer", "minimum": 2},
        "p_error_cap": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "jobs": {"type": "integer", "minimum": 1},
    },
}

_SMALL = {"n_sites": 4}
_DEFAULTS: dict[str, dict] = {
    "fig1": {"instance": {"n_sites": 50}, "schedule": {"beta_max": 100.0, "tau": [1.0, 10.0, 100.0], "n_steps": "auto"}},
    "je-check": {"instance": _SMALL, "schedule": {"beta_max": 2.0, "tau": [1.0], "n_steps": 10}, "samples": 100000},
    "dilate-check": {"instance": _SMALL, "schedule": {"beta_max": 2.0, "tau": [1.0], "n_steps": 10}, "p_error_cap": 0.01},
    "spectrum": {"instance": {"n_sites": 50}, "schedule": {"beta_max": 100.0, "tau": [1.0], "n_steps": "auto"}, "grid": 101},
}
for _m in ("qa", "qja", "qa-interp"):
    _DEFAULTS[_m] = copy.deepcopy(_DEFAULTS["fig1"])
_DEFAULTS["qa-interp"]["transverse_strength"] = 1.0

_COMMON = {"seed": 0, "output_dir": "qjasim-out", "tolerances": {"ground": 1e-12, "qja_gibbs": 1e-4}, "jobs": 1}


@dataclass(frozen=True)
class ExperimentConfig:
    method: str
    instance: Any
    beta_max: float
    taus: tuple
    n_steps: Any
    seed: int
    output_dir: str
    ground_tol: float
    qja_gibbs_tol: float
    samples: int = 100000
    transverse_strength: float = 1.0
    grid: int = 101
    p_error_cap: float = 0.01
    jobs: int = 1
    raw: Optional[dict] = None

    def canonical(self) -> dict:
        """Fully defaulted config as plain JSON data (excluding ``jobs``).

        ``jobs`` only changes scheduling, never results, so it is left out of
        the hash.
        """
        d = copy.deepcopy(self.raw) if self.raw is not None else {}
        d.pop("jobs", None)
        d.pop("output_dir", None)
        return d

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def build_instance(self) -> CostFunction:
        inst = self.instance
        try:
            if isinstance(inst, str):
                return CostFunction.from_json(Path(inst).read_text())
            if "energies" in inst:
                return CostFunction.from_dict(inst)
            return build_random_potential(
                inst["n_sites"],
                inst.get("seed", self.seed),
                inst.get("v_low", 0.0),
                inst.get("v_high", 1.0),
                periodic=inst.get("boundary", OPEN_CHAIN) == PERIODIC_CHAIN,
            )
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError([("instance", "a valid cost function", str(exc))]) from exc


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "instance":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


_EXPECT = {
    "minimum": ">= {}",
    "exclusiveMinimum": "> {}",
    "maximum": "<= {}",
    "exclusiveMaximum": "< {}",
    "type": "type {}",
    "const": "{!r}",
    "minItems": "at least {} items",
    "minLength": "a non-empty string",
    "required": "keys {}",
}


def _problem(err) -> tuple[str, str, str]:
    while err.context:
        # the branch whose type matched carries the informative error
        typed = [e for e in err.context if e.validator != "type"] or list(err.context)
        err = max(typed, key=lambda e: len(e.absolute_path))
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return _path(err), "no unknown keys", ", ".join(extra)
    if err.validator == "enum":
        return _path(err), "one of " + ", ".join(map(str, err.validator_value)), json.dumps(err.instance)
    template = _EXPECT.get(err.validator)
    expected = template.format(err.validator_value) if template else err.message
    return _path(err), expected, json.dumps(err.instance)


def validate_config(raw: str, method: Optional[str] = None, seed: Optional[int] = None) -> ExperimentConfig:
    """Parse JSON text into a validated config with defaults applied.

    ``method`` and ``seed`` come from the command line; a method given in
    both places must agree.
    """
    try:
        data = json.loads(raw) if raw.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError([("<root>", "valid JSON", f"{exc.msg} at line {exc.lineno} column {exc.colno}")]) from exc
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "a JSON object", type(data).__name__)])
    problems = []
    validator = jsonschema.Draft202012Validator(SCHEMA)
    for err in sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path))):
        problems.append(_problem(err))
    if method is not None and method not in METHODS:
        problems.append(("method", "one of " + ", ".join(METHODS), repr(method)))
    if "method" in data and method is not None and data["method"] != method:
        problems.append(("method", f"{method!r} (from the command line)", repr(data["method"])))
    chosen = method or data.get("method")
    if chosen is None:
        problems.append(("method", "one of " + ", ".join(METHODS), "nothing"))
    if problems:
        raise ConfigError(problems)

    merged = _merge(_merge(_COMMON, _DEFAULTS[chosen]), data)
    merged["method"] = chosen
    if seed is not None:
        merged["seed"] = seed
    inst = merged["instance"]
    if isinstance(inst, dict) and "n_sites" in inst:
        lo, hi = inst.get("v_low", 0.0), inst.get("v_high", 1.0)
        if not lo < hi:
            raise ConfigError([("instance/v_high", f"> v_low = {lo}", repr(hi))])
    sched = merged["schedule"]
    taus = sched["tau"] if isinstance(sched["tau"], list) else [sched["tau"]]
    merged["schedule"]["tau"] = [float(t) for t in taus]
    return ExperimentConfig(
        method=chosen,
        instance=inst,
        beta_max=float(sched["beta_max"]),
        taus=tuple(float(t) for t in taus),
        n_steps=sched["n_steps"],
        seed=int(merged["seed"]),
        output_dir=merged["output_dir"],
        ground_tol=float(merged["tolerances"]["ground"]),
        qja_gibbs_tol=float(merged["tolerances"]["qja_gibbs"]),
        samples=int(merged.get("samples", 100000)),
        transverse_strength=float(merged.get("transverse_strength", 1.0)),
        grid=int(merged.get("grid", 101)),
        p_error_cap=float(merged.get("p_error_cap", 0.01)),
        jobs=int(merged["jobs"]),
        raw=merged,
    )


def derive_seed(master: int, label: str) -> int:
    """Stable per-run seed: first 8 bytes of sha256("<master>:<label>")."""
    digest = hashlib.sha256(f"{master}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
