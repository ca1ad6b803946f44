"""JSON experiment configuration: schema, defaults and validation."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import regularizers as regs
from .core import SamplerConfig, SamplerKind
from .potentials import DCPotential, QuadraticF

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["potential", "samplers", "sampler"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["f"],
            "properties": {
                "f": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["mean", "precision"],
                    "properties": {
                        "mean": _VEC,
                        "precision": {"type": "array", "items": _VEC, "minItems": 1},
                    },
                },
                "regularizer": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": [k for k in regs.KINDS if k != "Custom"]},
                        "scale": _POS,
                        "params": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {
                                "q": {"type": "integer", "minimum": 1},
                                "theta": _POS,
                                "a": {"type": "number", "exclusiveMinimum": 1},
                                "p": {"type": "number", "exclusiveMinimum": 1, "exclusiveMaximum": 2},
                                "C": _POS,
                            },
                        },
                    },
                },
            },
        },
        "samplers": {
            "type": "array",
            "minItems": 1,
            "uniqueItems": True,
            "items": {"enum": [k.value for k in SamplerKind]},
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "required": ["gamma"],
            "properties": {
                "gamma": _POS,
                "lambda": _POS,
                "n_chains": {"type": "integer", "minimum": 1},
                "n_steps": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
        },
        "init": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "x0"],
                    "properties": {"type": {"const": "point"}, "x0": _VEC},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "mean", "std"],
                    "properties": {"type": {"const": "gaussian"}, "mean": _VEC, "std": _POS},
                },
            ]
        },
        "histogram": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bins": {"type": "integer", "minimum": 2},
                "bin_sweep": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "box": {
                    "type": ["array", "null"],
                    "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "box_rule": {"enum": ["quantile", "gaussian", "dissipativity"]},
                "tail": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "quad_order": {"type": "integer", "minimum": 1},
                "quad_tol": _POS,
            },
        },
        "mode": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {"type": {"const": "MultiChainLast"}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type"],
                    "properties": {
                        "type": {"const": "SingleChainBurnIn"},
                        "burn_in": {"type": "integer", "minimum": 0},
                    },
                },
            ]
        },
        "output_dir": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class HistogramSpec:
    bins: int = 40
    bin_sweep: list = field(default_factory=lambda: [20, 30, 40, 60])
    box: Optional[list] = None
    box_rule: str = "quantile"
    tail: float = 1e-4
    quad_order: int = 8
    quad_tol: float = 1e-10


@dataclass
class ExperimentConfig:
    potential: dict
    samplers: list
    sampler: SamplerConfig
    init: dict = field(default_factory=lambda: {"type": "point", "x0": [0.0]})
    histogram: HistogramSpec = field(default_factory=HistogramSpec)
    mode: dict = field(default_factory=lambda: {"type": "MultiChainLast"})
    output_dir: str = "out"
    schema_version: int = SCHEMA_VERSION

    @property
    def d(self):
        return len(self.potential["f"]["mean"])

    def build_potential(self):
        f = self.potential["f"]
        reg = self.potential.get("regularizer", {"kind": "Zero"})
        return DCPotential(QuadraticF(f["mean"], f["precision"]), regs.from_dict(reg))

    def sampler_config(self, kind, **overrides):
        base = dict(
            gamma=self.sampler.gamma,
            lam=self.sampler.lam,
            n_chains=self.sampler.n_chains,
            n_steps=self.sampler.n_steps,
            seed=self.sampler.seed,
            kind=kind,
        )
        base.update(overrides)
        return SamplerConfig(**base)

    def initial_point(self):
        if self.init["type"] == "point":
            return np.asarray(self.init["x0"], dtype=float)
        return None

    def to_dict(self):
        h = self.histogram
        return {
            "schema_version": self.schema_version,
            "potential": copy.deepcopy(self.potential),
            "samplers": [k.value for k in self.samplers],
            "sampler": {
                "gamma": self.sampler.gamma,
                "lambda": self.sampler.lam,
                "n_chains": self.sampler.n_chains,
                "n_steps": self.sampler.n_steps,
                "seed": self.sampler.seed,
            },
            "init": copy.deepcopy(self.init),
            "histogram": {
                "bins": h.bins,
                "bin_sweep": list(h.bin_sweep),
                "box": h.box,
                "box_rule": h.box_rule,
                "tail": h.tail,
                "quad_order": h.quad_order,
                "quad_tol": h.quad_tol,
            },
            "mode": dict(self.mode),
            "output_dir": self.output_dir,
        }


def _path(err):
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate(raw):
    """Check ``raw`` against the schema and the cross-field invariants; return an ``ExperimentConfig``."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"config.{_path(err)}: {err.message}")

    pot = copy.deepcopy(raw["potential"])
    pot.setdefault("regularizer", {"kind": "Zero"})
    pot["regularizer"].setdefault("scale", 1.0)
    pot["regularizer"].setdefault("params", {})
    d = len(pot["f"]["mean"])
    prec = pot["f"]["precision"]
    if len(prec) != d or any(len(row) != d for row in prec):
        raise ConfigError(f"config.potential.f.precision: must be a {d}x{d} matrix")

    s = raw["sampler"]
    sampler = SamplerConfig(
        gamma=float(s["gamma"]),
        lam=float(s.get("lambda", 0.01)),
        n_chains=int(s.get("n_chains", 5000)),
        n_steps=int(s.get("n_steps", 1000)),
        seed=int(s.get("seed", 0)),
        kind=raw["samplers"][0],
    )

    h = raw.get("histogram", {})
    hist = HistogramSpec(**{k: v for k, v in h.items()})
    hist.bin_sweep = list(hist.bin_sweep)
    if hist.bins not in hist.bin_sweep:
        hist.bin_sweep = sorted(set(hist.bin_sweep) | {hist.bins})
    if hist.box is not None:
        if any(not hi > lo for lo, hi in hist.box):
            raise ConfigError("config.histogram.box: each interval needs lo < hi")
        hist.box = [list(map(float, b)) for b in hist.box]

    init = copy.deepcopy(raw.get("init", {"type": "point", "x0": [0.0] * d}))
    for key in ("x0", "mean"):
        if init.get(key) is not None and len(init[key]) != d:
            raise ConfigError(f"config.init.{key}: expected length {d}")

    mode = copy.deepcopy(raw.get("mode", {"type": "MultiChainLast"}))
    if mode["type"] == "SingleChainBurnIn":
        mode.setdefault("burn_in", 500)
        if mode["burn_in"] >= sampler.n_steps:
            raise ConfigError("config.mode.burn_in: must be smaller than sampler.n_steps")

    cfg = ExperimentConfig(
        potential=pot,
        samplers=[SamplerKind.parse(k) for k in raw["samplers"]],
        sampler=sampler,
        init=init,
        histogram=hist,
        mode=mode,
        output_dir=raw.get("output_dir", "out"),
    )
    try:
        V = cfg.build_potential()
    except ValueError as exc:
        raise ConfigError(f"config.potential: {exc}") from exc
    for kind in cfg.samplers:
        if kind is SamplerKind.PSGLA:
            try:
                regs.full_prox(V.reg, 1.0, np.zeros(d))
            except regs.UnsupportedOperation as exc:
                raise ConfigError(f"config.samplers: PSGLA unavailable: {exc}") from exc
        if kind is SamplerKind.DCLAS:
            try:
                regs.grad_r2(V.reg, np.zeros(d))
            except regs.UnsupportedOperation as exc:
                raise ConfigError(f"config.samplers: DCLAS unavailable: {exc}") from exc
    return cfg


def parse_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return validate(raw)


def dump_config(cfg):
    """Canonical JSON text of a resolved config."""
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
