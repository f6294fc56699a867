"""Run configuration: JSON schema, parsing, and model construction."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field as dc_field
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .atlas import SearchConfig
from .errors import ConfigError
from .fields import MagneticField, trig2
from .potential import Potential, PotentialTerm
from .trig import TrigPoly

_REAL = {"anyOf": [{"type": "number"}, {"type": "string"}]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["N", "tau", "field"],
    "properties": {
        "N": {"type": "integer", "minimum": 1, "maximum": 8},
        "tau": _REAL,
        "field": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["constant"],
                "properties": {
                    "constant": _REAL,
                    "modes": {"type": "array",
                              "items": {"type": "array", "items": _REAL,
                                        "minItems": 4, "maxItems": 4}},
                },
            },
        },
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "time_m": {"type": "integer", "minimum": 0},
                            "phase": _REAL,
                            "constant": _REAL,
                            "modes": {"type": "array", "items": {"type": "array", "items": _REAL}},
                        },
                    },
                },
            },
        },
        "classes": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                "budget": {"type": "integer", "minimum": 1},
                "orbit_tol": {"type": "number", "exclusiveMinimum": 0},
                "integrator_tol": {"type": "number", "minimum": 1e-13, "maximum": 1e-6},
                "momentum_margin": {"type": "number", "minimum": 0},
            },
        },
        "output_dir": {"type": "string"},
    },
}

_PI_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*(pi|π)?\s*$")


def parse_real(v, where: str = "value") -> float:
    """Numbers or strings such as "3pi", "-0.5*pi", "pi", "2.5"."""
    if isinstance(v, bool):
        raise ConfigError(f"config key '{where}': expected a number")
    if isinstance(v, (int, float)):
        return float(v)
    m = _PI_RE.match(str(v))
    if not m or (m.group(1) is None and m.group(2) is None):
        raise ConfigError(f"config key '{where}': cannot parse {v!r} as a real number")
    coef = float(m.group(1)) if m.group(1) is not None else 1.0
    return coef * np.pi if m.group(2) else coef


@dataclass(frozen=True)
class FieldSpec:
    constant: float
    modes: tuple = ()


@dataclass(frozen=True)
class TermSpec:
    time_m: int = 0
    phase: float = 0.0
    constant: float = 0.0
    modes: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    N: int
    tau: float
    field: tuple
    potential: tuple = ()
    classes: tuple = ()
    search: SearchConfig = SearchConfig()
    output_dir: str = "magtorus_out"

    def magnetic_field(self) -> MagneticField:
        return MagneticField(tuple(trig2(f.constant, f.modes) for f in self.field))

    def potential_model(self) -> Potential:
        terms = tuple(PotentialTerm(t.time_m, t.phase,
                                    TrigPoly.from_rows(2 * self.N, t.constant, t.modes))
                      for t in self.potential)
        return Potential(self.N, self.tau, terms)

    def with_seed(self, seed: int) -> "RunConfig":
        return _replace(self, search=_replace(self.search, seed=int(seed)))

    def to_dict(self) -> dict:
        """Resolved configuration with every default explicit."""
        s = asdict(self.search)
        s.pop("threads")
        for k in ("newton_iters", "damping_halvings", "dedup_tol", "n_samples"):
            s.pop(k)
        return {
            "N": self.N,
            "tau": self.tau,
            "field": [{"constant": f.constant, "modes": [list(r) for r in f.modes]}
                      for f in self.field],
            "potential": {"terms": [{"time_m": t.time_m, "phase": t.phase, "constant": t.constant,
                                     "modes": [list(r) for r in t.modes]}
                                    for t in self.potential]},
            "classes": [list(h) for h in self.classes],
            "search": s,
            "output_dir": self.output_dir,
        }


def _replace(obj, **kw):
    from dataclasses import replace
    return replace(obj, **kw)


def _key_path(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = set(err.instance) - set(err.schema.get("properties", {}))
        key = ",".join(sorted(extra))
        return f"{path}/{key}" if path else key
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        key = ",".join(missing)
        return f"{path}/{key}" if path else key
    return path or "<root>"


def from_dict(raw: dict) -> RunConfig:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config key '{_key_path(err)}': {err.message}") from None
    N = raw["N"]
    tau = parse_real(raw["tau"], "tau")
    if tau <= 0:
        raise ConfigError("config key 'tau': must be positive")
    if len(raw["field"]) != N:
        raise ConfigError(f"config key 'field': expected {N} factor entries, got {len(raw['field'])}")
    fields = []
    for j, f in enumerate(raw["field"]):
        modes = tuple(tuple(parse_real(v, f"field/{j}/modes/{r}") for v in row)
                      for r, row in enumerate(f.get("modes", [])))
        fields.append(FieldSpec(parse_real(f["constant"], f"field/{j}/constant"), modes))
    terms = []
    for i, t in enumerate(raw.get("potential", {}).get("terms", [])):
        rows = []
        for r, row in enumerate(t.get("modes", [])):
            where = f"potential/terms/{i}/modes/{r}"
            if len(row) != 2 * N + 2:
                raise ConfigError(f"config key '{where}': expected {2 * N + 2} entries")
            vals = [parse_real(v, where) for v in row]
            if any(v != int(v) for v in vals[:2 * N]):
                raise ConfigError(f"config key '{where}': wave vector must be integer")
            rows.append(tuple(vals))
        terms.append(TermSpec(int(t.get("time_m", 0)),
                              parse_real(t.get("phase", 0.0), f"potential/terms/{i}/phase"),
                              parse_real(t.get("constant", 0.0), f"potential/terms/{i}/constant"),
                              tuple(rows)))
    classes = tuple(tuple(h) for h in raw.get("classes", [[0] * (2 * N)]))
    for i, h in enumerate(classes):
        if len(h) != 2 * N:
            raise ConfigError(f"config key 'classes/{i}': expected {2 * N} entries")
    search = SearchConfig(**raw.get("search", {}))
    cfg = RunConfig(N, tau, tuple(fields), tuple(terms), classes, search,
                    raw.get("output_dir", "magtorus_out"))
    try:
        cfg.magnetic_field()
        cfg.potential_model()
    except ValueError as err:
        raise ConfigError(f"config key 'field': {err}") from None
    return cfg


def loads(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config key '<root>': expected an object")
    return from_dict(raw)


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    return loads(text)


def default_config() -> RunConfig:
    return loads(resources.files("magtorus.data").joinpath("default.json").read_text("utf-8"))
