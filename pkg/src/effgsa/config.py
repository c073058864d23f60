"""Run configuration for the command-line front end.

A configuration is a small tree (TOML or JSON) with the blocks ``model``,
``space``, ``operating``, ``method`` and ``reduction`` plus a top-level
``output`` directory.  Everything is validated up front by
:meth:`RunConfig.from_dict`; every error message starts with the dotted key
that caused it.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ecm import UNCERTAIN_FIELDS, EcmParameters
from .errors import ConfigurationError, ParseError
from .params import STRATEGIES, ParameterSpace, RandomParameter
from .pipeline import UQSettings
from .qoi import DEFAULT_GRID, SCALED_VEHICLE, OperatingSet, VehicleParameters, build_grid, load_cycle, wltc_class3b
from .reduction import DEFAULT_THRESHOLD

__all__ = ["RunConfig", "load_config", "apply_overrides", "parse_value"]

BUNDLED_CYCLE = "wltc-class3b"

_TOP_KEYS = {"output", "model", "space", "operating", "method", "reduction"}
_MODEL_KEYS = set(EcmParameters().as_dict())
_GRID_KEYS = set(DEFAULT_GRID) | {"kind", "clip"}
_CYCLE_KEYS = {"kind", "file", "resample_dt", "vehicle"}
_VEHICLE_KEYS = {"mass", "wheel_radius", "gear_ratio", "c_rr", "drag_area", "air_density", "rotating_mass_factor"}
_METHOD_KEYS = {"name", "n_samples", "seed", "degree", "oversampling", "strategy"}
_REDUCTION_KEYS = {"threshold", "fixed"}
_PARAM_KEYS = {"name", "nominal", "halfwidth", "lower", "upper"}


def _fail(key: str, msg: str):
    raise ConfigurationError(f"{key}: {msg}")


def _table(doc: dict, key: str, prefix: str = "") -> dict:
    val = doc.get(key, {})
    if not isinstance(val, dict):
        _fail(prefix + key, "expected a table")
    return val


def _unknown(block: dict, allowed: set, prefix: str) -> None:
    for k in block:
        if k not in allowed:
            _fail(f"{prefix}{k}", "unknown key")


def _number(block: dict, key: str, prefix: str, default=None, *, integer=False, minimum=None, strict=False):
    full = prefix + key
    val = block.get(key, default)
    if val is None:
        _fail(full, "missing value")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(full, f"expected a number, got {val!r}")
    if integer:
        if int(val) != val:
            _fail(full, f"expected an integer, got {val!r}")
        val = int(val)
    else:
        val = float(val)
    if minimum is not None and (val <= minimum if strict else val < minimum):
        _fail(full, f"must be {'>' if strict else '>='} {minimum}, got {val!r}")
    return val


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description."""

    ecm: EcmParameters
    space: ParameterSpace
    operating: dict
    settings: UQSettings
    threshold: float = DEFAULT_THRESHOLD
    fixed: tuple[str, ...] | None = None
    output: str = "effgsa-out"
    source: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str | Path = ".") -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigurationError("<root>: expected a table")
        _unknown(doc, _TOP_KEYS, "")

        model = _table(doc, "model")
        _unknown(model, _MODEL_KEYS, "model.")
        for k, v in model.items():
            _number(model, k, "model.", integer=(k == "pole_pairs"))
        try:
            ecm = EcmParameters().with_values(model)
        except ValueError as exc:
            raise ConfigurationError(f"model: {exc}") from None

        space = _space(_table(doc, "space"), ecm)
        operating = _operating(_table(doc, "operating"), base_dir)
        settings = _method(_table(doc, "method"))

        red = _table(doc, "reduction")
        _unknown(red, _REDUCTION_KEYS, "reduction.")
        threshold = _number(red, "threshold", "reduction.", DEFAULT_THRESHOLD, minimum=0.0)
        fixed = red.get("fixed")
        if fixed is not None:
            if not isinstance(fixed, list) or not all(isinstance(n, str) for n in fixed):
                _fail("reduction.fixed", "expected a list of parameter names")
            missing = [n for n in fixed if n not in space.names]
            if missing:
                _fail("reduction.fixed", f"not in the parameter space: {missing}")
            fixed = tuple(fixed)

        output = doc.get("output", "effgsa-out")
        if not isinstance(output, str) or not output:
            _fail("output", "expected a directory name")
        return cls(ecm, space, operating, settings, threshold, fixed, output, doc)

    def build_operating_set(self) -> OperatingSet:
        op = self.operating
        try:
            if op["kind"] == "grid":
                return build_grid(
                    op["t_min"], op["t_max"], op["n_t"], op["omega_min"], op["omega_max"], op["n_omega"],
                    op["clip"], self.ecm,
                )
            if op["file"] == BUNDLED_CYCLE:
                return wltc_class3b(op["vehicle"], op["resample_dt"])
            return load_cycle(op["file"], op["vehicle"], op["resample_dt"])
        except ParseError as exc:
            raise ConfigurationError(f"operating.file: {exc}") from None
        except ConfigurationError as exc:
            raise ConfigurationError(f"operating: {exc}") from None

    def resolved(self) -> dict:
        """Plain-data view of the effective configuration (for run metadata)."""
        op = dict(self.operating)
        if isinstance(op.get("vehicle"), VehicleParameters):
            op["vehicle"] = {k: getattr(op["vehicle"], k) for k in sorted(_VEHICLE_KEYS)}
        s = self.settings
        return {
            "output": self.output,
            "model": self.ecm.as_dict(),
            "space": self.space.to_dict(),
            "operating": op,
            "method": {
                "name": s.method,
                "n_samples": s.n_samples,
                "seed": s.seed,
                "degree": s.degree,
                "oversampling": s.oversampling,
                "strategy": s.strategy,
            },
            "reduction": {"threshold": self.threshold, "fixed": list(self.fixed) if self.fixed is not None else None},
        }


def _space(block: dict, ecm: EcmParameters) -> ParameterSpace:
    _unknown(block, {"halfwidth", "parameters"}, "space.")
    default_hw = _number(block, "halfwidth", "space.", 0.05, minimum=0.0, strict=True)
    entries = block.get("parameters")
    if entries is None:
        entries = [{"name": n} for n in UNCERTAIN_FIELDS]
    if not isinstance(entries, list) or not entries:
        _fail("space.parameters", "expected a non-empty list of parameter tables")
    params = []
    seen = set()
    for i, entry in enumerate(entries):
        prefix = f"space.parameters[{i}]."
        if not isinstance(entry, dict):
            _fail(prefix[:-1], "expected a table")
        _unknown(entry, _PARAM_KEYS, prefix)
        name = entry.get("name")
        if name not in UNCERTAIN_FIELDS:
            _fail(prefix + "name", f"must be one of {list(UNCERTAIN_FIELDS)}, got {name!r}")
        if name in seen:
            _fail(prefix + "name", f"duplicate parameter {name!r}")
        seen.add(name)
        nominal = _number(entry, "nominal", prefix, ecm.get(name))
        try:
            if "lower" in entry or "upper" in entry:
                if "halfwidth" in entry:
                    _fail(prefix + "halfwidth", "give either halfwidth or lower/upper, not both")
                lo = _number(entry, "lower", prefix)
                hi = _number(entry, "upper", prefix)
                params.append(RandomParameter(name, nominal, lo, hi))
            else:
                hw = _number(entry, "halfwidth", prefix, default_hw, minimum=0.0, strict=True)
                params.append(RandomParameter.relative(name, nominal, hw))
        except ConfigurationError as exc:
            if str(exc).startswith("space."):
                raise
            raise ConfigurationError(f"{prefix[:-1]}: {exc}") from None
    return ParameterSpace(params)


def _operating(block: dict, base_dir) -> dict:
    kind = block.get("kind", "grid")
    if kind == "grid":
        _unknown(block, _GRID_KEYS, "operating.")
        out = {"kind": "grid"}
        for key, default in DEFAULT_GRID.items():
            integer = key.startswith("n_")
            out[key] = _number(block, key, "operating.", default, integer=integer, minimum=2 if integer else None)
        clip = block.get("clip", True)
        if not isinstance(clip, bool):
            _fail("operating.clip", "expected true or false")
        out["clip"] = clip
        if out["t_max"] <= out["t_min"]:
            _fail("operating.t_max", "must exceed operating.t_min")
        if out["omega_min"] < 0:
            _fail("operating.omega_min", "must be non-negative")
        if out["omega_max"] <= out["omega_min"]:
            _fail("operating.omega_max", "must exceed operating.omega_min")
        return out
    if kind == "cycle":
        _unknown(block, _CYCLE_KEYS, "operating.")
        file = block.get("file", BUNDLED_CYCLE)
        if not isinstance(file, str):
            _fail("operating.file", "expected a path")
        if file != BUNDLED_CYCLE:
            path = Path(file)
            if not path.is_absolute():
                path = Path(base_dir) / path
            file = str(path)
        dt = 0.5 if file == BUNDLED_CYCLE else None
        if "resample_dt" in block:
            dt = _number(block, "resample_dt", "operating.", minimum=0.0, strict=True)
        veh = block.get("vehicle")
        vehicle = SCALED_VEHICLE
        if veh is not None:
            if not isinstance(veh, dict):
                _fail("operating.vehicle", "expected a table")
            _unknown(veh, _VEHICLE_KEYS, "operating.vehicle.")
            vals = {k: _number(veh, k, "operating.vehicle.") for k in veh}
            for k in ("mass", "wheel_radius", "gear_ratio"):
                if k not in vals:
                    _fail(f"operating.vehicle.{k}", "missing value")
            try:
                vehicle = VehicleParameters(**vals)
            except ConfigurationError as exc:
                raise ConfigurationError(f"operating.{exc}") from None
        return {"kind": "cycle", "file": file, "resample_dt": dt, "vehicle": vehicle}
    _fail("operating.kind", f"must be 'grid' or 'cycle', got {kind!r}")


def _method(block: dict) -> UQSettings:
    _unknown(block, _METHOD_KEYS, "method.")
    name = block.get("name", "pce")
    if name not in ("mc", "pce"):
        _fail("method.name", f"must be 'mc' or 'pce', got {name!r}")
    strategy = block.get("strategy", "pseudo-random")
    if strategy not in STRATEGIES:
        _fail("method.strategy", f"must be one of {list(STRATEGIES)}, got {strategy!r}")
    return UQSettings(
        method=name,
        n_samples=_number(block, "n_samples", "method.", 1000, integer=True, minimum=1),
        seed=_number(block, "seed", "method.", 0, integer=True, minimum=0),
        degree=_number(block, "degree", "method.", 2, integer=True, minimum=0),
        oversampling=_number(block, "oversampling", "method.", 2.0, minimum=1.0),
        strategy=strategy,
    )


def load_config(path: str | Path) -> dict:
    """Read a TOML or JSON configuration file into a plain dict."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(text)
        else:
            doc = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"<file {path}>: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"<file {path}>: top level must be a table")
    return doc


def parse_value(text: str) -> Any:
    """Interpret a command-line value as a TOML literal, falling back to a string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(doc: dict, overrides: dict[str, Any]) -> dict:
    """Return a copy of ``doc`` with dotted keys (``method.seed``) replaced."""
    out = json.loads(json.dumps(doc))
    for dotted, value in overrides.items():
        keys = dotted.split(".")
        node = out
        for k in keys[:-1]:
            nxt = node.setdefault(k, {})
            if not isinstance(nxt, dict):
                raise ConfigurationError(f"{dotted}: {k!r} is not a table")
            node = nxt
        node[keys[-1]] = value
    return out
