"""Flat key = value run configuration.

One key per line, `#` comments, vector values space separated.  Unknown
keys are hard errors (with a spelling suggestion); all errors are collected
and reported together with their line numbers, not one at a time.
"""

import difflib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .engine import COUPLING_MODES, SPLITTINGS, LatticeConfig
from .errors import ConfigError
from .params import PhysicalParams

INIT_KINDS = ("plane_wave", "gaussian", "delta", "london_equilibrium", "file")

# key -> (type tag, default); None default means required
SCHEMA = {
    "dims": ("int", 1),
    "nx": ("int", None),
    "ny": ("int", 0),
    "nz": ("int", 0),
    "ell": ("float", None),
    "zeta": ("float", 1.0),
    "m": ("float", None),
    "m0": ("float", None),
    "e": ("float", None),
    "rho0": ("float", None),
    "hbar": ("float", 1.0),
    "c": ("float", 1.0),
    "coupling_mode": ("choice:coupling", "free"),
    "splitting": ("choice:splitting", "strang"),
    "steps": ("int", 0),
    "snapshot_every": ("int", 0),
    "init": ("choice:init", "plane_wave"),
    "init_k": ("vec3", (0.0, 0.0, 0.0)),
    "init_width": ("float", 1.0),
    "init_center": ("vec3", None),  # default: domain midpoint
    "init_weights": ("vec4", (0.0, 0.0, 1.0, 0.0)),
    "init_file": ("str", ""),
    "normalize": ("bool", True),
    "A0": ("float", 0.0),
    "Ax": ("float", 0.0),
    "Ay": ("float", 0.0),
    "Az": ("float", 0.0),
    "output_dir": ("str", "out"),
}


@dataclass
class InitSpec:
    kind: str = "plane_wave"
    k: tuple = (0.0, 0.0, 0.0)
    width: float = 1.0
    center: Optional[tuple] = None
    weights: tuple = (0.0, 0.0, 1.0, 0.0)
    file: str = ""
    normalize: bool = True


@dataclass
class RunConfig:
    lattice: LatticeConfig
    init: InitSpec
    steps: int = 0
    snapshot_every: int = 0
    output_dir: str = "out"
    A_uniform: np.ndarray = field(default_factory=lambda: np.zeros(4))


def _convert(key, kind, raw, line, errors):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if kind == "str":
            return raw.strip()
        if kind.startswith("vec"):
            n = int(kind[3:])
            parts = [float(t) for t in raw.split()]
            if len(parts) > n:
                raise ValueError(f"at most {n} components")
            return tuple(parts + [0.0] * (n - len(parts)))
        if kind == "choice:coupling":
            if raw.strip() not in COUPLING_MODES:
                raise ValueError(f"must be one of {COUPLING_MODES}")
            return raw.strip()
        if kind == "choice:splitting":
            if raw.strip() not in SPLITTINGS:
                raise ValueError(f"must be one of {SPLITTINGS}")
            return raw.strip()
        if kind == "choice:init":
            if raw.strip() not in INIT_KINDS:
                raise ValueError(f"must be one of {INIT_KINDS}")
            return raw.strip()
    except ValueError as err:
        errors.append(f"line {line}: bad value for '{key}': {err}")
        return None
    raise AssertionError(f"unhandled schema kind {kind}")


def parse_config(text: str, overrides: Optional[dict] = None) -> RunConfig:
    """Parse config text to a validated RunConfig, or raise ConfigError.

    Total function: every problem found is collected (unknown keys, type
    errors, invariant violations) and raised together.  `overrides` maps
    keys to raw string values taken from the command line; they replace
    file values and are reported as line 0.
    """
    errors: list = []
    values: dict = {}
    lines: dict = {}

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            hint = difflib.get_close_matches(key, SCHEMA.keys(), n=1)
            suggestion = f" (did you mean '{hint[0]}'?)" if hint else ""
            errors.append(f"line {lineno}: unknown key '{key}'{suggestion}")
            continue
        if key in values:
            errors.append(f"line {lineno}: duplicate key '{key}'")
            continue
        converted = _convert(key, SCHEMA[key][0], raw, lineno, errors)
        if converted is not None:
            values[key] = converted
            lines[key] = lineno

    for key, raw in (overrides or {}).items():
        if key not in SCHEMA:
            hint = difflib.get_close_matches(key, SCHEMA.keys(), n=1)
            suggestion = f" (did you mean '{hint[0]}'?)" if hint else ""
            errors.append(f"line 0: unknown key '{key}'{suggestion}")
            continue
        converted = _convert(key, SCHEMA[key][0], str(raw), 0, errors)
        if converted is not None:
            values[key] = converted
            lines[key] = 0

    for key, (_, default) in SCHEMA.items():
        if key in values:
            continue
        if default is None and key in ("ell", "m", "m0", "e", "rho0", "nx"):
            errors.append(f"missing required key '{key}'")
        elif key == "init_center":
            values[key] = None
        else:
            values[key] = default

    if errors:
        raise ConfigError(errors)

    dims = values["dims"]
    extents = [values["nx"], values["ny"], values["nz"]][:dims]
    params = PhysicalParams(
        m=values["m"],
        m0=values["m0"],
        e=values["e"],
        rho0=values["rho0"],
        ell=values["ell"],
        zeta=values["zeta"],
        hbar=values["hbar"],
        c=values["c"],
    )
    lattice = LatticeConfig(
        dims=dims,
        extents=tuple(extents),
        params=params,
        coupling_mode=values["coupling_mode"],
        splitting=values["splitting"],
    )
    try:
        lattice.validate()
    except ConfigError as err:
        where = lines.get("m", lines.get("ell", 0))
        errors.extend(f"line {where}: {msg}" for msg in err.errors)

    if values["steps"] < 0:
        errors.append(f"line {lines.get('steps', 0)}: steps must be >= 0")
    if values["init"] == "file" and not values["init_file"]:
        errors.append("init = file requires init_file")

    if errors:
        raise ConfigError(errors)

    init = InitSpec(
        kind=values["init"],
        k=values["init_k"],
        width=values["init_width"],
        center=values["init_center"],
        weights=values["init_weights"],
        file=values["init_file"],
        normalize=values["normalize"],
    )
    return RunConfig(
        lattice=lattice,
        init=init,
        steps=values["steps"],
        snapshot_every=values["snapshot_every"],
        output_dir=values["output_dir"],
        A_uniform=np.array([values["A0"], values["Ax"], values["Ay"], values["Az"]]),
    )
