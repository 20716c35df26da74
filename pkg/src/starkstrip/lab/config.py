"""Run configuration: schema, defaults, overrides, and auto resolution.

Configs are nested key-value JSON. Every "auto" field resolves against a
preliminary field-free bound-state solve: the reference energy becomes the
binding of the lowest trapped mode relative to the discrete continuum edge,
and the window takes a quarter of the gap to the next level (or the edge).
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from ..discretize import DEFAULT_NS, DEFAULT_NU, DEFAULT_SPACING, Grid, OperatorKind, assemble, grid_for
from ..distortion import DistortionParams
from ..errors import ConfigError, RegimeError
from ..fields import FieldConfig, Regime, cached_total_bend, classify_regime
from ..geometry import CurvatureModel, GeometrySetup
from ..spectra import bound_states

DEFAULT_F_LADDER = [0.0045, 0.0034, 0.0025, 0.0019, 0.0014, 0.00105, 0.0008]
DEFAULT_BETA_SWEEP = [0.03, 0.04, 0.05, 0.06, 0.07]
BASE_BOX = 20.0

DEFAULTS = {
    "geometry": {"d": 1.0, "model": {"type": "rational", "alpha": -0.8, "n": 2}},
    "field": {"F": 0.0019, "F_list": DEFAULT_F_LADDER, "eta": 0.3},
    "distortion": {
        "beta": 0.05,
        "beta_list": DEFAULT_BETA_SWEEP,
        "E": "auto",
        "deltaE": "auto",
        "sharpness": 1.0,
    },
    "grid": {
        "L": "auto",
        "Ns": "auto",
        "Nu": DEFAULT_NU,
        "margin": "auto",
        "spacing": DEFAULT_SPACING,
    },
    "solver": {"method": "auto", "k": 8, "residual_tol": 1e-6, "maxiter": None},
    "output": {"dir": None, "formats": ["csv", "svg"]},
}

_MODEL_TYPES = ("rational", "zero")
_SOLVER_METHODS = ("auto", "dense", "shift-invert")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key: {here}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here}: expected a table, got {type(val).__name__}")
            out[key] = _merge(base[key], val, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings on top of a config dict."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        node = data
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {dotted!r} crosses a scalar")
        node[keys[-1]] = _parse_value(raw.strip())
    return data


@dataclass
class RunConfig:
    """Validated configuration tree."""

    geometry: dict
    field: dict
    distortion: dict
    grid: dict
    solver: dict
    output: dict

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        merged = _merge(DEFAULTS, data or {})
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        g = self.geometry
        if not (isinstance(g["d"], (int, float)) and g["d"] > 0):
            raise ConfigError(f"geometry.d must be positive, got {g['d']}")
        model = g["model"]
        if model["type"] not in _MODEL_TYPES:
            raise ConfigError(f"geometry.model.type must be one of {_MODEL_TYPES}")
        if model["type"] == "rational":
            if not isinstance(model["n"], int) or model["n"] < 2:
                raise ConfigError("geometry.model.n must be an integer >= 2")
        f = self.field
        for key in ("F",):
            if not (0 < f[key] < 1):
                raise ConfigError(f"field.{key} must lie in (0, 1), got {f[key]}")
        if any(not (0 < x < 1) for x in f["F_list"]):
            raise ConfigError("field.F_list entries must lie in (0, 1)")
        d = self.distortion
        if d["beta"] < 0 or any(b < 0 for b in d["beta_list"]):
            raise ConfigError("distortion strengths must be >= 0")
        for key in ("E", "deltaE"):
            if d[key] != "auto" and not isinstance(d[key], (int, float)):
                raise ConfigError(f"distortion.{key} must be a number or 'auto'")
        if d["E"] != "auto" and d["E"] >= 0:
            raise ConfigError("distortion.E must be negative (binding relative to the edge)")
        gr = self.grid
        if gr["Nu"] < 3:
            raise ConfigError("grid.Nu must be >= 3")
        if gr["Ns"] != "auto" and (not isinstance(gr["Ns"], int) or gr["Ns"] < 3):
            raise ConfigError("grid.Ns must be an integer >= 3 or 'auto'")
        if gr["L"] != "auto" and gr["L"] <= 0:
            raise ConfigError("grid.L must be positive or 'auto'")
        if self.solver["method"] not in _SOLVER_METHODS:
            raise ConfigError(f"solver.method must be one of {_SOLVER_METHODS}")

    def build_setup(self) -> GeometrySetup:
        model_cfg = self.geometry["model"]
        if model_cfg["type"] == "zero":
            model = CurvatureModel.zero()
        else:
            model = CurvatureModel.rational(model_cfg["alpha"], model_cfg["n"])
        return GeometrySetup(model, d=self.geometry["d"])

    def as_dict(self) -> dict:
        return {
            "geometry": copy.deepcopy(self.geometry),
            "field": copy.deepcopy(self.field),
            "distortion": copy.deepcopy(self.distortion),
            "grid": copy.deepcopy(self.grid),
            "solver": copy.deepcopy(self.solver),
            "output": copy.deepcopy(self.output),
        }


def load_config(path) -> RunConfig:
    """Read a JSON config file and validate it against the schema."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


@dataclass
class Scenario:
    """Fully resolved physical scenario shared by the command pipelines."""

    config: RunConfig
    setup: GeometrySetup
    field: FieldConfig
    alpha0: float
    regime: Regime
    E0_base: float | None = None      # absolute trapped-mode energy on the base grid
    lambda0_base: float | None = None  # discrete continuum edge of the base grid
    params: DistortionParams | None = None
    resolution_notes: dict = dc_field(default_factory=dict)

    def grid_for_field(self, field: FieldConfig, params: DistortionParams | None = None) -> Grid:
        gr = self.config.grid
        params = params or self.params
        Ns = None if gr["Ns"] == "auto" else gr["Ns"]
        margin = None if gr["margin"] == "auto" else gr["margin"]
        if gr["L"] != "auto":
            L = gr["L"]
            if Ns is None:
                Ns = max(DEFAULT_NS, int(round(2.0 * L / gr["spacing"])) - 1)
            return Grid(L=L, Ns=Ns, Nu=gr["Nu"], d=self.setup.d)
        if params is None:
            raise ConfigError("grid.L='auto' needs distortion parameters to place the box")
        return grid_for(
            self.setup, field, params,
            Nu=gr["Nu"], spacing=gr["spacing"], margin=margin, Ns=Ns, alpha0=self.alpha0,
        )

    def base_grid(self) -> Grid:
        gr = self.config.grid
        L = BASE_BOX if gr["L"] == "auto" else gr["L"]
        Ns = gr["Ns"]
        if Ns == "auto":
            Ns = max(DEFAULT_NS, int(round(2.0 * L / gr["spacing"])) - 1)
        return Grid(L=L, Ns=Ns, Nu=gr["Nu"], d=self.setup.d)


def resolve_scenario(config: RunConfig, *, need_distortion: bool = True) -> Scenario:
    """Resolve auto fields; runs the preliminary bound-state solve when needed.

    The regime gate is applied here: a distortion-bearing command in any
    regime but the resonant one is a configuration error, reported with both
    angles.
    """
    setup = config.build_setup()
    field = FieldConfig(config.field["F"], config.field["eta"])
    alpha0 = cached_total_bend(setup)
    regime = classify_regime(field.eta, alpha0)
    scen = Scenario(config=config, setup=setup, field=field, alpha0=alpha0, regime=regime)
    if not need_distortion:
        return scen
    if regime is not Regime.RESONANT_BOTH_ENDS:
        raise RegimeError(
            f"distortion commands need the resonant-both-ends regime: "
            f"|eta|={abs(field.eta):.6g}, |eta-alpha0|={abs(field.eta - alpha0):.6g} "
            f"classify as {regime.value}"
        )
    d = config.distortion
    E, deltaE = d["E"], d["deltaE"]
    if E == "auto" or deltaE == "auto":
        base = scen.base_grid()
        op = assemble(OperatorKind.BARE, setup, grid=base)
        lam0 = base.lambda0_discrete()
        eigs, _ = bound_states(op, lam0, k=4)
        if len(eigs.values) == 0:
            raise ConfigError(
                "auto distortion reference requires a trapped mode, none found below the edge"
            )
        E0 = float(eigs.values[0])
        gap = float(eigs.values[1] - E0) if len(eigs.values) > 1 else lam0 - E0
        gap = min(gap, lam0 - E0)
        if E == "auto":
            E = E0 - lam0
        if deltaE == "auto":
            deltaE = min(0.5 * abs(E) * (1.0 - 1e-9), 0.25 * gap)
        scen.E0_base = E0
        scen.lambda0_base = lam0
        scen.resolution_notes["auto_reference"] = {
            "E0": E0, "lambda0": lam0, "gap": gap, "grid": (base.L, base.Ns, base.Nu),
        }
    scen.params = DistortionParams(
        E=float(E), deltaE=float(deltaE), beta=float(d["beta"]),
        cutoff_sharpness=float(d["sharpness"]),
    )
    return scen
