"""Run configuration: ``key = value`` text with dotted keys and ``#`` comments.

Example::

    system = liquid_crystal
    grid.n = 128
    grid.L = 3.141592653589793
    scenario.name = hemisphere
    scenario.epsilon0 = 0.5
    velocity.kind = random
    velocity.energy = 1.0
    run.t_end = 2.0

Every key is checked against a fixed schema. Scenario and velocity keys are
only accepted for the scenario or velocity kind they belong to, so a typo or
a leftover parameter is an error rather than silently ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import RunConfig, SimState, StepPolicy
from .errors import ParseError, ValidationError
from .fields import DirectorField, Grid2D
from .scenarios import (
    RadialProfile,
    divergence_free_velocity,
    equator_map,
    hemisphere_random_data,
    radial_data,
    stereographic_bubble,
    taylor_green,
)

SYSTEMS = ("liquid_crystal", "heat_flow")


@dataclass(frozen=True)
class Key:
    kind: type
    default: object = None
    required: bool = False
    check: Callable[[object], bool] | None = None
    rule: str = ""
    choices: tuple = ()


def _positive(v):
    return v > 0


def _unit_open(v):
    return 0 < v < 1


def _power_of_two(v):
    return v >= 8 and v & (v - 1) == 0


def _nonneg(v):
    return v >= 0


GENERAL = {
    "system": Key(str, required=True, choices=SYSTEMS),
    "grid.n": Key(int, required=True, check=_power_of_two, rule="a power of two >= 8"),
    "grid.L": Key(float, 2 * math.pi, check=_positive, rule="positive"),
    "scenario.name": Key(str, required=True, choices=("hemisphere", "radial", "constant", "equator", "bubble")),
    "velocity.kind": Key(str, "none", choices=("none", "random", "taylor_green")),
    "step.mode": Key(str, "cfl", choices=("cfl", "fixed")),
    "step.dt": Key(float, None, check=_positive, rule="positive"),
    "step.cfl": Key(float, 0.4, check=_unit_open, rule="in (0, 1)"),
    "step.dt_min": Key(float, 1e-9, check=_positive, rule="positive"),
    "step.dt_max": Key(float, None, check=_positive, rule="positive"),
    "step.nonlinear_safety": Key(float, None, check=_positive, rule="positive"),
    "run.t_end": Key(float, required=True, check=_positive, rule="positive"),
    "run.record_interval": Key(float, None, check=_positive, rule="positive"),
    "run.snapshot_interval": Key(float, None, check=_positive, rule="positive"),
    "output.dir": Key(str, "output"),
    "tol.drift": Key(float, None, check=_positive, rule="positive"),
    "tol.growth": Key(float, 1e3, check=lambda v: v > 1, rule="greater than 1"),
    "tol.mp": Key(float, 1e-4, check=_nonneg, rule="nonnegative"),
}

# Lengths given as None default to a fraction of grid.L; centers default to the box center.
SCENARIO_KEYS = {
    "hemisphere": {
        "scenario.epsilon0": Key(float, required=True, check=_unit_open, rule="in (0, 1)"),
        "scenario.roughness": Key(int, 2, check=lambda v: v >= 1, rule=">= 1"),
        "scenario.amplitude": Key(float, 1.0, check=_nonneg, rule="nonnegative"),
        "scenario.seed": Key(int, 0, check=_nonneg, rule="nonnegative"),
    },
    "radial": {
        "scenario.sup_psi": Key(float, required=True, check=_nonneg, rule="nonnegative"),
        "scenario.width": Key(float, None, check=_positive, rule="positive"),
        "scenario.r_cut": Key(float, None, check=_positive, rule="positive"),
        "scenario.center_x1": Key(float, None),
        "scenario.center_x2": Key(float, None),
    },
    "constant": {},
    "equator": {"scenario.mode": Key(int, 1, check=lambda v: v >= 1, rule=">= 1")},
    "bubble": {
        "scenario.scale": Key(float, required=True, check=_positive, rule="positive"),
        "scenario.center_x1": Key(float, None),
        "scenario.center_x2": Key(float, None),
    },
}

VELOCITY_KEYS = {
    "none": {},
    "random": {
        "velocity.energy": Key(float, 1.0, check=_nonneg, rule="nonnegative"),
        "velocity.max_mode": Key(int, 4, check=lambda v: v >= 1, rule=">= 1"),
        "velocity.seed": Key(int, 1, check=_nonneg, rule="nonnegative"),
    },
    "taylor_green": {
        "velocity.amplitude": Key(float, 1.0),
        "velocity.mode": Key(int, 1, check=lambda v: v >= 1, rule=">= 1"),
    },
}

RADIAL_WIDTH_FRACTION = 1 / 32
RADIAL_CUTOFF_FRACTION = 1 / 4


@dataclass(frozen=True)
class Config:
    """Validated run configuration.

    Optional keys take the defaults listed in the schema tables of this
    module; ``scenario`` and ``velocity`` hold the resolved parameters of the
    chosen kinds, including defaults.
    """

    system: str
    n: int
    L: float
    scenario_name: str
    scenario: dict
    velocity_kind: str
    velocity: dict
    step_mode: str
    dt: float | None
    cfl: float
    dt_min: float
    dt_max: float | None
    nonlinear_safety: float | None
    t_end: float
    record_interval: float | None
    snapshot_interval: float | None
    output_dir: str
    tol_drift: float | None
    tol_growth: float
    tol_mp: float
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.n, self.L)

    @property
    def policy(self) -> StepPolicy:
        return StepPolicy(self.step_mode, self.dt, self.cfl, self.dt_min, self.dt_max, self.nonlinear_safety)


def _tokenize(text: str) -> tuple[dict, dict]:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or any(c.isspace() for c in key):
            raise ParseError(f"line {lineno}: invalid key {key!r}")
        if not value:
            raise ParseError(f"line {lineno}: missing value for {key!r}")
        if key in values:
            raise ParseError(f"line {lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        values[key], lines[key] = value, lineno
    return values, lines


def _convert(key: str, spec: Key, raw: str, lineno: int):
    if spec.kind is str:
        v = raw
    elif spec.kind is int:
        try:
            v = int(raw)
        except ValueError:
            raise ValidationError(f"{key} (line {lineno}): expected an integer, got {raw!r}") from None
    else:
        try:
            v = float(raw)
        except ValueError:
            raise ValidationError(f"{key} (line {lineno}): expected a number, got {raw!r}") from None
        if not math.isfinite(v):
            raise ValidationError(f"{key} (line {lineno}): value must be finite")
    if spec.choices and v not in spec.choices:
        raise ValidationError(f"{key} (line {lineno}): must be one of {', '.join(spec.choices)}; got {v!r}")
    if spec.check is not None and not spec.check(v):
        raise ValidationError(f"{key} (line {lineno}): must be {spec.rule}; got {raw}")
    return v


def _resolve(schema: dict, values: dict, lines: dict) -> dict:
    out = {}
    for key, spec in schema.items():
        if key in values:
            out[key] = _convert(key, spec, values[key], lines[key])
        elif spec.required:
            raise ValidationError(f"{key}: required key is missing")
        else:
            out[key] = spec.default
    return out


def parse_config(text: str) -> Config:
    """Parse and validate configuration text.

    Raises:
        ParseError: malformed line or duplicate key (with line numbers).
        ValidationError: unknown, missing, or out-of-range key (named).
    """
    values, lines = _tokenize(text)
    general = _resolve(GENERAL, values, lines)
    scen_schema = SCENARIO_KEYS[general["scenario.name"]]
    vel_schema = VELOCITY_KEYS[general["velocity.kind"]]
    known = set(GENERAL) | set(scen_schema) | set(vel_schema)
    for key in values:
        if key not in known:
            if key.startswith("scenario.") and any(key in s for s in SCENARIO_KEYS.values()):
                why = f"not a parameter of scenario {general['scenario.name']!r}"
            elif key.startswith("velocity.") and any(key in s for s in VELOCITY_KEYS.values()):
                why = f"not a parameter of velocity kind {general['velocity.kind']!r}"
            else:
                why = "unknown key"
            raise ValidationError(f"{key} (line {lines[key]}): {why}")
    scen = {k.split(".", 1)[1]: v for k, v in _resolve(scen_schema, values, lines).items()}
    vel = {k.split(".", 1)[1]: v for k, v in _resolve(vel_schema, values, lines).items()}

    L = general["grid.L"]
    n = general["grid.n"]
    if general["scenario.name"] == "radial":
        scen["width"] = scen["width"] if scen["width"] is not None else RADIAL_WIDTH_FRACTION * L
        scen["r_cut"] = scen["r_cut"] if scen["r_cut"] is not None else RADIAL_CUTOFF_FRACTION * L
        if scen["r_cut"] >= L / 2:
            raise ValidationError(f"scenario.r_cut: must be below grid.L / 2 = {L / 2:g}")
    if "center_x1" in scen:
        for c in ("center_x1", "center_x2"):
            scen[c] = scen[c] if scen[c] is not None else L / 2
    if general["scenario.name"] == "hemisphere" and scen["roughness"] >= n // 2:
        raise ValidationError(f"scenario.roughness: must be below grid.n / 2 = {n // 2}")
    if general["scenario.name"] == "equator" and scen["mode"] >= n // 2:
        raise ValidationError(f"scenario.mode: must be below grid.n / 2 = {n // 2}")
    if general["velocity.kind"] == "random" and vel["max_mode"] >= n // 2:
        raise ValidationError(f"velocity.max_mode: must be below grid.n / 2 = {n // 2}")
    if general["system"] == "heat_flow" and general["velocity.kind"] != "none":
        raise ValidationError("velocity.kind: heat_flow runs carry no velocity; use 'none'")
    if general["step.mode"] == "fixed" and general["step.dt"] is None:
        raise ValidationError("step.dt: required when step.mode = fixed")
    if general["step.mode"] == "cfl" and general["step.dt"] is not None:
        raise ValidationError("step.dt: only used when step.mode = fixed")

    return Config(
        system=general["system"],
        n=n,
        L=L,
        scenario_name=general["scenario.name"],
        scenario=scen,
        velocity_kind=general["velocity.kind"],
        velocity=vel,
        step_mode=general["step.mode"],
        dt=general["step.dt"],
        cfl=general["step.cfl"],
        dt_min=general["step.dt_min"],
        dt_max=general["step.dt_max"],
        nonlinear_safety=general["step.nonlinear_safety"],
        t_end=general["run.t_end"],
        record_interval=general["run.record_interval"],
        snapshot_interval=general["run.snapshot_interval"],
        output_dir=general["output.dir"],
        tol_drift=general["tol.drift"],
        tol_growth=general["tol.growth"],
        tol_mp=general["tol.mp"],
        lines=lines,
    )


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc})") from None
    return parse_config(text)


# -- builders ------------------------------------------------------------------


def initial_director(cfg: Config) -> DirectorField:
    grid, p = cfg.grid, cfg.scenario
    name = cfg.scenario_name
    if name == "hemisphere":
        return hemisphere_random_data(p["epsilon0"], p["roughness"], p["amplitude"], p["seed"], grid).director
    if name == "radial":
        profile = RadialProfile.from_sup(p["sup_psi"], p["width"], p["r_cut"])
        return radial_data(profile, (p["center_x1"], p["center_x2"]), grid)
    if name == "equator":
        return equator_map(grid, p["mode"])
    if name == "bubble":
        return stereographic_bubble(p["scale"], (p["center_x1"], p["center_x2"]), grid)
    return DirectorField.constant(grid)


def initial_velocity(cfg: Config) -> np.ndarray:
    grid, p = cfg.grid, cfg.velocity
    if cfg.velocity_kind == "random":
        return divergence_free_velocity(p["seed"], p["max_mode"], p["energy"], grid)
    if cfg.velocity_kind == "taylor_green":
        return taylor_green(grid, p["amplitude"], p["mode"])
    return np.zeros((2, grid.n, grid.n))


def initial_state(cfg: Config) -> SimState:
    return SimState(0.0, initial_velocity(cfg), initial_director(cfg))


def run_config(cfg: Config, initial: SimState | None = None, **hooks) -> RunConfig:
    """:class:`RunConfig` for ``cfg``; ``hooks`` are passed through (callbacks, ``initial_record``)."""
    if initial is None:
        initial = initial_state(cfg)
    return RunConfig(
        initial=initial,
        t_end=cfg.t_end,
        system=cfg.system,
        policy=cfg.policy,
        record_interval=cfg.record_interval,
        snapshot_interval=cfg.snapshot_interval,
        growth_limit=cfg.tol_growth,
        tol_drift=cfg.tol_drift,
        **hooks,
    )
