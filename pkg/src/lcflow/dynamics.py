"""Time integration of the liquid-crystal system and the harmonic-map heat flow.

Both systems share one first-order integrating-factor step: diffusion is
applied exactly through ``exp(dt * Laplacian)`` in Fourier space, the
nonlinear terms are explicit at the left endpoint, and the director is
renormalized onto the sphere afterwards. Pressure is eliminated by the Leray
projection. All quadratic products are dealiased by 3/2 padding; the cubic
``|grad d|^2 d`` is formed as two successive dealiased products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateDirector, InvariantViolation, NonFinite, StepCollapse
from .fields import TOL_EVOLVE, DirectorField, Grid2D, normalize_array
from .spectral import leray_hat, from_padded, irfft, rfft, spectral_divergence_norm, to_padded

DIV_TOL = 1e-10
EPS = 1e-12


@dataclass(frozen=True, eq=False)
class SimState:
    """Time, divergence-free velocity ``u`` of shape (2, n, n) and director ``d``.

    ``drift`` is the largest ``| |d*| - 1 |`` seen before the normalization
    that produced ``d`` (zero for initial data).
    """

    t: float
    u: np.ndarray
    d: DirectorField
    drift: float = 0.0
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        n = self.d.grid.n
        if u.shape != (2, n, n):
            raise ValueError(f"velocity must have shape (2, {n}, {n}), got {u.shape}")
        if self.validate:
            if not np.all(np.isfinite(u)):
                raise NonFinite("velocity contains non-finite samples")
            u_l2 = float(np.sqrt(self.grid.cell_area * np.sum(u**2)))
            div = spectral_divergence_norm(self.grid, u)
            if div > DIV_TOL * max(u_l2, 1.0):
                raise InvariantViolation(f"velocity divergence {div:.3e} exceeds {DIV_TOL:.0e} * max(||u||, 1)")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "t", float(self.t))

    @property
    def grid(self) -> Grid2D:
        return self.d.grid

    @classmethod
    def at_rest(cls, d: DirectorField, t: float = 0.0) -> "SimState":
        n = d.grid.n
        return cls(t, np.zeros((2, n, n)), d)


@dataclass(frozen=True)
class StepPolicy:
    """Time-step selection.

    In ``cfl`` mode ``dt = cfl_number * min(h / max|u|, 1 / max|grad d|^2,
    h^2 * nonlinear_safety)``, capped at ``dt_max`` (default ``h``). The
    ``h^2`` term is only used when ``nonlinear_safety`` is set.
    """

    mode: str = "cfl"
    dt_fixed: float | None = None
    cfl_number: float = 0.4
    dt_min: float = 1e-9
    dt_max: float | None = None
    nonlinear_safety: float | None = None

    def __post_init__(self):
        if self.mode not in ("fixed", "cfl"):
            raise ValueError(f"step mode must be 'fixed' or 'cfl', got {self.mode!r}")
        if self.mode == "fixed" and not (self.dt_fixed is not None and self.dt_fixed > 0):
            raise ValueError("fixed mode needs a positive dt_fixed")
        if not 0 < self.cfl_number < 1:
            raise ValueError(f"cfl_number must lie in (0, 1), got {self.cfl_number}")
        if not self.dt_min > 0:
            raise ValueError("dt_min must be positive")
        if self.dt_max is not None and not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.nonlinear_safety is not None and not self.nonlinear_safety > 0:
            raise ValueError("nonlinear_safety must be positive")


# -- nonlinear terms -----------------------------------------------------------


def _padded_gradient(grid: Grid2D, fh: np.ndarray) -> np.ndarray:
    """Gradient on the 3/2 grid; leading axis indexes the derivative."""
    return np.stack([to_padded(grid, 1j * grid.dk1 * fh), to_padded(grid, 1j * grid.dk2 * fh)])


def _stress_divergence_hat(grid: Grid2D, grad_p: np.ndarray) -> np.ndarray:
    """Fourier coefficients of ``div(grad d (x) grad d)`` from the padded gradient."""
    s11 = np.einsum("cxy,cxy->xy", grad_p[0], grad_p[0])
    s12 = np.einsum("cxy,cxy->xy", grad_p[0], grad_p[1])
    s22 = np.einsum("cxy,cxy->xy", grad_p[1], grad_p[1])
    sh = from_padded(grid, np.stack([s11, s12, s22]))
    k1, k2 = 1j * grid.dk1, 1j * grid.dk2
    return np.stack([k1 * sh[0] + k2 * sh[1], k1 * sh[1] + k2 * sh[2]])


def elastic_stress(d: DirectorField) -> np.ndarray:
    """``div(grad d (x) grad d)``: component i is ``sum_j d_j(d_i d . d_j d)``."""
    grid = d.grid
    grad_p = _padded_gradient(grid, rfft(d.values))
    return irfft(grid, _stress_divergence_hat(grid, grad_p))


def _tension_source_padded(grid: Grid2D, dh: np.ndarray, grad_p: np.ndarray) -> np.ndarray:
    """``|grad d|^2 d`` on the padded grid, the square truncated before multiplying."""
    gsq = np.einsum("icxy,icxy->xy", grad_p, grad_p)
    gsq_p = to_padded(grid, from_padded(grid, gsq))
    return gsq_p * to_padded(grid, dh)


def _advance_director(grid: Grid2D, dh: np.ndarray, nd_h: np.ndarray, dt: float, decay: np.ndarray):
    raw = irfft(grid, decay * (dh + dt * nd_h))
    if not np.all(np.isfinite(raw)):
        raise NonFinite("director became non-finite")
    drift = float(np.max(np.abs(np.sqrt(np.einsum("cxy,cxy->xy", raw, raw)) - 1.0)))
    return DirectorField(grid, normalize_array(raw), TOL_EVOLVE), drift


def _check_dt(dt: float) -> float:
    if not dt > 0 or not math.isfinite(dt):
        raise ValueError(f"time step must be positive and finite, got {dt}")
    return float(dt)


def step_heat_flow(state: SimState, dt: float) -> SimState:
    """One step of ``d_t = Laplacian d + |grad d|^2 d`` with ``u = 0``.

    Raises:
        DegenerateDirector: if the pre-normalization director vanishes somewhere.
    """
    dt = _check_dt(dt)
    grid = state.grid
    dh = rfft(state.d.values)
    grad_p = _padded_gradient(grid, dh)
    nd_h = from_padded(grid, _tension_source_padded(grid, dh, grad_p))
    d_new, drift = _advance_director(grid, dh, nd_h, dt, np.exp(-dt * grid.ksq))
    return SimState(state.t + dt, np.zeros_like(state.u), d_new, drift, validate=False)


def step_liquid_crystal(state: SimState, dt: float) -> SimState:
    """One coupled step of the simplified Ericksen-Leslie system.

    Raises:
        DegenerateDirector: if the pre-normalization director vanishes somewhere.
        NonFinite: if a field sample becomes non-finite.
    """
    dt = _check_dt(dt)
    grid = state.grid
    uh = rfft(state.u)
    dh = rfft(state.d.values)
    grad_p = _padded_gradient(grid, dh)
    u_p = to_padded(grid, uh)
    grad_u_p = _padded_gradient(grid, uh)

    nd_p = _tension_source_padded(grid, dh, grad_p)
    nd_p = nd_p - (u_p[0] * grad_p[0] + u_p[1] * grad_p[1])
    advection = u_p[0] * grad_u_p[0] + u_p[1] * grad_u_p[1]
    nu_h = -from_padded(grid, advection) - _stress_divergence_hat(grid, grad_p)

    decay = np.exp(-dt * grid.ksq)
    u_new = irfft(grid, leray_hat(grid, decay * (uh + dt * leray_hat(grid, nu_h))))
    if not np.all(np.isfinite(u_new)):
        raise NonFinite("velocity became non-finite")
    d_new, drift = _advance_director(grid, dh, from_padded(grid, nd_p), dt, decay)
    return SimState(state.t + dt, u_new, d_new, drift, validate=False)


# -- step size -----------------------------------------------------------------


def cfl_dt(grid: Grid2D, u_max: float, grad_sq_max: float, policy: StepPolicy) -> float:
    """Step size from precomputed ``max|u|`` and ``max|grad d|^2``; see :func:`choose_dt`."""
    if policy.mode == "fixed":
        dt = float(policy.dt_fixed)
    else:
        limits = [grid.h / (u_max + EPS), 1.0 / (grad_sq_max + EPS)]
        if policy.nonlinear_safety is not None:
            limits.append(grid.h**2 * policy.nonlinear_safety)
        dt = policy.cfl_number * min(limits)
        dt = min(dt, policy.dt_max if policy.dt_max is not None else grid.h)
    if dt < policy.dt_min:
        raise StepCollapse(dt, policy.dt_min)
    return dt


def choose_dt(state: SimState, policy: StepPolicy) -> float:
    """Next step size under ``policy``.

    Raises:
        StepCollapse: if the required step is below ``policy.dt_min``.
    """
    grid = state.grid
    dh = rfft(state.d.values)
    grad = np.stack([irfft(grid, 1j * grid.dk1 * dh), irfft(grid, 1j * grid.dk2 * dh)])
    grad_sq_max = float(np.einsum("icxy,icxy->xy", grad, grad).max())
    u_max = float(np.sqrt(np.sum(state.u**2, axis=0)).max())
    return cfl_dt(grid, u_max, grad_sq_max, policy)


# -- driver --------------------------------------------------------------------

COMPLETED = "completed"
BLOWUP = "blowup_detected"
ABORTED = "aborted"


@dataclass
class RunConfig:
    """Everything :func:`run` needs; built by the config layer or directly in code.

    Blowup is flagged on step collapse, a degenerate director, ``max|grad d|``
    exceeding ``growth_limit`` times its initial value, or a pre-normalization
    drift above ``tol_drift`` (when set).
    """

    initial: SimState
    t_end: float
    system: str = "liquid_crystal"
    policy: StepPolicy = field(default_factory=StepPolicy)
    record_interval: float | None = None
    snapshot_interval: float | None = None
    on_snapshot: Callable[[SimState], None] | None = None
    on_record: Callable[[object], None] | None = None
    growth_limit: float = 1e3
    tol_drift: float | None = None
    initial_record: object | None = None
    reference_grad_max: float | None = None

    def __post_init__(self):
        if self.system not in ("liquid_crystal", "heat_flow"):
            raise ValueError(f"unknown system {self.system!r}")
        if not self.t_end > self.initial.t:
            raise ValueError("t_end must exceed the initial time")
        for name in ("record_interval", "snapshot_interval"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.system == "heat_flow" and np.any(self.initial.u != 0):
            raise ValueError("heat flow requires zero velocity")


@dataclass
class RunResult:
    status: str
    records: list
    final: SimState
    steps: int
    reason: str = ""
    dts: list = field(default_factory=list)
    max_drift: float = 0.0
    growth_factor: float = 1.0


def _due(t: float, interval: float | None, last: float) -> bool:
    if interval is None:
        return True
    return math.floor(t / interval + 1e-9) > math.floor(last / interval + 1e-9)


def run(config: RunConfig) -> RunResult:
    """Advance ``config.initial`` to ``config.t_end`` or until a blowup signal.

    The current diagnostics record is updated every step so running
    integrals use the full step sequence; records are emitted at t = 0, at
    every crossing of a multiple of ``record_interval`` (every step when it is
    None), at every snapshot and at the final time, so each snapshot has a
    matching record to resume from.
    """
    from .diagnostics import record as make_record

    step = step_liquid_crystal if config.system == "liquid_crystal" else step_heat_flow
    state = config.initial
    current = make_record(state)
    if config.initial_record is not None:
        current = current.continued_from(config.initial_record)
    records = [current]
    if config.on_record:
        config.on_record(current)
    g0 = config.reference_grad_max if config.reference_grad_max is not None else current.grad_d_max
    t_end = config.t_end
    tiny = 1e-12 * max(t_end, 1.0)
    status, reason = COMPLETED, ""
    dts: list[float] = []
    max_drift = 0.0
    growth = 1.0
    last_emit_t = state.t
    last_snap_t = state.t

    def emit(rec):
        records.append(rec)
        if config.on_record:
            config.on_record(rec)

    while state.t < t_end - tiny:
        try:
            dt = cfl_dt(state.grid, current.u_max, current.grad_d_max**2, config.policy)
            dt = min(dt, t_end - state.t)
            state = step(state, dt)
        except StepCollapse as exc:
            status, reason = BLOWUP, f"step collapse: {exc}"
            break
        except DegenerateDirector as exc:
            status, reason = BLOWUP, f"degenerate director: {exc}"
            break
        except NonFinite as exc:
            status, reason = ABORTED, f"non-finite state: {exc}"
            break
        dts.append(dt)
        max_drift = max(max_drift, state.drift)
        current = make_record(state, dt, current)
        if not current.is_finite():
            status, reason = ABORTED, "non-finite diagnostics"
            emit(current)
            break
        if g0 > 0:
            growth = max(growth, current.grad_d_max / g0)
        done = state.t >= t_end - tiny
        snap = (
            config.on_snapshot is not None
            and config.snapshot_interval is not None
            and _due(state.t, config.snapshot_interval, last_snap_t)
        )
        if done or snap or _due(state.t, config.record_interval, last_emit_t):
            emit(current)
            last_emit_t = state.t
        if snap:
            config.on_snapshot(state)
            last_snap_t = state.t
        if growth >= config.growth_limit:
            status, reason = BLOWUP, f"gradient grew by {growth:.3g}x"
            break
        if config.tol_drift is not None and state.drift > config.tol_drift:
            status, reason = BLOWUP, f"pre-normalization drift {state.drift:.3g} > {config.tol_drift:g}"
            break
    if records[-1] is not current:
        emit(current)
    return RunResult(status, records, state, len(dts), reason, dts, max_drift, growth)
