"""Per-step diagnostics and trajectory-level checks.

A :class:`DiagnosticsRecord` holds the instantaneous energies and norms of
a state together with running time integrals. The integrals use the
left-endpoint rule, except ``int_D`` in the energy residual which uses the
trapezoid rule: with exact diffusion the left-endpoint error of the
dissipation integral, about ``dt/2 * (D(0) - D(t))``, would otherwise swamp
the splitting error the residual is meant to measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .director import DirectorGeometry
from .spectral import irfft, rfft

COLUMNS = (
    "t",
    "E",
    "grad_u_sq",
    "tension_sq",
    "grad_d_L4_4",
    "lap_d_sq",
    "inf_d3",
    "d_minus_e3_sq",
    "int_u_L4_4",
    "int_grad_d_L4_4",
    "int_lap_d_sq",
    "int_grad_d_sq",
    "int_D",
    "energy_residual",
    "u_L4_4",
)

TOL_MP = 1e-4
PLATEAU_TOL = 0.01
PLATEAU_WINDOW = 0.2
GROWTH_LIMIT = 1e3
CRITERIA_INTEGRALS = ("int_grad_d_L4_4", "int_u_L4_4")


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the diagnostics table.

    The fields after ``u_L4_4`` are auxiliary: they are not serialized and
    are NaN for records read back from disk.
    """

    t: float
    E: float
    grad_u_sq: float
    tension_sq: float
    grad_d_L4_4: float
    lap_d_sq: float
    inf_d3: float
    d_minus_e3_sq: float
    int_u_L4_4: float
    int_grad_d_L4_4: float
    int_lap_d_sq: float
    int_grad_d_sq: float
    int_D: float
    energy_residual: float
    u_L4_4: float
    grad_d_sq: float = field(default=math.nan, compare=False)
    u_max: float = field(default=math.nan, compare=False)
    grad_d_max: float = field(default=math.nan, compare=False)
    initial_energy: float = field(default=math.nan, compare=False)

    @property
    def D(self) -> float:
        """Dissipation rate ``||grad u||^2 + ||tension||^2``."""
        return self.grad_u_sq + self.tension_sq

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in COLUMNS)

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.row())

    def continued_from(self, earlier: "DiagnosticsRecord") -> "DiagnosticsRecord":
        """This record with running integrals and residual taken from ``earlier``.

        Used when resuming a run from a snapshot taken at ``earlier.t``.
        """
        e0 = earlier.E + earlier.int_D - earlier.energy_residual
        carried = {c: getattr(earlier, c) for c in COLUMNS if c.startswith("int_")}
        return replace(
            self, **carried, energy_residual=self.E + earlier.int_D - e0, initial_energy=e0
        )

    @classmethod
    def from_row(cls, values) -> "DiagnosticsRecord":
        return cls(*(float(v) for v in values))


def _instant(state) -> dict:
    grid = state.grid
    area = grid.cell_area
    d = state.d.values
    geo = DirectorGeometry.of(grid, d)
    u = state.u
    uh = rfft(u)
    grad_u = np.stack([irfft(grid, 1j * grid.dk1 * uh), irfft(grid, 1j * grid.dk2 * uh)])
    u_sq_pt = np.sum(u**2, axis=0)
    grad_d_sq = geo.grad_l2_sq
    u_sq = area * float(np.sum(u_sq_pt))
    return dict(
        E=0.5 * (u_sq + grad_d_sq),
        grad_u_sq=area * float(np.sum(grad_u**2)),
        tension_sq=geo.tension_l2_sq,
        grad_d_L4_4=geo.grad_l4_4,
        lap_d_sq=geo.lap_l2_sq,
        inf_d3=float(d[2].min()),
        d_minus_e3_sq=area * float(np.sum(d[0] ** 2 + d[1] ** 2 + (d[2] - 1.0) ** 2)),
        u_L4_4=area * float(np.sum(u_sq_pt**2)),
        grad_d_sq=grad_d_sq,
        u_max=float(np.sqrt(u_sq_pt.max())),
        grad_d_max=float(np.sqrt(geo.grad_sq.max())),
    )


def record(state, dt_last: float = 0.0, prev: DiagnosticsRecord | None = None) -> DiagnosticsRecord:
    """Diagnostics of ``state``, advancing the running integrals of ``prev`` by ``dt_last``."""
    now = _instant(state)
    if prev is None:
        return DiagnosticsRecord(
            t=state.t,
            int_u_L4_4=0.0,
            int_grad_d_L4_4=0.0,
            int_lap_d_sq=0.0,
            int_grad_d_sq=0.0,
            int_D=0.0,
            energy_residual=0.0,
            initial_energy=now["E"],
            **now,
        )
    if not dt_last > 0:
        raise ValueError(f"dt_last must be positive when continuing a record, got {dt_last}")
    if math.isfinite(prev.grad_d_sq):
        prev_grad_d_sq = prev.grad_d_sq
    else:
        raise ValueError("previous record lacks the auxiliary fields needed to continue integrals")
    e0 = prev.initial_energy
    if not math.isfinite(e0):
        e0 = prev.E + prev.int_D - prev.energy_residual
    D = now["grad_u_sq"] + now["tension_sq"]
    int_D = prev.int_D + dt_last * 0.5 * (prev.D + D)
    return DiagnosticsRecord(
        t=state.t,
        int_u_L4_4=prev.int_u_L4_4 + dt_last * prev.u_L4_4,
        int_grad_d_L4_4=prev.int_grad_d_L4_4 + dt_last * prev.grad_d_L4_4,
        int_lap_d_sq=prev.int_lap_d_sq + dt_last * prev.lap_d_sq,
        int_grad_d_sq=prev.int_grad_d_sq + dt_last * prev_grad_d_sq,
        int_D=int_D,
        energy_residual=now["E"] + int_D - e0,
        initial_energy=e0,
        **now,
    )


def max_energy_residual(records) -> float:
    return max(abs(r.energy_residual) for r in records)


# -- trajectory checks ---------------------------------------------------------


@dataclass(frozen=True)
class MaxPrincipleReport:
    min_inf_d3: float
    initial_inf_d3: float
    holds: bool
    applicable: bool


def max_principle_check(records, tol_mp: float = TOL_MP) -> MaxPrincipleReport:
    """``min_t inf d3(t) >= inf d3(0) - tol_mp``; not applicable unless ``inf d3(0) > 0``."""
    initial = records[0].inf_d3
    lowest = min(r.inf_d3 for r in records)
    if not initial > 0:
        return MaxPrincipleReport(lowest, initial, False, False)
    return MaxPrincipleReport(lowest, initial, bool(lowest >= initial - tol_mp), True)


@dataclass(frozen=True)
class GronwallReport:
    lhs_max: float
    bound: float
    ratio_max: float
    holds: bool


def gronwall_check(records, constant: float = 1.0) -> GronwallReport:
    """Compare ``||d - e3||^2 + int ||grad d||^2`` with ``C ||d0 - e3||^2 exp(int ||Delta d||^2)``.

    ``ratio_max`` is the largest ``lhs / (||d0 - e3||^2 exp(int ||Delta d||^2))``;
    it is 0 when both sides vanish. ``bound`` is the right side at the record
    where the ratio peaks.
    """
    base = records[0].d_minus_e3_sq
    ratio_max, lhs_max, bound = 0.0, 0.0, 0.0
    for r in records:
        lhs = r.d_minus_e3_sq + r.int_grad_d_sq
        lhs_max = max(lhs_max, lhs)
        with np.errstate(over="ignore"):
            rhs = base * float(np.exp(r.int_lap_d_sq))
        if lhs == 0.0:
            continue
        ratio = lhs / rhs if rhs > 0 else math.inf
        if ratio > ratio_max:
            ratio_max, bound = ratio, constant * rhs
    return GronwallReport(lhs_max, bound, ratio_max, bool(ratio_max <= constant))


def _value_at(records, attr: str, t: float) -> float:
    """Value of ``attr`` at the last record with time ``<= t``."""
    best = records[0]
    for r in records:
        if r.t <= t:
            best = r
        else:
            break
    return getattr(best, attr)


def plateau_growth(records, attr: str, window: float = PLATEAU_WINDOW) -> float:
    """Relative growth of a running integral over the final ``window`` fraction of the run."""
    t0, t1 = records[0].t, records[-1].t
    end = getattr(records[-1], attr)
    if end == 0.0:
        return 0.0
    start = _value_at(records, attr, t1 - window * (t1 - t0))
    return (end - start) / end


@dataclass(frozen=True)
class BlowupReport:
    int_grad_d_L4_4: float
    int_u_L4_4: float
    growth_factor: float
    plateau: dict
    reached_end: bool
    verdict: str


def blowup_monitor(records, growth_factor: float | None = None, t_end: float | None = None) -> BlowupReport:
    """Global-like iff ``int ||grad d||_4^4`` and ``int ||u||_4^4`` plateau and ``max|grad d|`` grew less than 1e3x.

    ``growth_factor`` defaults to the ratio computed from the auxiliary
    ``grad_d_max`` fields. When ``t_end`` is given, a trajectory stopping
    short of it is blowup-like.
    """
    if growth_factor is None:
        g0 = records[0].grad_d_max
        peaks = [r.grad_d_max for r in records if math.isfinite(r.grad_d_max)]
        growth_factor = max(peaks) / g0 if peaks and g0 > 0 else 1.0
    plateau = {a: plateau_growth(records, a) for a in CRITERIA_INTEGRALS}
    reached = t_end is None or records[-1].t >= t_end * (1 - 1e-9)
    ok = reached and growth_factor < GROWTH_LIMIT and all(g < PLATEAU_TOL for g in plateau.values())
    return BlowupReport(
        records[-1].int_grad_d_L4_4,
        records[-1].int_u_L4_4,
        float(growth_factor),
        plateau,
        reached,
        "global-like" if ok else "blowup-like",
    )


@dataclass(frozen=True)
class CoercivityTrack:
    min_gap: float | None
    gaps: list
    times: list


def coercivity_tracker(records, epsilon0: float | None = None) -> CoercivityTrack:
    """``min_t (1 - ||grad d||_4^4 / ||Delta d||_2^2)`` over nondegenerate records.

    ``epsilon0`` is informational; it is not used to filter records.
    """
    gaps, times = [], []
    for r in records:
        if r.lap_d_sq <= 1e-24:
            continue
        gaps.append(1.0 - r.grad_d_L4_4 / r.lap_d_sq)
        times.append(r.t)
    return CoercivityTrack(min(gaps) if gaps else None, gaps, times)


@dataclass(frozen=True)
class L4ChainReport:
    lhs: float
    rhs: float
    holds: bool


def l4_chain_check(records, gn_constant: float) -> L4ChainReport:
    """``int ||u||_4^4 <= C^4 sup ||u||_2^2 int ||grad u||_2^2`` along a per-step trajectory.

    ``||u||_2^2`` is recovered as ``2E - ||grad d||_2^2``, so records need the
    auxiliary fields.
    """
    int_grad_u = 0.0
    for a, b in zip(records, records[1:]):
        int_grad_u += (b.t - a.t) * a.grad_u_sq
    sup_u = max(2.0 * r.E - r.grad_d_sq for r in records)
    lhs = records[-1].int_u_L4_4
    rhs = gn_constant**4 * sup_u * int_grad_u
    return L4ChainReport(lhs, rhs, bool(lhs <= rhs))

