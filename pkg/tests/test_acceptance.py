"""Acceptance criteria 1-12, each reported as one PASS/FAIL line.

Lines are printed as the tests run and repeated in the terminal summary.
"""

import math
import re
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from lcflow.checks import bernstein_suite, frequency_suite, gn_suite, spectral_suite, sphere_suite
from lcflow.cli import main
from lcflow.diagnostics import (
    blowup_monitor,
    coercivity_tracker,
    max_energy_residual,
    max_principle_check,
    plateau_growth,
)
from lcflow.director import coercivity_ratio, geometry
from lcflow.dynamics import RunConfig, SimState, StepPolicy, run, step_heat_flow, step_liquid_crystal
from lcflow.fields import DirectorField, Grid2D
from lcflow.io import read_diagnostics
from lcflow.rigidity import OptimizerSettings, random_feasible_batch, ratios_of, sweep
from lcflow.scenarios import (
    divergence_free_velocity,
    equator_map,
    hemisphere_random_data,
    rng_for,
    stereographic_bubble,
    taylor_green,
)


def report(k: int, passed: bool, detail: str):
    line = f"CRITERION {k}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def suite_detail(rep) -> str:
    return "; ".join(c.line() for c in rep.checks)


class TestIdentities:
    def test_1_spectral_suite(self):
        t0 = time.perf_counter()
        rep = spectral_suite()
        elapsed = time.perf_counter() - t0
        report(1, rep.passed and elapsed < 10.0, f"{suite_detail(rep)}; runtime {elapsed:.2f} s (limit 10 s)")

    def test_2_sphere_identity(self):
        rep = sphere_suite()
        report(2, rep.passed, suite_detail(rep))

    def test_3_sharpness_oracles(self):
        g = Grid2D(64, 2 * np.pi)
        d = equator_map(g)
        ratio = coercivity_ratio(d)
        tension_norm = math.sqrt(geometry(d).tension_l2_sq)
        bubble = stereographic_bubble(1.0, (20.0, 20.0), Grid2D(256, 40.0))
        energy_err = abs(geometry(bubble).grad_l2_sq / (8 * np.pi) - 1)
        ok = abs(ratio - 1) <= 1e-8 and tension_norm < 1e-10 and energy_err <= 1e-2
        report(
            3,
            ok,
            f"equator |ratio-1|={abs(ratio - 1):.2e} (limit 1e-8), ||tension||={tension_norm:.2e} (limit 1e-10), "
            f"bubble |E/8pi-1|={energy_err:.2e} (limit 1e-2)",
        )


EPSILONS = (0.2, 0.5, 0.8)
C0S = (2.0, 5.0, 10.0)
RANDOM_SAMPLES = 10_000
GAP = 1e-3


class TestRigidity:
    def test_4_rigidity_gap(self):
        t0 = time.perf_counter()
        g = Grid2D(64, 2 * np.pi)
        cells = sweep(g, EPSILONS, C0S, OptimizerSettings())
        worst_iterate = max(float(np.max(c.result.feasible_ratios)) for c in cells)
        rng = rng_for(4)
        worst_random = -math.inf
        per_cell = -(-RANDOM_SAMPLES // len(cells))
        drawn = 0
        for c in cells:
            for start in range(0, per_cell, 250):
                batch = random_feasible_batch(g, c.epsilon0, c.C0, min(250, per_cell - start), rng)
                r = ratios_of(g, batch)
                drawn += len(r)
                worst_random = max(worst_random, float(np.nanmax(r)))
        delta = {(c.epsilon0, c.C0): c.result.delta0_estimate for c in cells}
        mono_eps = all(delta[(a, c0)] <= delta[(b, c0)] for c0 in C0S for a, b in zip(EPSILONS, EPSILONS[1:]))
        mono_c0 = all(delta[(e, a)] >= delta[(e, b)] for e in EPSILONS for a, b in zip(C0S, C0S[1:]))
        elapsed = time.perf_counter() - t0
        ok = (
            worst_iterate <= 1 - GAP
            and worst_random <= 1 - GAP
            and drawn >= RANDOM_SAMPLES
            and mono_eps
            and mono_c0
            and elapsed < 600
        )
        table = " ".join(f"({e:g},{c:g}):{delta[(e, c)]:.4f}" for e in EPSILONS for c in C0S)
        report(
            4,
            ok,
            f"max iterate ratio {worst_iterate:.4f}, max ratio over {drawn} random samples {worst_random:.4f} "
            f"(limit {1 - GAP}); delta0 monotone eps={mono_eps} C0={mono_c0} [{table}]; runtime {elapsed:.0f} s",
        )


HEMI_N, HEMI_L, HEMI_T = 128, np.pi, 2.0
HEMI_CFL = 0.0025


def hemisphere_initial() -> SimState:
    g = Grid2D(HEMI_N, HEMI_L)
    d = hemisphere_random_data(0.5, 2, 10.0, 0, g).director
    return SimState(0.0, divergence_free_velocity(0, 2, 1.0, g), d)


@pytest.fixture(scope="module")
def hemisphere_runs():
    out = {}
    for cfl in (HEMI_CFL, HEMI_CFL / 2):
        t0 = time.perf_counter()
        res = run(RunConfig(hemisphere_initial(), HEMI_T, policy=StepPolicy(cfl_number=cfl)))
        out[cfl] = (res, time.perf_counter() - t0)
    return out


class TestHemisphereRun:
    def test_5_energy_law(self, hemisphere_runs):
        res, elapsed = hemisphere_runs[HEMI_CFL]
        half, _ = hemisphere_runs[HEMI_CFL / 2]
        e0 = res.records[0].E
        resid = max_energy_residual(res.records)
        halving = resid / max_energy_residual(half.records)
        ok = res.status == "completed" and resid <= 1e-4 * e0 and abs(halving - 2) <= 0.6 and elapsed < 300
        report(
            5,
            ok,
            f"max|residual|/E0={resid / e0:.3e} (limit 1e-4) over {res.steps} steps, "
            f"halving ratio {halving:.3f} (2 +/- 30%), runtime {elapsed:.0f} s",
        )

    def test_6_maximum_principle(self, hemisphere_runs):
        res, _ = hemisphere_runs[HEMI_CFL]
        mp = max_principle_check(res.records, 1e-4)
        report(
            6,
            mp.applicable and mp.holds,
            f"min_t inf d3={mp.min_inf_d3:.6f}, inf d3(0)={mp.initial_inf_d3:.6f} (tol 1e-4)",
        )

    def test_7_global_bounds(self, hemisphere_runs):
        res, _ = hemisphere_runs[HEMI_CFL]
        recs = res.records
        growth = {a: plateau_growth(recs, a) for a in ("int_lap_d_sq", "int_grad_d_L4_4", "int_grad_d_sq")}
        verdict = blowup_monitor(recs, res.growth_factor, HEMI_T).verdict
        gap = coercivity_tracker(recs).min_gap
        lhs = 0.5 * gap * (recs[-1].int_lap_d_sq + recs[-1].int_grad_d_L4_4)
        ok = all(v < 0.01 for v in growth.values()) and verdict == "global-like" and lhs <= recs[0].E
        detail = ", ".join(f"{a} growth {v:.1e}" for a, v in growth.items())
        report(7, ok, f"{detail} (limit 1e-2); verdict {verdict}; (gap/2)(int Lap + int L4)={lhs:.4f} <= E0={recs[0].E:.4f}")


RADIAL_N, RADIAL_L, RADIAL_CFL = 256, 8.0, 0.2


def radial_config(sup, out):
    return f"""
system = heat_flow
grid.n = {RADIAL_N}
grid.L = {RADIAL_L}
scenario.name = radial
scenario.sup_psi = {sup!r}
step.cfl = {RADIAL_CFL}
step.dt_min = {RADIAL_CFL * (RADIAL_L / RADIAL_N) ** 2!r}
run.t_end = 1.0
run.record_interval = 0.05
output.dir = {out}
"""


def simulate_radial(workdir, sup, capsys):
    workdir.mkdir()
    cfg = workdir / "radial.cfg"
    cfg.write_text(radial_config(sup, workdir / "run"))
    t0 = time.perf_counter()
    code = main(["simulate", "--config", str(cfg)])
    elapsed = time.perf_counter() - t0
    summary = capsys.readouterr().out.strip()
    records = read_diagnostics(workdir / "run" / "diagnostics.csv")
    growth = float(re.search(r"growth=(\S+)", summary).group(1))
    return code, elapsed, summary, records, growth


class TestBlowupDichotomy:
    def test_8_radial_heat_flow(self, tmp_path, capsys):
        code_lo, t_lo, sum_lo, recs_lo, growth_lo = simulate_radial(tmp_path / "lo", 0.8 * np.pi, capsys)
        verdict = blowup_monitor(recs_lo, growth_lo, 1.0).verdict
        code_hi, t_hi, sum_hi, recs_hi, _ = simulate_radial(tmp_path / "hi", 1.2 * np.pi, capsys)
        t_stop = recs_hi[-1].t
        ok = code_lo == 0 and verdict == "global-like" and code_hi == 2 and t_stop < 1.0 and max(t_lo, t_hi) < 600
        report(
            8,
            ok,
            f"0.8pi: exit {code_lo}, {verdict}, {t_lo:.0f} s; 1.2pi: exit {code_hi}, stopped at t={t_stop:.4f}, "
            f"{t_hi:.0f} s [{sum_hi}]",
        )


class TestOracles:
    def test_9_taylor_green(self):
        g = Grid2D(32, 2 * np.pi)
        u0 = taylor_green(g, 1.0, 1)
        s = SimState(0.0, u0, DirectorField.constant(g))
        for _ in range(100):
            s = step_liquid_crystal(s, 0.01)
        exact = u0 * math.exp(-2 * (2 * np.pi / g.length) ** 2 * s.t)
        err = np.linalg.norm(s.u - exact) / np.linalg.norm(exact)
        report(9, err < 1e-6, f"relative error {err:.2e} after 100 steps (limit 1e-6)")

    def test_12_reduction_consistency(self):
        g = Grid2D(64, 2 * np.pi)
        lc = hf = SimState.at_rest(equator_map(g))
        worst = 0.0
        for _ in range(200):
            lc, hf = step_liquid_crystal(lc, 0.005), step_heat_flow(hf, 0.005)
            worst = max(worst, np.abs(lc.d.values - hf.d.values).max(), np.abs(lc.u).max())
        report(12, worst <= 1e-12, f"max per-step difference {worst:.2e} over 200 steps (limit 1e-12)")


class TestFrequencyCorpora:
    def test_10_frequency_split(self):
        rep = frequency_suite()
        report(10, rep.passed, suite_detail(rep))

    def test_11_bernstein_and_gn(self):
        reps = [bernstein_suite(), gn_suite()]
        report(11, all(r.passed for r in reps), "; ".join(suite_detail(r) for r in reps))
