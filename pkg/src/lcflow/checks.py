"""Property suites over seeded field corpora.

Each suite returns a :class:`SuiteReport` of named pass/fail checks; the CLI
``check`` command and the acceptance tests both run them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .director import DirectorGeometry
from .fields import E3, DirectorField, Grid2D, normalize_array
from .norms import gn_check, lp_norm
from .rigidity import band_split_bounds
from .scenarios import band_limited_noise, rng_for, stereographic_bubble
from .spectral import (
    bernstein_check,
    leray_project,
    lp_high,
    lp_low,
    parseval_norm_sq,
    to_physical,
    to_spectral,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    limit: float

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.value:.3e} (limit {self.limit:.3e})"


@dataclass
class SuiteReport:
    name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, value: float, limit: float, passed: bool | None = None) -> Check:
        ok = bool(value <= limit) if passed is None else bool(passed)
        c = Check(name, ok, float(value), float(limit))
        self.checks.append(c)
        return c


# -- corpora -------------------------------------------------------------------


def smooth_director(grid: Grid2D, seed: int, max_mode: int = 5, amplitude: float = 0.5) -> DirectorField:
    """``normalize(e3 + w)`` with ``w`` a random trigonometric 3-field of peak size ``amplitude``.

    The same seed gives the same continuum field on every resolving grid.
    """
    w = band_limited_noise(grid, rng_for(seed), max_mode, 3)
    w *= amplitude / np.sqrt(np.sum(w**2, axis=0)).max()
    return DirectorField(grid, normalize_array(E3[:, None, None] + w))


def scalar_corpus(grid: Grid2D, count: int, seed: int = 0, max_mode: int = 6) -> list[np.ndarray]:
    """Seeded scalar trigonometric polynomials of unit peak value."""
    out = []
    for i in range(count):
        rng = rng_for(seed + i)
        f = band_limited_noise(grid, rng, int(rng.integers(1, max_mode + 1)), 1)[0]
        out.append(f / np.abs(f).max())
    return out


def vector_corpus(grid: Grid2D, count: int, seed: int = 0, max_mode: int = 6) -> list[np.ndarray]:
    out = []
    for i in range(count):
        rng = rng_for(seed + i)
        u = band_limited_noise(grid, rng, int(rng.integers(1, max_mode + 1)), 2)
        out.append(u / np.sqrt(np.sum(u**2, axis=0)).max())
    return out


# -- suites --------------------------------------------------------------------


def spectral_suite(n: int = 64, length: float = 2 * np.pi * 10, seed: int = 0, tol: float = 1e-12) -> SuiteReport:
    grid = Grid2D(n, length)
    rep = SuiteReport("spectral")
    rng = rng_for(seed)
    f = rng.standard_normal((n, n))
    v = rng.standard_normal((2, n, n))
    w = rng.standard_normal((2, n, n))
    area = grid.cell_area

    rt = np.abs(to_physical(to_spectral(grid, f)) - f).max() / np.abs(f).max()
    rep.add("transform round trip", rt, tol)
    direct = lp_norm(grid, f, 2) ** 2
    rep.add("Parseval", abs(parseval_norm_sq(to_spectral(grid, f)) - direct) / direct, tol)

    pv = leray_project(grid, v)
    norm_v = math.sqrt(area * np.sum(v**2))
    rep.add("Leray idempotence", math.sqrt(area * np.sum((leray_project(grid, pv) - pv) ** 2)) / norm_v, tol)
    lhs = area * np.sum(pv * w)
    rhs = area * np.sum(v * leray_project(grid, w))
    rep.add("Leray self-adjointness", abs(lhs - rhs) / (norm_v * math.sqrt(area * np.sum(w**2))), tol)

    worst = 0.0
    for beta in (2 * np.pi / length, 0.5, 1.0, 2.0, 4.0):
        worst = max(worst, np.abs(lp_low(grid, f, beta) + lp_high(grid, f, beta) - f).max())
    rep.add("LP partition low + high = identity", worst / np.abs(f).max(), tol)
    return rep


def identity_residual(d: DirectorField) -> tuple[float, float]:
    """``| ||tension||^2 - (||Delta d||^2 - ||grad d||_4^4) |`` and ``||Delta d||^2``."""
    geo = DirectorGeometry.of(d.grid, d.values)
    return abs(geo.tension_l2_sq - (geo.lap_l2_sq - geo.grad_l4_4)), geo.lap_l2_sq


def sphere_suite(count: int = 50, seed: int = 0, tol: float = 1e-6, gain: float = 4.0) -> SuiteReport:
    rep = SuiteReport("sphere")
    coarse, fine = Grid2D(64, 2 * np.pi), Grid2D(128, 2 * np.pi)
    rel_c, rel_f = [], []
    for i in range(count):
        r, b = identity_residual(smooth_director(coarse, seed + i))
        rel_c.append(r / b)
        r, b = identity_residual(smooth_director(fine, seed + i))
        rel_f.append(r / b)
    worst_c, worst_f = max(rel_c), max(rel_f)
    rep.add("identity residual / ||Delta d||^2 (n=64)", worst_c, tol)
    rep.add("identity residual / ||Delta d||^2 (n=128)", worst_f, tol)
    improvement = worst_c / max(worst_f, 1e-300)
    rep.add("refinement gain n=64 -> 128", improvement, gain, passed=improvement >= gain)
    return rep


def _refinement(rep: SuiteReport, label: str, coarse: np.ndarray, fine: np.ndarray, bound: float, tol: float):
    rep.add(f"{label}: max ratio bounded", coarse.max(), bound)
    rep.add(f"{label}: corpus max stable under n -> 2n", abs(fine.max() - coarse.max()) / coarse.max(), tol)
    rep.add(f"{label}: per-field change under n -> 2n", float(np.max(np.abs(fine - coarse) / coarse)), tol)


BERNSTEIN_CASES = ((1.0, 2.0), (2.0, 4.0), (2.0, math.inf), (1.0, math.inf))


def bernstein_suite(count: int = 100, seed: int = 0, N: float = 2.0, bound: float = 10.0, tol: float = 0.1) -> SuiteReport:
    rep = SuiteReport("bernstein")
    grids = Grid2D(64, 2 * np.pi), Grid2D(128, 2 * np.pi)
    for p, q in BERNSTEIN_CASES:
        ratios = []
        for grid in grids:
            ratios.append(np.array([bernstein_check(grid, f, N, p, q).rhs_ratio for f in scalar_corpus(grid, count, seed)]))
        _refinement(rep, f"Bernstein p={p:g} q={q:g}", ratios[0], ratios[1], bound, tol)
    return rep


def gn_suite(count: int = 100, seed: int = 0, bound: float = 10.0, tol: float = 0.1) -> SuiteReport:
    rep = SuiteReport("gn")
    grids = Grid2D(64, 2 * np.pi), Grid2D(128, 2 * np.pi)
    ratios = [np.array([gn_check(grid, u).ratio for u in vector_corpus(grid, count, seed)]) for grid in grids]
    _refinement(rep, "Gagliardo-Nirenberg", ratios[0], ratios[1], bound, tol)
    return rep


FREQUENCY_NS = (4.0, 8.0, 16.0, 32.0)


def frequency_corpus(grid: Grid2D, count: int = 8, seed: int = 0) -> list[DirectorField]:
    """Smooth hemisphere directors plus a truncated bubble."""
    fields_ = [smooth_director(grid, seed + i, max_mode=3 + i % 4, amplitude=0.5) for i in range(count)]
    fields_.append(stereographic_bubble(grid.length / 40, (grid.length / 2, grid.length / 2), grid))
    return fields_


def frequency_suite(n: int = 128, length: float = 2 * np.pi, count: int = 8, seed: int = 0) -> SuiteReport:
    """Low-band Bernstein bound, mid-band triangle bound and high-band decay of ``|grad d|^2``.

    Decay is checked between consecutive ``N``; once the high band has fallen
    to rounding level relative to ``||f||_2`` further decay is not required.
    """
    rep = SuiteReport("frequency")
    grid = Grid2D(n, length)
    low_ok = mid_ok = decay_ok = True
    worst_low = worst_decay = 0.0
    for d in frequency_corpus(grid, count, seed):
        splits = [band_split_bounds(d, N) for N in FREQUENCY_NS]
        for s in splits:
            low_ok &= s.low_holds
            mid_ok &= s.mid_holds
            worst_low = max(worst_low, s.low / s.low_bound if s.low_bound > 0 else 0.0)
        for a, b in zip(splits, splits[1:]):
            if a.high <= 1e-13 * a.total:
                continue
            ratio = b.high / a.high
            worst_decay = max(worst_decay, ratio)
            decay_ok &= ratio <= math.sqrt(a.N / b.N)
    rep.add("low band <= N^-1 C ||f||_1", worst_low, 1.0, passed=low_ok)
    rep.add("mid band >= ||f|| - high - low", 0.0, 0.0, passed=mid_ok)
    rep.add("high band ratio per doubling of N", worst_decay, math.sqrt(0.5), passed=decay_ok)
    return rep


SUITES = {
    "spectral": spectral_suite,
    "sphere": sphere_suite,
    "bernstein": bernstein_suite,
    "gn": gn_suite,
    "frequency": frequency_suite,
}


def run_suites(names=None) -> list[SuiteReport]:
    names = list(SUITES) if names is None else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; available: {sorted(SUITES)}")
    return [SUITES[n]() for n in names]
