"""Coercivity-gap estimation and frequency-localization devices.

:func:`estimate_delta0` maximizes the coercivity ratio
``R(d) = ||grad d||_4^4 / ||Delta d||_2^2`` over directors with
``d3 >= epsilon0`` and ``||grad d||_2 <= C0``; the gap estimate is
``1 - max R``. The search runs in a smooth chart of the open cap, so every
iterate satisfies the pointwise constraint, using the exact gradient of the
discrete ratio restricted to low wavenumbers so iterates stay resolved. The
energy bound is a quadratic penalty; every iterate is also repaired into the
feasible set by geodesic contraction toward ``e3`` and the repaired copy is
scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .director import DirectorGeometry
from .errors import Infeasible
from .fields import DirectorField, Grid2D, normalize_array
from .norms import lp_norm
from .scenarios import band_limited_noise, rng_for
from .spectral import irfft, lp_band, lp_high, lp_low, rfft

DEGENERATE_LAP_SQ = 1e-20
FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerSettings:
    """Search settings.

    ``band`` is the largest integer wavenumber of ascent directions (default
    ``n // 16``); ``max_mode`` is the roughness of random starts.
    """

    max_iter: int = 150
    starts: int = 3
    seed: int = 0
    penalty: float = 10.0
    max_mode: int = 4
    band: int | None = None
    ftol: float = 1e-13

    def __post_init__(self):
        if self.max_iter < 0 or self.starts < 0:
            raise ValueError("max_iter and starts must be nonnegative")
        if self.penalty < 0:
            raise ValueError("penalty weight must be nonnegative")
        if self.max_mode < 1:
            raise ValueError("max_mode must be at least 1")
        if self.band is not None and self.band < 1:
            raise ValueError("band must be at least 1")


@dataclass(frozen=True)
class RigidityProblem:
    epsilon0: float
    C0: float
    grid: Grid2D
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    initial_fields: tuple = ()

    def __post_init__(self):
        if not 0 < self.epsilon0 < 1:
            raise ValueError(f"epsilon0 must lie in (0, 1), got {self.epsilon0}")
        if not self.C0 > 0:
            raise ValueError(f"C0 must be positive, got {self.C0}")


@dataclass
class StartHistory:
    index: int
    ratios: list = field(default_factory=list)
    best_ratio: float = -math.inf
    iterations: int = 0


@dataclass
class RigidityResult:
    best_ratio: float
    best_field: DirectorField
    history: list
    iterations: int
    valid: bool = True
    audit: str = ""

    @property
    def delta0_estimate(self) -> float:
        return 1.0 - self.best_ratio

    @property
    def feasible_ratios(self) -> np.ndarray:
        return np.concatenate([np.asarray(h.ratios, dtype=float) for h in self.history] or [np.empty(0)])


# -- discrete functionals and their gradients ----------------------------------


@dataclass(frozen=True, eq=False)
class _Eval:
    ratio: float
    objective: float
    energy: float  # ||grad d||_2^2
    lap_sq: float
    geo: DirectorGeometry


def _evaluate(grid: Grid2D, d: np.ndarray, C0: float, penalty: float) -> _Eval:
    geo = DirectorGeometry.of(grid, d)
    lap_sq = geo.lap_l2_sq
    energy = geo.grad_l2_sq
    ratio = geo.grad_l4_4 / lap_sq if lap_sq > DEGENERATE_LAP_SQ else 0.0
    excess = max(0.0, energy / C0**2 - 1.0)
    return _Eval(ratio, ratio - penalty * excess**2, energy, lap_sq, geo)


def ratio_gradient(grid: Grid2D, d: np.ndarray, geo: DirectorGeometry | None = None) -> np.ndarray:
    """Exact gradient of the discrete ratio with respect to the samples of ``d``.

    With ``A = h^2 sum |grad d|^4`` and ``B = h^2 sum |Delta d|^2``:
    ``dA/dd_c = -4 h^2 sum_i D_i(|grad d|^2 D_i d_c)`` (spectral ``D_i`` are
    skew-adjoint) and ``dB/dd_c = 2 h^2 Delta^2 d_c``.
    """
    geo = geo or DirectorGeometry.of(grid, d)
    a, b = geo.grad_l4_4, geo.lap_l2_sq
    area = grid.cell_area
    w = geo.grad_sq * geo.grad  # (2, 3, n, n)
    wh = rfft(w)
    grad_a = -4.0 * area * irfft(grid, 1j * grid.dk1 * wh[0] + 1j * grid.dk2 * wh[1])
    grad_b = 2.0 * area * irfft(grid, grid.ksq**2 * rfft(d))
    return (grad_a - (a / b) * grad_b) / b


def energy_gradient(grid: Grid2D, d: np.ndarray) -> np.ndarray:
    """Gradient of ``h^2 sum |grad d|^2``: ``-2 h^2 (D_1^2 + D_2^2) d``."""
    return 2.0 * grid.cell_area * irfft(grid, (grid.dk1**2 + grid.dk2**2) * rfft(d))


def _objective_gradient(grid: Grid2D, d: np.ndarray, ev: _Eval, C0: float, penalty: float) -> np.ndarray:
    g = ratio_gradient(grid, d, ev.geo)
    excess = max(0.0, ev.energy / C0**2 - 1.0)
    if excess > 0 and penalty > 0:
        g = g - penalty * 2.0 * excess / C0**2 * energy_gradient(grid, d)
    return g


# -- constraint handling -------------------------------------------------------


def cap_project(d: np.ndarray, epsilon0: float) -> np.ndarray:
    """Nearest point with ``d3 >= epsilon0``: clamp ``d3`` and rescale the horizontal part."""
    low = d[2] < epsilon0
    if not np.any(low):
        return d
    out = d.copy()
    horiz = np.sqrt(d[0] ** 2 + d[1] ** 2)
    scale = np.sqrt(1.0 - epsilon0**2) / np.where(horiz > 0, horiz, 1.0)
    out[0] = np.where(low, d[0] * scale, d[0])
    out[1] = np.where(low, d[1] * scale, d[1])
    out[2] = np.where(low, epsilon0, d[2])
    return out


def contract(d: np.ndarray, s) -> np.ndarray:
    """Scale the polar angle from ``e3`` by ``s`` (scalar or per-sample batch)."""
    horiz = np.sqrt(d[..., 0, :, :] ** 2 + d[..., 1, :, :] ** 2)
    theta = np.arctan2(horiz, d[..., 2, :, :])
    s = np.asarray(s, dtype=float).reshape(np.shape(s) + (1, 1))
    new = s * theta
    factor = np.where(horiz > 0, np.sin(new) / np.where(horiz > 0, horiz, 1.0), 0.0)
    return np.stack([d[..., 0, :, :] * factor, d[..., 1, :, :] * factor, np.cos(new)], axis=-3)


def _energies(grid: Grid2D, d: np.ndarray) -> np.ndarray:
    """``||grad d||_2^2`` for a single director or a batch of shape (..., 3, n, n)."""
    dh = rfft(d)
    mult = grid.dk1**2 + grid.dk2**2
    return grid.cell_area / grid.n**2 * np.sum(grid.rfft_weights * mult * np.abs(dh) ** 2, axis=(-3, -2, -1))


def repair_energy(grid: Grid2D, d: np.ndarray, C0: float, iterations: int = 50) -> np.ndarray:
    """Largest geodesic contraction ``s in [0, 1]`` with ``||grad d_s||_2 <= C0``, by bisection."""
    target = C0**2 * (1.0 - FEASIBILITY_TOL)
    if _energies(grid, d) <= target:
        return d
    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if _energies(grid, contract(d, mid)) <= target:
            lo = mid
        else:
            hi = mid
    return contract(d, lo)


def is_feasible(grid: Grid2D, d: np.ndarray, epsilon0: float, C0: float) -> bool:
    return bool(d[2].min() >= epsilon0 - FEASIBILITY_TOL and _energies(grid, d) <= C0**2)


def _vmax(epsilon0: float) -> float:
    return math.sqrt(1.0 / epsilon0**2 - 1.0)


def cap_chart(z: np.ndarray, epsilon0: float) -> np.ndarray:
    """Director in the open cap ``d3 > epsilon0`` from an unconstrained 2-field ``z``.

    ``v = v_max z / sqrt(1 + |z|^2)`` has ``|v| < v_max = sqrt(1/epsilon0^2 - 1)``
    and ``d = (v, 1) / sqrt(1 + |v|^2)``.
    """
    v = _vmax(epsilon0) * z / np.sqrt(1.0 + np.sum(z**2, axis=0))
    s = np.sqrt(1.0 + np.sum(v**2, axis=0))
    return np.stack([v[0] / s, v[1] / s, 1.0 / s])


def cap_chart_inverse(d: np.ndarray, epsilon0: float) -> np.ndarray:
    """Inverse of :func:`cap_chart`; requires ``d3 > epsilon0`` everywhere."""
    if not d[2].min() > epsilon0:
        raise ValueError("director must lie strictly inside the cap")
    v = d[:2] / d[2]
    return v / np.sqrt(_vmax(epsilon0) ** 2 - np.sum(v**2, axis=0))


def chart_gradient(z: np.ndarray, d: np.ndarray, grad_d: np.ndarray, epsilon0: float) -> np.ndarray:
    """Pull a gradient with respect to ``d`` back to ``z`` through :func:`cap_chart`."""
    s = 1.0 / d[2]
    grad_v = (grad_d[:2] - np.einsum("cxy,cxy->xy", grad_d, d) * d[:2]) / s
    q = np.sqrt(1.0 + np.sum(z**2, axis=0))
    zv = np.einsum("cxy,cxy->xy", grad_v, z)
    return _vmax(epsilon0) * (grad_v / q - zv * z / q**3)


def _band_mask(grid: Grid2D, band: int | None) -> np.ndarray:
    band = max(grid.n // 16, 1) if band is None else band
    k1, k2 = grid.k1 * grid.length / (2 * np.pi), grid.k2 * grid.length / (2 * np.pi)
    return (k1**2 + k2**2 <= band**2).astype(float)


# -- starts --------------------------------------------------------------------


def random_feasible_batch(
    grid: Grid2D, epsilon0: float, C0: float, count: int, rng: np.random.Generator, max_mode: int = 4
) -> np.ndarray:
    """``count`` random directors satisfying both constraints, shape (count, 3, n, n).

    Each sample is ``normalize(e3 + w)`` for band-limited noise ``w`` of random
    roughness and size, contracted toward ``e3`` just enough to satisfy the cap
    and the energy bound, then scaled back by a random factor in ``(0, 1]``.
    """
    out = np.empty((count, 3, grid.n, grid.n))
    theta_cap = math.acos(epsilon0)
    for i in range(count):
        mode = int(rng.integers(1, max_mode + 1))
        w = band_limited_noise(grid, rng, mode, 3)
        w *= float(rng.uniform(0.1, 0.9)) / np.sqrt(np.sum(w**2, axis=0)).max()
        w[2] += 1.0
        d = normalize_array(w)
        theta = np.arctan2(np.sqrt(d[0] ** 2 + d[1] ** 2), d[2]).max()
        s = min(1.0, theta_cap / theta) if theta > 0 else 1.0
        d = repair_energy(grid, contract(d, s), C0)
        out[i] = contract(d, float(rng.uniform(0.05, 1.0)) ** 0.5)
    return out


def ratios_of(grid: Grid2D, batch: np.ndarray) -> np.ndarray:
    """Coercivity ratio of every director in a batch (degenerate ones give NaN)."""
    dh = rfft(batch)
    g1 = irfft(grid, 1j * grid.dk1 * dh)
    g2 = irfft(grid, 1j * grid.dk2 * dh)
    gsq = np.sum(g1**2 + g2**2, axis=-3)
    lap = irfft(grid, -grid.ksq * dh)
    a = np.sum(gsq**2, axis=(-2, -1))
    b = np.sum(lap**2, axis=(-3, -2, -1))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(b * grid.cell_area > DEGENERATE_LAP_SQ, a / b, np.nan)


# -- optimizer -----------------------------------------------------------------


def _ascend(problem: RigidityProblem, d0: np.ndarray, hist: StartHistory, mask: np.ndarray):
    """Quasi-Newton ascent in the cap chart from ``d0``; returns the best feasible (ratio, field).

    The start itself is scored unmodified, so a feasible start is never lost.
    """
    grid, eps0, C0 = problem.grid, problem.epsilon0, problem.C0
    opt = problem.optimizer
    n = grid.n
    best = (-math.inf, None)

    def score(d):
        nonlocal best
        if not is_feasible(grid, d, eps0, C0):
            return
        ev = _evaluate(grid, d, C0, 0.0)
        if ev.lap_sq <= DEGENERATE_LAP_SQ:
            return
        hist.ratios.append(ev.ratio)
        if ev.ratio > best[0]:
            best = (ev.ratio, d)

    score(d0)
    if opt.max_iter == 0:
        return best
    d = cap_project(normalize_array(d0), eps0)
    if not d[2].min() > eps0:
        d = contract(d, 1.0 - 1e-9)
    z0 = cap_chart_inverse(d, eps0)

    def negative_objective(x):
        z = x.reshape(2, n, n)
        d = cap_chart(z, eps0)
        ev = _evaluate(grid, d, C0, opt.penalty)
        gz = chart_gradient(z, d, _objective_gradient(grid, d, ev, C0, opt.penalty), eps0)
        return -ev.objective, -irfft(grid, mask * rfft(gz)).ravel()

    def on_iterate(x):
        hist.iterations += 1
        score(repair_energy(grid, cap_chart(x.reshape(2, n, n), eps0), C0))

    minimize(
        negative_objective,
        z0.ravel(),
        jac=True,
        method="L-BFGS-B",
        callback=on_iterate,
        options={"maxiter": opt.max_iter, "ftol": opt.ftol, "gtol": 0.0},
    )
    return best


def _starts(problem: RigidityProblem) -> list:
    grid, opt = problem.grid, problem.optimizer
    fields_ = [np.asarray(f.values if isinstance(f, DirectorField) else f, dtype=float) for f in problem.initial_fields]
    if opt.starts:
        rng = rng_for(opt.seed)
        fields_.extend(random_feasible_batch(grid, problem.epsilon0, problem.C0, opt.starts, rng, opt.max_mode))
    return fields_


def estimate_delta0(problem: RigidityProblem) -> RigidityResult:
    """Multistart constrained maximization of the coercivity ratio.

    Starts are ``problem.initial_fields`` (e.g. optima of more constrained
    problems) followed by ``optimizer.starts`` seeded random feasible fields.
    A feasible iterate with ratio ``>= 1`` marks the result invalid: on
    resolved fields the ratio is strictly below 1, so such a value signals
    aliasing rather than a genuine maximizer.

    Raises:
        Infeasible: if no start yields a feasible, nondegenerate director.
    """
    grid = problem.grid
    mask = _band_mask(grid, problem.optimizer.band)
    history, best = [], (-math.inf, None, -1)
    for idx, d0 in enumerate(_starts(problem)):
        hist = StartHistory(idx)
        ratio, d = _ascend(problem, d0, hist, mask)
        hist.best_ratio = ratio
        history.append(hist)
        if d is not None and ratio > best[0]:
            best = (ratio, d, idx)
    if best[1] is None:
        raise Infeasible(
            f"no feasible nondegenerate director for epsilon0={problem.epsilon0}, C0={problem.C0}"
        )
    result = RigidityResult(
        best[0], DirectorField(grid, best[1], tol=1e-9), history, sum(h.iterations for h in history)
    )
    top = max((max(h.ratios) for h in history if h.ratios), default=-math.inf)
    if top >= 1.0:
        result.valid = False
        result.audit = f"feasible iterate with ratio {top:.6f} >= 1: aliasing suspected"
    return result


# -- sweep ---------------------------------------------------------------------

SWEEP_COLUMNS = ("epsilon0", "C0", "n", "L", "best_ratio", "delta0_estimate", "starts", "iterations")


@dataclass
class SweepCell:
    epsilon0: float
    C0: float
    result: RigidityResult

    def row(self, grid: Grid2D) -> tuple:
        return (
            self.epsilon0,
            self.C0,
            grid.n,
            grid.length,
            self.result.best_ratio,
            self.result.delta0_estimate,
            len(self.result.history),
            self.result.iterations,
        )


def sweep(grid: Grid2D, epsilons, C0s, optimizer: OptimizerSettings = OptimizerSettings()) -> list[SweepCell]:
    """Run every ``(epsilon0, C0)`` pair with nested warm starts.

    Cells are visited from the most to the least constrained; each cell also
    starts from the optima of all cells whose feasible set it contains
    (larger ``epsilon0``, smaller ``C0``). Since the best ratio is a maximum
    over iterates that include those starts, the estimates are monotone in
    both parameters by construction of the search, not by post-processing.
    """
    done: list[SweepCell] = []
    for eps in sorted(epsilons, reverse=True):
        for c0 in sorted(C0s):
            warm = tuple(c.result.best_field for c in done if c.epsilon0 >= eps and c.C0 <= c0)
            prob = RigidityProblem(eps, c0, grid, optimizer, warm)
            done.append(SweepCell(eps, c0, estimate_delta0(prob)))
    return done


# -- frequency localization ----------------------------------------------------


def concentration_center(grid: Grid2D, f: np.ndarray, N: float) -> tuple[tuple[float, float], float]:
    """Grid point maximizing ``|P_{1/N < . < N} f|`` and that maximum.

    Ties go to the smallest row-major index.
    """
    if not N >= 2:
        raise ValueError(f"N must be at least 2, got {N}")
    band = np.abs(lp_band(grid, f, 1.0 / N, N))
    idx = int(np.argmax(band))
    i, j = divmod(idx, grid.n)
    return (i * grid.h, j * grid.h), float(band.flat[idx])


def bernstein_constant(grid: Grid2D, beta: float) -> float:
    """Exact grid constant ``C`` in ``||P_{<beta} f||_2 <= C beta ||f||_1``.

    ``P_{<beta}`` is convolution with a kernel whose grid ``L2`` norm is
    ``(sum_k phi(xi_k / beta)^2)^(1/2) / L``; Young's inequality on the grid
    then gives the bound with ``C = ||kernel||_2 / beta``.
    """
    from .spectral import bump

    k1, k2 = grid.integer_wavevectors
    xi = 2 * np.pi / grid.length * np.sqrt(k1**2 + k2**2)
    kernel_l2 = np.sqrt(np.sum(bump(xi / beta) ** 2)) / grid.length
    return float(kernel_l2 / beta)


@dataclass(frozen=True)
class BandSplit:
    N: float
    high: float
    low: float
    mid: float
    total: float
    l1: float
    low_bound: float
    low_holds: bool
    mid_holds: bool
    high_ratio: float


def band_split_bounds(d: DirectorField, N: float) -> BandSplit:
    """Norms of ``|grad d|^2`` above ``N``, below ``1/N`` and in between.

    The low band is checked against ``N^-1 ||f||_1`` times the exact grid
    Bernstein constant; the middle band against the triangle inequality.
    ``high_ratio`` is ``high / (N^-1/2 ||Delta d||_2 ||grad d||_2)``.
    """
    if not N >= 2:
        raise ValueError(f"N must be at least 2, got {N}")
    grid = d.grid
    geo = DirectorGeometry.of(grid, d.values)
    f = geo.grad_sq
    high = lp_norm(grid, lp_high(grid, f, N), 2)
    low = lp_norm(grid, lp_low(grid, f, 1.0 / N), 2)
    mid = lp_norm(grid, lp_band(grid, f, 1.0 / N, N), 2)
    total = lp_norm(grid, f, 2)
    l1 = lp_norm(grid, f, 1)
    low_bound = bernstein_constant(grid, 1.0 / N) * l1 / N * (1 + 1e-6)
    scale = math.sqrt(geo.lap_l2_sq * geo.grad_l2_sq) / math.sqrt(N)
    high_ratio = high / scale if scale > 0 else 0.0
    slack = 1e-12 * max(total, 1e-300)
    return BandSplit(
        N, high, low, mid, total, l1, low_bound, bool(low <= low_bound), bool(mid >= total - high - low - slack), high_ratio
    )

