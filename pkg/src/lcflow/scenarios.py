"""Initial-data generators: radial maps, hemisphere random data, velocities, bubbles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .fields import E3, DirectorField, Grid2D, normalize_array
from .spectral import gradient, irfft, rfft, smooth_step


def rng_for(seed: int) -> np.random.Generator:
    """Counter-based generator; independent of numpy's global state."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _displacement(grid: Grid2D, center) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-image displacement of every grid point from ``center``."""
    L = grid.length
    x1, x2 = grid.coords
    dx1 = (x1 - center[0] + L / 2) % L - L / 2
    dx2 = (x2 - center[1] + L / 2) % L - L / 2
    return dx1, dx2


def band_limited_noise(grid: Grid2D, rng: np.random.Generator, max_mode: int, components: int) -> np.ndarray:
    """Real random trigonometric polynomial with integer modes ``0 < |k| <= max_mode``.

    Coefficients are drawn in a canonical wavevector order, so the same
    generator state yields the same continuum field on every grid that
    resolves it.
    """
    if not 0 < max_mode < grid.n // 2:
        raise ValueError(f"max_mode must lie in (0, {grid.n // 2}), got {max_mode}")
    k = np.arange(-max_mode, max_mode + 1)
    k1, k2 = (a.ravel() for a in np.meshgrid(k, k, indexing="ij"))
    keep = (k1**2 + k2**2 <= max_mode**2) & ((k1 != 0) | (k2 != 0))
    k1, k2 = k1[keep], k2[keep]
    shape = (components, k1.size)
    coeffs = np.zeros((components, grid.n, grid.n), dtype=complex)
    coeffs[:, k1 % grid.n, k2 % grid.n] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.fft.ifft2(coeffs, axes=(-2, -1)).real * grid.n**2


# -- radial (equivariant) data -------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """Angle profile ``psi(r) = A (1 - exp(-(r/w)^2)) exp(-(r/R_cut)^4)``."""

    amplitude: float
    width: float
    r_cut: float

    def __post_init__(self):
        if self.width <= 0 or self.r_cut <= 0:
            raise ValueError("profile width and cutoff radius must be positive")

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.amplitude * self._shape(r)

    def _shape(self, r):
        return (1.0 - np.exp(-((r / self.width) ** 2))) * np.exp(-((r / self.r_cut) ** 4))

    def _argmax_shape(self) -> float:
        r = np.linspace(0.0, 3.0 * self.r_cut + 3.0 * self.width, 4001)
        i = int(np.argmax(self._shape(r)))
        lo, hi = r[max(i - 1, 0)], r[min(i + 1, r.size - 1)]
        res = minimize_scalar(lambda x: -self._shape(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        return float(res.x)

    def sup(self) -> float:
        return float(abs(self.amplitude) * self._shape(self._argmax_shape()))

    @classmethod
    def from_sup(cls, sup: float, width: float, r_cut: float) -> "RadialProfile":
        """Profile whose maximum angle equals ``sup``."""
        unit = cls(1.0, width, r_cut)
        return cls(sup / unit.sup(), width, r_cut)


def radial_data(profile: RadialProfile, center, grid: Grid2D) -> DirectorField:
    """Equivariant map ``(x1/r sin psi, x2/r sin psi, cos psi)`` about ``center``."""
    dx1, dx2 = _displacement(grid, center)
    r = np.hypot(dx1, dx2)
    psi = profile(r)
    safe = np.where(r > 0, r, 1.0)
    s = np.where(r > 0, np.sin(psi) / safe, 0.0)
    return DirectorField(grid, np.stack([dx1 * s, dx2 * s, np.cos(psi)]))


# -- hemisphere random data ----------------------------------------------------


@dataclass(frozen=True)
class HemisphereSample:
    director: DirectorField
    amplitude: float
    inf_d3: float
    grad_l2: float


def hemisphere_random_data(
    epsilon0: float, roughness: int, amplitude: float, seed: int, grid: Grid2D
) -> HemisphereSample:
    """``normalize(e3 + a*w)`` with the largest ``a <= amplitude`` keeping ``inf d3 >= epsilon0``.

    ``w`` is a band-limited random 3-vector field scaled to unit maximum
    magnitude; ``a`` is found by bisection, ``a = 0`` always being feasible.
    """
    if not 0 < epsilon0 < 1:
        raise ValueError(f"epsilon0 must lie in (0, 1), got {epsilon0}")
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    w = band_limited_noise(grid, rng_for(seed), roughness, 3)
    w /= np.sqrt(np.sum(w**2, axis=0)).max()
    e3 = E3[:, None, None]

    def build(a):
        return normalize_array(e3 + a * w)

    def ok(a):
        return build(a)[2].min() >= epsilon0

    a = float(amplitude)
    if not ok(a):
        lo, hi = 0.0, a
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        a = lo
    d = build(a)
    grad = gradient(grid, d)
    grad_l2 = float(np.sqrt(grid.cell_area * np.sum(grad**2)))
    return HemisphereSample(DirectorField(grid, d), a, float(d[2].min()), grad_l2)


# -- velocity ------------------------------------------------------------------


def divergence_free_velocity(seed: int, max_mode: int, energy: float, grid: Grid2D) -> np.ndarray:
    """Curl of a band-limited random stream function, scaled to ``0.5 ||u||^2 = energy``."""
    if energy < 0:
        raise ValueError("kinetic energy must be nonnegative")
    if energy == 0:
        return np.zeros((2, grid.n, grid.n))
    psi = band_limited_noise(grid, rng_for(seed), max_mode, 1)[0]
    ph = rfft(psi)
    u = np.stack([irfft(grid, -1j * grid.dk2 * ph), irfft(grid, 1j * grid.dk1 * ph)])
    current = 0.5 * grid.cell_area * np.sum(u**2)
    return u * np.sqrt(energy / current)


def taylor_green(grid: Grid2D, amplitude: float = 1.0, mode: int = 1) -> np.ndarray:
    """Taylor-Green vortex; decays as ``exp(-2 (2 pi mode / L)^2 t)`` under Navier-Stokes."""
    k = 2 * np.pi * mode / grid.length
    x1, x2 = grid.coords
    return amplitude * np.stack([np.sin(k * x1) * np.cos(k * x2), -np.cos(k * x1) * np.sin(k * x2)])


# -- exact harmonic maps -------------------------------------------------------


def equator_map(grid: Grid2D, mode: int = 1) -> DirectorField:
    """``(cos(k x1), sin(k x1), 0)`` with ``k = 2 pi mode / L``: a harmonic map with ratio 1."""
    k = 2 * np.pi * mode / grid.length
    x1, _ = grid.coords
    return DirectorField(grid, np.stack([np.cos(k * x1), np.sin(k * x1), np.zeros_like(x1)]))


def _cutoff(r, r_in, r_out):
    return smooth_step(np.clip((r_out - r) / (r_out - r_in), 0.0, 1.0))


def stereographic_bubble(scale: float, center, grid: Grid2D) -> DirectorField:
    """Degree-one harmonic map (inverse stereographic projection) of size ``scale``.

    With ``q = s`` the field is ``(2 q x, r^2 - q^2) / (r^2 + q^2)``. Away from
    the core ``q`` is replaced by ``s (1 - r^2/R^2) chi(r)`` with ``R = L/2``;
    ``1/r - r/R^2`` is the small-angle harmonic tail vanishing at ``R`` and
    ``chi`` flattens it smoothly over ``[0.4 L, 0.5 L]``. The energy tends to
    ``8 pi`` as ``L / scale`` grows.
    """
    if scale <= 0:
        raise ValueError("bubble scale must be positive")
    dx1, dx2 = _displacement(grid, center)
    rsq = dx1**2 + dx2**2
    L = grid.length
    R = 0.5 * L
    q = scale * np.clip(1.0 - rsq / R**2, 0.0, None) * _cutoff(np.sqrt(rsq), 0.4 * L, R)
    den = rsq + q**2
    if den.min() <= 0:
        den = np.where(den > 0, den, 1.0)
    horiz = 2.0 * q / den
    d3 = (rsq - q**2) / den
    return DirectorField(grid, np.stack([dx1 * horiz, dx2 * horiz, d3]))
