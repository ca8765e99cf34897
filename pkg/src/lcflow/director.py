"""Static geometry of sphere-valued fields: tension, coercivity ratio, angle condition.

Products such as ``|grad d|^2 d`` are formed pointwise on the collocation
grid here; they are outputs, not inputs to further spectral operators, so
no dealiasing is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput
from .fields import DirectorField, Grid2D
from .spectral import irfft, rfft


@dataclass(frozen=True, eq=False)
class DirectorGeometry:
    """Derivatives of a director sampled once and shared by the diagnostics."""

    grid: Grid2D
    d: np.ndarray  # (3, n, n)
    grad: np.ndarray  # (2, 3, n, n): grad[i, c] = d_i d_c
    lap: np.ndarray  # (3, n, n)
    grad_sq: np.ndarray  # (n, n): sum over i, c of (d_i d_c)^2

    @classmethod
    def of(cls, grid: Grid2D, d: np.ndarray) -> "DirectorGeometry":
        dh = rfft(d)
        grad = np.stack([irfft(grid, 1j * grid.dk1 * dh), irfft(grid, 1j * grid.dk2 * dh)])
        lap = irfft(grid, -grid.ksq * dh)
        grad_sq = np.einsum("icxy,icxy->xy", grad, grad)
        return cls(grid, d, grad, lap, grad_sq)

    def integral(self, f: np.ndarray) -> float:
        return float(self.grid.cell_area * np.sum(f))

    @property
    def tension(self) -> np.ndarray:
        return self.lap + self.grad_sq * self.d

    @property
    def grad_l2_sq(self) -> float:
        return self.integral(self.grad_sq)

    @property
    def grad_l4_4(self) -> float:
        return self.integral(self.grad_sq**2)

    @property
    def lap_l2_sq(self) -> float:
        return self.integral(self.lap**2)

    @property
    def tension_l2_sq(self) -> float:
        return self.integral(self.tension**2)

    @property
    def identity_defect(self) -> np.ndarray:
        """Pointwise ``Delta d . d + |grad d|^2``, zero for exactly unit fields."""
        return np.einsum("cxy,cxy->xy", self.lap, self.d) + self.grad_sq


def geometry(d: DirectorField) -> DirectorGeometry:
    return DirectorGeometry.of(d.grid, d.values)


def tension(d: DirectorField) -> np.ndarray:
    """Tension field ``Delta d + |grad d|^2 d``, shape (3, n, n)."""
    return geometry(d).tension


def sphere_identity_residual(d: DirectorField) -> float:
    """L2 norm of ``Delta d . d + |grad d|^2``."""
    geo = geometry(d)
    return float(np.sqrt(geo.integral(geo.identity_defect**2)))


def harmonic_energy(d: DirectorField) -> float:
    """``||Delta d + |grad d|^2 d||_2^2``."""
    return geometry(d).tension_l2_sq


def coercivity_ratio(d: DirectorField) -> float:
    """``||grad d||_4^4 / ||Delta d||_2^2``.

    Raises:
        DegenerateInput: if ``||Delta d||_2 <= 1e-12`` (e.g. constant maps).
    """
    return ratio_of(geometry(d))


def ratio_of(geo: DirectorGeometry) -> float:
    lap_sq = geo.lap_l2_sq
    if lap_sq <= 1e-24:
        raise DegenerateInput(f"||Delta d||_2 = {np.sqrt(lap_sq):.3e} is degenerate")
    return geo.grad_l4_4 / lap_sq


def angle_infimum(d: DirectorField) -> float:
    """Minimum of the third component over the grid samples."""
    return float(d.d3.min())


@dataclass(frozen=True)
class CoercivityReport:
    lhs: float
    rhs: float
    holds: bool


def coercivity_check(d: DirectorField, delta0: float) -> CoercivityReport:
    """Compare ``||tension||^2`` against ``(delta0/2)(||Delta d||^2 + ||grad d||_4^4)``."""
    if not 0 < delta0 < 1:
        raise ValueError(f"delta0 must lie in (0, 1), got {delta0}")
    geo = geometry(d)
    lhs = geo.tension_l2_sq
    rhs = 0.5 * delta0 * (geo.lap_l2_sq + geo.grad_l4_4)
    return CoercivityReport(lhs, rhs, bool(lhs >= rhs))
