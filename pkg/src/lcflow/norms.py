"""Lebesgue, homogeneous Sobolev and space-time norms on the periodic grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput
from .fields import Grid2D
from .spectral import gradient, rfft


def magnitude(f: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Pointwise Euclidean magnitude over any leading component axes."""
    f = np.asarray(f, dtype=float)
    if f.shape == (grid.n, grid.n):
        return np.abs(f)
    return np.sqrt(np.sum(f.reshape(-1, grid.n, grid.n) ** 2, axis=0))


def lp_norm(grid: Grid2D, f: np.ndarray, p: float) -> float:
    """``(h^2 * sum |f|^p)^(1/p)``, or the grid maximum for ``p = inf``.

    Multi-component fields use the pointwise Euclidean magnitude.
    """
    if not p >= 1:
        raise ValueError(f"Lebesgue exponent must be >= 1, got {p}")
    mag = magnitude(f, grid)
    if np.isinf(p):
        return float(mag.max())
    return float((grid.cell_area * np.sum(mag**p)) ** (1.0 / p))


def sobolev_norm(grid: Grid2D, f: np.ndarray, s: float) -> float:
    """Homogeneous ``H^s`` norm through Parseval: ``|| |xi|^s F(f) ||``."""
    if not s > 0:
        raise ValueError(f"Sobolev order must be positive, got {s}")
    fh = rfft(f)
    weight = grid.rfft_weights * grid.kabs ** (2 * s)
    total = np.sum(weight * np.abs(fh) ** 2)
    return float(np.sqrt(grid.cell_area / grid.n**2 * total))


@dataclass(frozen=True)
class GNReport:
    ratio: float
    l4: float
    l2: float
    grad_l2: float


def gn_check(grid: Grid2D, u: np.ndarray) -> GNReport:
    """Ratio ``||u||_4 / (||u||_2^(1/2) ||grad u||_2^(1/2))`` for a scalar or vector field."""
    l2 = lp_norm(grid, u, 2)
    grad_l2 = lp_norm(grid, gradient(grid, u), 2)
    if l2 < 1e-14 or grad_l2 < 1e-14:
        raise DegenerateInput(f"degenerate Gagliardo-Nirenberg denominator (||u||={l2:.2e}, ||grad u||={grad_l2:.2e})")
    l4 = lp_norm(grid, u, 4)
    return GNReport(l4 / np.sqrt(l2 * grad_l2), l4, l2, grad_l2)


@dataclass
class SpaceTimeAccumulator:
    """Running left-endpoint quadrature of a time integral ``int value dt``."""

    exponent: float = 1.0
    total: float = 0.0
    steps: int = 0
    contributions: list = field(default_factory=list, repr=False)

    def add(self, dt: float, value: float) -> "SpaceTimeAccumulator":
        if not dt > 0:
            raise ValueError(f"time step must be positive, got {dt}")
        if not value >= 0:
            raise ValueError(f"integrand must be nonnegative, got {value}")
        self.total += dt * value
        self.steps += 1
        self.contributions.append(dt * value)
        return self

    def norm(self) -> float:
        """``(total)^(1/exponent)``, the space-time norm when value = ||f(t)||^exponent."""
        return self.total ** (1.0 / self.exponent)


def accumulate(acc: SpaceTimeAccumulator, dt: float, value: float) -> SpaceTimeAccumulator:
    return acc.add(dt, value)
