"""Periodic grid geometry and field containers.

Fields are plain numpy arrays sampled at cell corners ``(i*h, j*h)`` with
axis 0 running along x1 and axis 1 along x2:

* scalar field: shape ``(n, n)``
* 2-vector field: shape ``(2, n, n)``
* director field: shape ``(3, n, n)``, wrapped in :class:`DirectorField`
  because it carries the pointwise unit-norm invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateDirector, InvariantViolation

TOL_UNIT = 1e-9
TOL_EVOLVE = 1e-6
NORM_FLOOR = 1e-8

E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on the square torus ``[0, length)^2``."""

    n: int
    length: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ValueError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"grid length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.n) * self.h
        return tuple(np.meshgrid(x, x, indexing="ij"))

    # -- wavenumbers, real-FFT layout (n, n//2 + 1) ---------------------------

    @cached_property
    def k1(self) -> np.ndarray:
        """Physical wavenumber along x1, shape (n, 1)."""
        k = 2 * np.pi / self.length * np.fft.fftfreq(self.n, 1.0 / self.n)
        return k[:, None]

    @cached_property
    def k2(self) -> np.ndarray:
        """Physical wavenumber along x2, shape (1, n//2 + 1)."""
        k = 2 * np.pi / self.length * np.fft.rfftfreq(self.n, 1.0 / self.n)
        return k[None, :]

    @cached_property
    def ksq(self) -> np.ndarray:
        return self.k1**2 + self.k2**2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def dk1(self) -> np.ndarray:
        """x1 derivative wavenumber with the Nyquist row zeroed."""
        k = self.k1.copy()
        k[self.n // 2, 0] = 0.0
        return k

    @cached_property
    def dk2(self) -> np.ndarray:
        """x2 derivative wavenumber with the Nyquist column zeroed."""
        k = self.k2.copy()
        k[0, -1] = 0.0
        return k

    @cached_property
    def rfft_weights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum column in the full spectrum."""
        w = np.full(self.n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w[None, :], (self.n, self.n // 2 + 1))

    @cached_property
    def integer_wavevectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer wavevector (k1, k2) of each entry in the full FFT layout."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        return tuple(np.meshgrid(k, k, indexing="ij"))


def new_grid(n: int, length: float) -> Grid2D:
    return Grid2D(n, length)


@dataclass(frozen=True)
class SpectralCoeffs:
    """Fourier series coefficients in numpy's full FFT ordering.

    ``coeffs[a, b]`` multiplies ``exp(i(xi1*x1 + xi2*x2))`` where the integer
    wavevector is ``grid.integer_wavevectors[.][a, b]`` and ``xi = 2*pi*k/L``.
    The normalization is such that the constant field 1 has ``coeffs[0, 0] == 1``.
    """

    grid: Grid2D
    coeffs: np.ndarray


def check_finite(values: np.ndarray, what: str = "field") -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise InvariantViolation(f"{what} contains non-finite samples")
    return values


@dataclass(frozen=True, eq=False)
class DirectorField:
    """S^2-valued field: ``values`` has shape (3, n, n) with unit length pointwise."""

    grid: Grid2D
    values: np.ndarray
    tol: float = TOL_UNIT

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = self.grid.n
        if v.shape != (3, n, n):
            raise ValueError(f"director values must have shape (3, {n}, {n}), got {v.shape}")
        check_finite(v, "director")
        dev = np.max(np.abs(np.sqrt(np.einsum("cij,cij->ij", v, v)) - 1.0))
        if dev > self.tol:
            raise InvariantViolation(f"director deviates from unit length by {dev:.3e} > {self.tol:.1e}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def d1(self) -> np.ndarray:
        return self.values[0]

    @property
    def d2(self) -> np.ndarray:
        return self.values[1]

    @property
    def d3(self) -> np.ndarray:
        return self.values[2]

    @classmethod
    def constant(cls, grid: Grid2D, direction=E3) -> "DirectorField":
        v = np.asarray(direction, dtype=float)
        v = v / np.linalg.norm(v)
        return cls(grid, np.broadcast_to(v[:, None, None], (3, grid.n, grid.n)).copy())


def normalize_array(raw: np.ndarray) -> np.ndarray:
    """Divide each 3-vector sample by its Euclidean norm."""
    norm = np.sqrt(np.einsum("cij,cij->ij", raw, raw))
    low = norm.min()
    if not np.isfinite(low) or low < NORM_FLOOR:
        raise DegenerateDirector(f"director norm {low:.3e} below floor {NORM_FLOOR:.0e}")
    return raw / norm


def normalize(d_raw, grid: Grid2D | None = None) -> DirectorField:
    """Project a 3-component field pointwise onto the unit sphere.

    Raises:
        DegenerateDirector: if any sample has norm below ``NORM_FLOOR``.
    """
    if isinstance(d_raw, DirectorField):
        grid, d_raw = d_raw.grid, d_raw.values
    if grid is None:
        raise ValueError("a grid is required when normalizing a raw array")
    return DirectorField(grid, normalize_array(np.asarray(d_raw, dtype=float)))
