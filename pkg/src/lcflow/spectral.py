"""Fourier-side operators on the periodic grid.

Every operator here is a diagonal Fourier multiplier, evaluated with real
FFTs over the last two axes, so inputs may carry leading component axes
(e.g. a director of shape ``(3, n, n)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .fields import Grid2D, SpectralCoeffs

AXES = (-2, -1)


def rfft(f: np.ndarray) -> np.ndarray:
    return sfft.rfft2(f, axes=AXES)


def irfft(grid: Grid2D, c: np.ndarray) -> np.ndarray:
    return sfft.irfft2(c, s=(grid.n, grid.n), axes=AXES)


def apply_multiplier(grid: Grid2D, f: np.ndarray, mult: np.ndarray) -> np.ndarray:
    """Inverse transform of ``mult * F(f)``; ``mult`` is in real-FFT layout."""
    return irfft(grid, mult * rfft(f))


# -- transform pair ------------------------------------------------------------


def to_spectral(grid: Grid2D, f: np.ndarray) -> SpectralCoeffs:
    """Fourier series coefficients of a real scalar field (full layout)."""
    f = np.asarray(f, dtype=float)
    return SpectralCoeffs(grid, sfft.fft2(f, axes=AXES) / grid.n**2)


def to_physical(c: SpectralCoeffs) -> np.ndarray:
    """Real samples of the trigonometric polynomial with coefficients ``c``."""
    n = c.grid.n
    return sfft.ifft2(c.coeffs * n**2, axes=AXES).real


def parseval_norm_sq(c: SpectralCoeffs) -> float:
    """Grid L2 norm squared computed from the coefficients: L^2 * sum |c_k|^2."""
    return float(c.grid.length**2 * np.sum(np.abs(c.coeffs) ** 2))


# -- differential operators ----------------------------------------------------


def gradient(grid: Grid2D, f: np.ndarray) -> np.ndarray:
    """Spectral gradient; output gains a leading axis of length 2."""
    fh = rfft(f)
    return np.stack([irfft(grid, 1j * grid.dk1 * fh), irfft(grid, 1j * grid.dk2 * fh)])


def divergence(grid: Grid2D, v: np.ndarray) -> np.ndarray:
    vh = rfft(v)
    return irfft(grid, 1j * grid.dk1 * vh[0] + 1j * grid.dk2 * vh[1])


def laplacian(grid: Grid2D, f: np.ndarray) -> np.ndarray:
    return apply_multiplier(grid, f, -grid.ksq)


def fractional_laplacian(grid: Grid2D, f: np.ndarray, s: float) -> np.ndarray:
    """``|nabla|^s f`` via the multiplier ``|xi|^s``."""
    if not s > 0:
        raise ValueError(f"fractional order must be positive, got {s}")
    return apply_multiplier(grid, f, grid.kabs**s)


def leray_hat(grid: Grid2D, vh: np.ndarray) -> np.ndarray:
    # Nyquist-zeroed wavevector keeps the projection consistent with `divergence`.
    k1, k2 = grid.dk1, grid.dk2
    ksq = k1**2 + k2**2
    safe = np.where(ksq == 0.0, 1.0, ksq)
    dot = (k1 * vh[0] + k2 * vh[1]) / safe
    return np.stack([vh[0] - k1 * dot, vh[1] - k2 * dot])


def leray_project(grid: Grid2D, v: np.ndarray) -> np.ndarray:
    """L2-orthogonal projection of a 2-vector field onto divergence-free fields."""
    return irfft(grid, leray_hat(grid, rfft(v)))


def spectral_divergence_norm(grid: Grid2D, v: np.ndarray) -> float:
    """Grid L2 norm of the spectral divergence of ``v``."""
    div = divergence(grid, v)
    return float(np.sqrt(grid.cell_area * np.sum(div**2)))


# -- Littlewood-Paley projectors -----------------------------------------------


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        g0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        s = 1.0 - t
        g1 = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return g0 / (g0 + g1)


def bump(r: np.ndarray) -> np.ndarray:
    """Radial profile: 1 on r <= 1, 0 on r >= 2, smooth and nonincreasing between."""
    r = np.asarray(r, dtype=float)
    return smooth_step(2.0 - r)


def _lp_mult(grid: Grid2D, scale: float) -> np.ndarray:
    return bump(grid.kabs / scale)


def lp_low(grid: Grid2D, f: np.ndarray, beta: float) -> np.ndarray:
    """``P_{<beta} f``."""
    if not beta > 0:
        raise ValueError("frequency cutoff must be positive")
    return apply_multiplier(grid, f, _lp_mult(grid, beta))


def lp_high(grid: Grid2D, f: np.ndarray, alpha: float) -> np.ndarray:
    """``P_{>alpha} f``."""
    if not alpha > 0:
        raise ValueError("frequency cutoff must be positive")
    return apply_multiplier(grid, f, 1.0 - _lp_mult(grid, alpha))


def lp_band(grid: Grid2D, f: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """``P_{alpha<.<beta} f`` with multiplier ``phi(xi/beta) - phi(xi/alpha)``."""
    if not 0 < alpha < beta:
        raise ValueError(f"band requires 0 < alpha < beta, got alpha={alpha}, beta={beta}")
    return apply_multiplier(grid, f, _lp_mult(grid, beta) - _lp_mult(grid, alpha))


@dataclass(frozen=True)
class BernsteinReport:
    lhs: float
    rhs_ratio: float


def bernstein_check(grid: Grid2D, f: np.ndarray, N: float, p: float, q: float) -> BernsteinReport:
    """Evaluate ``||P_{<N} f||_q`` and its ratio to ``N^(2/p - 2/q) ||f||_p``.

    No bound is asserted; callers compare ratios across a corpus.
    """
    from .norms import lp_norm

    if not 1 <= p <= q:
        raise ValueError(f"need 1 <= p <= q, got p={p}, q={q}")
    lhs = lp_norm(grid, lp_low(grid, f, N), q)
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    rhs = N ** (2.0 / p - 2.0 * inv_q) * lp_norm(grid, f, p)
    return BernsteinReport(lhs, lhs / rhs if rhs > 0 else 0.0)


# -- dealiasing ----------------------------------------------------------------


def padded_size(grid: Grid2D) -> int:
    return 3 * grid.n // 2


def pad(grid: Grid2D, ch: np.ndarray) -> np.ndarray:
    """Zero-pad real-FFT coefficients to the 3/2 grid, dropping Nyquist modes."""
    n, m = grid.n, padded_size(grid)
    half = n // 2
    out = np.zeros(ch.shape[:-2] + (m, m // 2 + 1), dtype=complex)
    out[..., :half, :half] = ch[..., :half, :half]
    out[..., m - half + 1 :, :half] = ch[..., n - half + 1 :, :half]
    return out * (m / n) ** 2


def truncate(grid: Grid2D, ch_padded: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pad`: keep modes |k| < n/2 and rescale to the n grid."""
    n, m = grid.n, padded_size(grid)
    half = n // 2
    out = np.zeros(ch_padded.shape[:-2] + (n, n // 2 + 1), dtype=complex)
    out[..., :half, :half] = ch_padded[..., :half, :half]
    out[..., n - half + 1 :, :half] = ch_padded[..., m - half + 1 :, :half]
    return out * (n / m) ** 2


def to_padded(grid: Grid2D, ch: np.ndarray) -> np.ndarray:
    """Physical samples on the 3/2 grid of the field with coefficients ``ch``."""
    m = padded_size(grid)
    return sfft.irfft2(pad(grid, ch), s=(m, m), axes=AXES)


def from_padded(grid: Grid2D, F: np.ndarray) -> np.ndarray:
    """Real-FFT coefficients on the n grid of a product formed on the 3/2 grid."""
    return truncate(grid, sfft.rfft2(F, axes=AXES))


def dealiased_product(grid: Grid2D, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise product of two physical fields with the 3/2 (2/3-rule) padding."""
    prod = to_padded(grid, rfft(a)) * to_padded(grid, rfft(b))
    return irfft(grid, from_padded(grid, prod))
