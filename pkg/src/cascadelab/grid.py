"""Periodic-grid fields and Fourier helpers.

Fields are sampled on an N^3 periodic box of side ``box_size`` with N a
power of two.  Physical wave vectors are ``2 pi k / box_size`` for integer
mode vectors k in the usual FFT layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass
class GridField:
    """Real field on the periodic grid; ``data`` has shape (c, N, N, N)."""

    data: np.ndarray
    box_size: float = 2.0 * np.pi
    time_tag: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim == 3:
            self.data = self.data[None]
        if self.data.ndim != 4 or self.data.shape[0] not in (1, 3):
            raise ValueError(f"expected (c, N, N, N) with c in {{1,3}}, got {self.data.shape}")
        n = self.data.shape[1]
        if self.data.shape[1:] != (n, n, n):
            raise ValueError(f"grid must be cubic, got {self.data.shape}")
        if not _is_power_of_two(n):
            raise ValueError(f"grid side must be a power of two, got {n}")
        if self.box_size <= 0:
            raise ValueError("box_size must be positive")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field samples must be finite")

    @property
    def n_grid(self) -> int:
        return self.data.shape[1]

    @property
    def n_components(self) -> int:
        return self.data.shape[0]

    @property
    def cell_volume(self) -> float:
        return (self.box_size / self.n_grid) ** 3

    def copy(self) -> "GridField":
        return GridField(self.data.copy(), self.box_size, self.time_tag, dict(self.meta))

    def like(self, data: np.ndarray) -> "GridField":
        return GridField(data, self.box_size, self.time_tag)


def zero_field(n_grid: int, box_size: float = 2.0 * np.pi,
               n_components: int = 3) -> GridField:
    return GridField(np.zeros((n_components, n_grid, n_grid, n_grid)), box_size)


@lru_cache(maxsize=16)
def _mode_grids(n_grid: int):
    k = np.fft.fftfreq(n_grid, d=1.0 / n_grid)  # integer mode numbers
    return np.meshgrid(k, k, k, indexing="ij")


def wave_vectors(n_grid: int, box_size: float,
                 zero_nyquist: bool = False) -> list[np.ndarray]:
    """Physical wave-vector component arrays, each of shape (N, N, N).

    Odd (derivative-type) symbols must use ``zero_nyquist=True``: the
    Nyquist frequency has no sign-consistent representative on an even
    grid, so keeping it would break Hermitian symmetry and leak imaginary
    parts into real fields.  Even symbols (|xi| powers, band cutoffs) are
    safe with the full arrays.
    """
    scale = 2.0 * np.pi / box_size
    out = []
    for g in _mode_grids(n_grid):
        arr = scale * g
        if zero_nyquist:
            arr = np.where(np.abs(g) == n_grid // 2, 0.0, arr)
        out.append(arr)
    return out


def wave_magnitude(n_grid: int, box_size: float) -> np.ndarray:
    gx, gy, gz = wave_vectors(n_grid, box_size)
    return np.sqrt(gx ** 2 + gy ** 2 + gz ** 2)


def nyquist(n_grid: int, box_size: float) -> float:
    return np.pi * n_grid / box_size


def fft_field(fld: GridField) -> np.ndarray:
    return np.fft.fftn(fld.data, axes=(1, 2, 3))


def ifft_field(spectrum: np.ndarray, like: GridField) -> GridField:
    out = np.fft.ifftn(spectrum, axes=(1, 2, 3)).real
    return like.like(out)


def apply_symbol(fld: GridField, symbol: np.ndarray) -> GridField:
    """Multiply the spectrum componentwise by a real symbol array."""
    return ifft_field(fft_field(fld) * symbol, fld)


def l2_norm(fld: GridField) -> float:
    return float(np.sqrt(np.sum(fld.data ** 2) * fld.cell_volume))


def lp_norm(fld: GridField, q: float) -> float:
    """L^q norm; the pointwise magnitude is the euclidean one over components."""
    mag = np.sqrt(np.sum(fld.data ** 2, axis=0))
    if np.isinf(q):
        return float(np.max(mag))
    return float((np.sum(mag ** q) * fld.cell_volume) ** (1.0 / q))


def inner(a: GridField, b: GridField) -> float:
    if a.data.shape != b.data.shape:
        raise ValueError("field shapes differ")
    return float(np.sum(a.data * b.data) * a.cell_volume)


def mean_integral(fld: GridField) -> np.ndarray:
    """Componentwise integral of the field over the box."""
    return np.sum(fld.data, axis=(1, 2, 3)) * fld.cell_volume


def spectral_divergence(fld: GridField) -> GridField:
    if fld.n_components != 3:
        raise ValueError("divergence needs a 3-component field")
    kx, ky, kz = wave_vectors(fld.n_grid, fld.box_size, zero_nyquist=True)
    hat = fft_field(fld)
    div_hat = 1j * (kx * hat[0] + ky * hat[1] + kz * hat[2])
    out = np.fft.ifftn(div_hat).real
    return GridField(out[None], fld.box_size, fld.time_tag)


def spectral_gradient_norm(fld: GridField) -> float:
    """L^2 norm of the full gradient, evaluated spectrally."""
    kx, ky, kz = wave_vectors(fld.n_grid, fld.box_size, zero_nyquist=True)
    hat = fft_field(fld)
    n6 = fld.n_grid ** 6
    total = 0.0
    for comp in hat:
        total += np.sum((kx ** 2 + ky ** 2 + kz ** 2) * np.abs(comp) ** 2)
    return float(np.sqrt(total * fld.box_size ** 3 / n6))


def plane_wave(n_grid: int, box_size: float, mode: tuple[int, int, int],
               component: int = 0, phase: float = 0.0) -> GridField:
    """Real plane wave cos(xi . x + phase) in one vector component."""
    n = n_grid
    axes = [np.arange(n) * (box_size / n)] * 3
    xx, yy, zz = np.meshgrid(*axes, indexing="ij")
    scale = 2.0 * np.pi / box_size
    arg = scale * (mode[0] * xx + mode[1] * yy + mode[2] * zz) + phase
    data = np.zeros((3, n, n, n))
    data[component] = np.cos(arg)
    return GridField(data, box_size)
