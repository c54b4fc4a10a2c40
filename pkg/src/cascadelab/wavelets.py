"""Divergence-free, zero-momentum wavelet basis on the periodic grid.

Four Schwartz-type vector profiles ``psi_i`` are realized directly in
discrete Fourier space: each is a smooth radial bump translated to a ball
``B_i`` inside the annulus ``{1 < |xi| <= (lam+1)/2}``, mirrored onto
``-B_i`` for realness, polarized orthogonally to the ball center, and
projected mode-by-mode onto divergence-free fields before L^2
normalization.  The shell copy ``psi_{i,n}``, the L^2 rescaling of
``psi_i`` by ``lam**n``, lives on the dilated balls ``lam**n B_i`` and is
realized the same way (continuum symbol evaluated at the available grid
modes, which plays the role of nearest-mode snapping; the residual snap
offset is recorded in the basis metadata).

Because the supports of all realized shells are pairwise disjoint sets of
grid modes, the family is exactly orthonormal on the grid, coefficients
are recovered by plain inner products, and zero momentum and
divergence-freeness hold to machine precision.

The box side is tied to the dimensionless geometry through ``base_scale``:
``box_size = 2 pi base_scale`` makes the fundamental mode ``1/base_scale``
so the unit annulus is resolved by about ``base_scale`` modes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .grid import GridField, _mode_grids

DEFAULT_DIRECTIONS = np.array([
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 1.0] / np.sqrt(3.0),
])


class BasisGeometryError(ValueError):
    """Ball layout violates the annulus or mutual-disjointness constraints."""


class UnresolvedShellError(ValueError):
    """A requested shell has no resolvable grid modes (or exceeds Nyquist)."""


def radial_bump(r: np.ndarray) -> np.ndarray:
    """Compactly supported mollifier profile exp(-1/(1-r^2)) on |r| < 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def _polarization(direction: np.ndarray) -> np.ndarray:
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(direction)))] = 1.0
    v = np.cross(direction, axis)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class BallGeometry:
    """Dimensionless ball layout shared by all shells."""

    directions: np.ndarray      # (4, 3) unit vectors
    center_radius: float        # distance of ball centers from the origin
    ball_radius: float

    @classmethod
    def for_lambda(cls, lam: float, directions: np.ndarray | None = None,
                   center_radius: float | None = None,
                   ball_radius: float | None = None) -> "BallGeometry":
        if directions is None:
            directions = DEFAULT_DIRECTIONS
        directions = np.asarray(directions, dtype=float)
        norms = np.linalg.norm(directions, axis=1)
        directions = directions / norms[:, None]
        if center_radius is None:
            center_radius = (1.0 + (lam + 1.0) / 2.0) / 2.0
        if ball_radius is None:
            ball_radius = 0.9 * (lam - 1.0) / 4.0
        geo = cls(directions, float(center_radius), float(ball_radius))
        geo.validate(lam)
        return geo

    def validate(self, lam: float):
        r0, rho = self.center_radius, self.ball_radius
        if self.directions.shape != (4, 3):
            raise BasisGeometryError("need exactly four ball directions")
        if rho <= 0:
            raise BasisGeometryError("ball radius must be positive")
        if not (r0 - rho > 1.0 and r0 + rho <= (lam + 1.0) / 2.0 + 1e-12):
            raise BasisGeometryError(
                f"balls (r0={r0}, rho={rho}) do not fit the annulus "
                f"(1, {(lam + 1.0) / 2.0}]")
        centers = np.concatenate([self.directions, -self.directions]) * r0
        for a in range(len(centers)):
            for b in range(a + 1, len(centers)):
                if np.linalg.norm(centers[a] - centers[b]) <= 2.0 * rho:
                    raise BasisGeometryError(
                        f"signed balls {a} and {b} are not disjoint")

    def centers(self) -> np.ndarray:
        return self.center_radius * self.directions


@dataclass
class SpectralShell:
    """Sparse spectral support of one realized shell wavelet."""

    flat_idx: np.ndarray   # flat indices into the N^3 FFT cube
    amp: np.ndarray        # (3, m) real spectral amplitudes
    snap_offset: float     # |center - nearest mode| / ball radius


@dataclass
class WaveletBasis:
    lam: float
    n_grid: int
    base_scale: float
    geometry: BallGeometry
    n_window: tuple[int, int]
    shells: dict[tuple[int, int], SpectralShell]
    psi: list[GridField] = field(default_factory=list)
    profile_shell: int = 0

    @property
    def box_size(self) -> float:
        return 2.0 * np.pi * self.base_scale

    @property
    def ball_centers(self) -> np.ndarray:
        return self.geometry.centers()

    @property
    def ball_radius(self) -> float:
        return self.geometry.ball_radius

    def window_shells(self) -> range:
        return range(self.n_window[0], self.n_window[1] + 1)

    def covers(self, n_min: int, n_max: int) -> bool:
        return self.n_window[0] <= n_min and n_max <= self.n_window[1]

    @property
    def max_snap_offset(self) -> float:
        return max(s.snap_offset for s in self.shells.values())

    def shell_band(self, n: int) -> int:
        """Dyadic band index hosting the center frequency of shell n."""
        return int(round(np.log2(self.geometry.center_radius * self.lam ** n)))

    @property
    def basis_id(self) -> str:
        payload = json.dumps({
            "lam": self.lam, "n_grid": self.n_grid, "base_scale": self.base_scale,
            "window": list(self.n_window),
            "r0": self.geometry.center_radius, "rho": self.geometry.ball_radius,
            "dirs": np.round(self.geometry.directions, 12).tolist(),
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def empty_spectrum(self) -> np.ndarray:
        n = self.n_grid
        return np.zeros((3, n * n * n), dtype=complex)

    def materialize(self, spectrum_flat: np.ndarray,
                    time_tag: float | None = None) -> GridField:
        n = self.n_grid
        hat = spectrum_flat.reshape(3, n, n, n)
        data = np.fft.ifftn(hat, axes=(1, 2, 3)).real
        return GridField(data, self.box_size, time_tag)


def build_wavelet_basis(lam: float, n_grid: int,
                        n_window: tuple[int, int] = (0, 2),
                        base_scale: float = 4.0,
                        geometry: BallGeometry | None = None,
                        nyquist_margin: float = 0.98) -> WaveletBasis:
    """Construct the realized basis for a shell window on an N^3 grid.

    Raises
    ------
    BasisGeometryError
        If the ball layout cannot sit inside the annulus with disjoint
        signed copies.
    UnresolvedShellError
        If some requested shell contains no grid mode or pokes past the
        Nyquist sphere.
    """
    if not 1.0 < lam <= 2.0:
        raise ValueError(f"scale ratio must satisfy 1 < lam <= 2, got {lam}")
    n_lo, n_hi = int(n_window[0]), int(n_window[1])
    if n_lo > n_hi:
        raise ValueError(f"empty shell window {n_window!r}")
    if geometry is None:
        geometry = BallGeometry.for_lambda(lam)
    else:
        geometry.validate(lam)

    box = 2.0 * np.pi * base_scale
    gx, gy, gz = _mode_grids(n_grid)
    # physical frequency of mode k is k / base_scale
    fx, fy, fz = gx / base_scale, gy / base_scale, gz / base_scale
    nyq = 0.5 * n_grid / base_scale
    norm_factor = box ** 3 / n_grid ** 6  # Parseval weight for FFT-layout sums

    shells: dict[tuple[int, int], SpectralShell] = {}
    claimed = np.zeros(n_grid ** 3, dtype=bool)
    for n in range(n_lo, n_hi + 1):
        scale = lam ** n
        outer = (geometry.center_radius + geometry.ball_radius) * scale
        if outer > nyquist_margin * nyq:
            raise UnresolvedShellError(
                f"shell {n} reaches |xi|={outer:.3g}, beyond "
                f"{nyquist_margin:.2f} x Nyquist ({nyq:.3g})")
        for i in range(4):
            center = geometry.centers()[i] * scale
            radius = geometry.ball_radius * scale
            dist = np.sqrt((fx - center[0]) ** 2 + (fy - center[1]) ** 2
                           + (fz - center[2]) ** 2)
            mask = dist < radius * (1.0 - 1e-12)
            if not np.any(mask):
                raise UnresolvedShellError(
                    f"shell {n}, species {i + 1}: no grid mode inside the ball")
            snap = float(np.min(dist) / radius)
            pol = _polarization(geometry.directions[i])
            sel = np.nonzero(mask.ravel())
            ball_amp = radial_bump(dist[mask] / radius)
            xi = np.stack([fx[mask], fy[mask], fz[mask]])
            xi_dot_v = np.einsum("c,cm->m", pol, xi)
            xi_sq = np.sum(xi ** 2, axis=0)
            amp_half = ball_amp * (pol[:, None] - xi * (xi_dot_v / xi_sq))

            # mirror ball at -center: same real amplitudes, negated modes
            ix, iy, iz = np.nonzero(mask)
            jx, jy, jz = (-ix) % n_grid, (-iy) % n_grid, (-iz) % n_grid
            idx_pos = sel[0]
            idx_neg = (jx * n_grid + jy) * n_grid + jz
            flat_idx = np.concatenate([idx_pos, idx_neg])
            amp = np.concatenate([amp_half, amp_half], axis=1)

            if np.any(claimed[flat_idx]):
                raise BasisGeometryError(
                    f"shell {n}, species {i + 1}: spectral support overlaps "
                    "an earlier shell")
            claimed[flat_idx] = True

            norm = np.sqrt(np.sum(amp ** 2) * norm_factor)
            if norm == 0:
                raise UnresolvedShellError(
                    f"shell {n}, species {i + 1}: degenerate amplitude")
            shells[(i + 1, n)] = SpectralShell(flat_idx, amp / norm, snap)

    basis = WaveletBasis(lam=lam, n_grid=n_grid, base_scale=base_scale,
                         geometry=geometry, n_window=(n_lo, n_hi),
                         shells=shells)
    profile_shell = 0 if n_lo <= 0 <= n_hi else n_lo
    basis.profile_shell = profile_shell
    for i in range(1, 5):
        spec = basis.empty_spectrum()
        sh = shells[(i, profile_shell)]
        spec[:, sh.flat_idx] = sh.amp
        basis.psi.append(basis.materialize(spec))
    return basis


def project_coefficients(fld: GridField, basis: WaveletBasis) -> np.ndarray:
    """Recover shell amplitudes <u, psi_{i,n}> over the basis window.

    Output shape is (4, window length), species-major.  Exact (to roundoff)
    for fields synthesized from the same basis, by disjoint spectral
    supports.
    """
    if fld.n_grid != basis.n_grid:
        raise ValueError("field grid does not match the basis grid")
    if abs(fld.box_size - basis.box_size) > 1e-12 * basis.box_size:
        raise ValueError("field box size does not match the basis box size")
    n = fld.n_grid
    hat = np.fft.fftn(fld.data, axes=(1, 2, 3)).reshape(3, n ** 3)
    weight = basis.box_size ** 3 / n ** 6
    lo, hi = basis.n_window
    out = np.zeros((4, hi - lo + 1))
    for (i, shell_n), sh in basis.shells.items():
        val = np.sum(hat[:, sh.flat_idx] * sh.amp).real * weight
        out[i - 1, shell_n - lo] = val
    return out


def synthesize_field(coeffs, basis: WaveletBasis, n_min: int | None = None,
                     time_tag: float | None = None) -> GridField:
    """Velocity field ``u = sum X[i,n] psi_{i,n}`` from shell amplitudes.

    ``coeffs`` is a (4, n_shells) array whose shell axis starts at
    ``n_min`` (defaults to the basis window start).  Every populated shell
    must lie inside the basis window.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 2 or coeffs.shape[0] != 4:
        raise ValueError(f"coeffs must have shape (4, n_shells), got {coeffs.shape}")
    lo = basis.n_window[0] if n_min is None else int(n_min)
    hi = lo + coeffs.shape[1] - 1
    if not basis.covers(lo, hi):
        raise ValueError(
            f"state window [{lo}, {hi}] outside basis window {basis.n_window}")
    spec = basis.empty_spectrum()
    for (i, shell_n), sh in basis.shells.items():
        if lo <= shell_n <= hi:
            x = coeffs[i - 1, shell_n - lo]
            if x != 0.0:
                spec[:, sh.flat_idx] += x * sh.amp
    return basis.materialize(spec, time_tag)


def synthesize_state(state, basis: WaveletBasis, config) -> GridField:
    """Synthesize directly from a cascade state and its config window."""
    return synthesize_field(state.X, basis, n_min=config.n_min, time_tag=state.t)
