"""Cube hierarchy, graded cutoffs, nuclear families, and Vitali selection.

A cube at level j has nominal side ``2**(-j(1-eps))`` in box units.  On an
N-cell grid the side is snapped to the nearest power-of-two cell count so
every level tiles the box exactly; the snap is visible through
:func:`level_geometry`.  Levels whose snapped side would fall below
``MIN_SIDE_CELLS`` cells (or exceed the box) are rejected as unresolved.

All geometry lives in grid-cell units and is periodic: intervals,
memberships, and dilations wrap around the box.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .spectral import smoothstep

MIN_SIDE_CELLS = 4


class LevelResolutionError(ValueError):
    """Requested cube level is not representable on the grid."""


@dataclass(frozen=True)
class CubeId:
    j: int
    corner: tuple[int, int, int]   # level-j lattice units
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(int(c) for c in self.corner))


def level_geometry(j: int, epsilon: float, n_grid: int) -> tuple[int, float]:
    """Snapped side in cells and the exact (unsnapped) request.

    Raises :class:`LevelResolutionError` when the level is coarser than
    the box or finer than ``MIN_SIDE_CELLS`` cells.
    """
    exact = n_grid * 2.0 ** (-j * (1.0 - epsilon))
    if exact > n_grid * (1.0 + 1e-12):
        raise LevelResolutionError(
            f"level {j} requests side {exact:.3g} cells, coarser than the box")
    snapped = int(2 ** int(round(np.log2(exact))))
    snapped = min(snapped, n_grid)
    if snapped < MIN_SIDE_CELLS:
        raise LevelResolutionError(
            f"level {j} snaps to {snapped} cells, below the {MIN_SIDE_CELLS}-cell floor")
    return snapped, exact


def coarsest_level(epsilon: float) -> int:
    return 0


def finest_level(epsilon: float, n_grid: int) -> int:
    j = 0
    while True:
        try:
            level_geometry(j + 1, epsilon, n_grid)
        except LevelResolutionError:
            return j
        j += 1


def cube_hierarchy(j: int, epsilon: float, n_grid: int) -> list[CubeId]:
    """Exact tiling of the box by level-j cubes, lexicographic corner order."""
    side, _ = level_geometry(j, epsilon, n_grid)
    m = n_grid // side
    return [CubeId(j, corner, epsilon)
            for corner in itertools.product(range(m), repeat=3)]


def cube_side_cells(cube: CubeId, n_grid: int) -> int:
    side, _ = level_geometry(cube.j, cube.epsilon, n_grid)
    return side


def cube_interval(cube: CubeId, n_grid: int, axis: int) -> tuple[float, float]:
    """(start, length) of the cube extent along one axis, in cells."""
    side = cube_side_cells(cube, n_grid)
    return float(cube.corner[axis] * side), float(side)


def _intervals_intersect(a_start, a_len, b_start, b_len, n):
    if a_len >= n or b_len >= n:
        return True
    return ((b_start - a_start) % n) < a_len or ((a_start - b_start) % n) < b_len


def cubes_intersect(a: CubeId, b: CubeId, n_grid: int) -> bool:
    for axis in range(3):
        sa, la = cube_interval(a, n_grid, axis)
        sb, lb = cube_interval(b, n_grid, axis)
        if not _intervals_intersect(sa, la, sb, lb, n_grid):
            return False
    return True


def dilated_contains(cube: CubeId, points: np.ndarray, n_grid: int,
                     dilation: float = 1.0) -> np.ndarray:
    """Membership of points (cell coordinates, shape (m, 3)) in ``dilation * Q``."""
    side = cube_side_cells(cube, n_grid)
    length = dilation * side
    points = np.atleast_2d(points)
    inside = np.ones(len(points), dtype=bool)
    for axis in range(3):
        if length >= n_grid:
            continue
        start = cube.corner[axis] * side - 0.5 * (dilation - 1.0) * side
        inside &= ((points[:, axis] - start) % n_grid) < length
    return inside


# ---------------------------------------------------------------------------
# graded cutoffs ("type j" bumps)


class BumpProfile:
    """Smooth cutoff equal to 1 on Q, zero outside ``(1 + 2**(-eps j)) Q``.

    The transition margin is ``side * 2**(-eps j) / 2`` per face, built from
    the C-infinity smoothstep, so all derivatives exist and the gradient
    magnitude scales like the inverse margin.  ``type_j`` is the grade of
    the cutoff and defaults to the cube's own level.
    """

    def __init__(self, cube: CubeId, n_grid: int, type_j: int | None = None):
        self.cube = cube
        self.n_grid = n_grid
        self.type_j = cube.j if type_j is None else type_j
        self.side = cube_side_cells(cube, n_grid)
        self.margin = 0.5 * self.side * 2.0 ** (-cube.epsilon * self.type_j)
        self.whole_box = self.side >= n_grid
        if not self.whole_box and self.side + 2.0 * self.margin > n_grid:
            raise ValueError(
                f"cutoff support {self.side + 2 * self.margin:.1f} cells exceeds "
                f"the periodic box ({n_grid} cells)")

    def axis_profile(self, coords: np.ndarray, axis: int) -> np.ndarray:
        """Profile factor along one axis at cell coordinates ``coords``."""
        if self.whole_box:
            return np.ones_like(np.asarray(coords, dtype=float))
        center = (self.cube.corner[axis] + 0.5) * self.side
        d = np.abs((np.asarray(coords, dtype=float) - center + self.n_grid / 2.0)
                   % self.n_grid - self.n_grid / 2.0)
        t = (d - 0.5 * self.side) / self.margin
        return 1.0 - smoothstep(t)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at points given in cell coordinates, shape (m, 3)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.ones(len(points))
        for axis in range(3):
            out *= self.axis_profile(points[:, axis], axis)
        return out

    def sample(self) -> np.ndarray:
        """Dense (N, N, N) sample on the grid (cell-corner convention)."""
        coords = np.arange(self.n_grid, dtype=float)
        gx = self.axis_profile(coords, 0)
        gy = self.axis_profile(coords, 1)
        gz = self.axis_profile(coords, 2)
        return np.einsum("i,j,k->ijk", gx, gy, gz)


def bump_function(cube: CubeId, n_grid: int, type_j: int | None = None,
                  box_size: float = 2.0 * np.pi):
    """Sampled cutoff as a scalar GridField plus its analytic profile."""
    from .grid import GridField
    profile = BumpProfile(cube, n_grid, type_j)
    fld = GridField(profile.sample()[None], box_size)
    fld.meta["margin_cells"] = profile.margin
    return fld, profile


# ---------------------------------------------------------------------------
# nuclear families


def _band_cover(cube: CubeId, level: int, n_grid: int) -> list[CubeId]:
    """Cubes at ``level`` meeting the enlarged cube (1 + 2**(-eps j)) Q."""
    side = cube_side_cells(cube, n_grid)
    margin = 0.5 * side * 2.0 ** (-cube.epsilon * cube.j)
    band_side, _ = level_geometry(level, cube.epsilon, n_grid)
    m = n_grid // band_side
    ranges = []
    for axis in range(3):
        start = cube.corner[axis] * side - margin
        stop = (cube.corner[axis] + 1) * side + margin
        if stop - start >= n_grid:
            ranges.append(range(m))
            continue
        p_lo = int(np.floor(start / band_side))
        p_hi = int(np.ceil(stop / band_side))  # exclusive
        ranges.append(range(p_lo, p_hi))
    out = []
    for px, py, pz in itertools.product(*ranges):
        out.append(CubeId(level, (px % m, py % m, pz % m), cube.epsilon))
    return out


def nuclear_family(cube: CubeId, depth: int, n_grid: int,
                   clamp: bool = True) -> set[CubeId]:
    """Recursive multi-level covering family ``N^depth(Q)``.

    ``N^1(Q)`` unites five bands of cubes at levels j-2 .. j+2, each band
    covering the enlargement of Q; deeper families recurse member-wise.
    Bands outside the resolvable level range are clamped to the nearest
    resolvable level when ``clamp`` is set, otherwise a
    :class:`LevelResolutionError` propagates.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    current = {cube}
    if depth == 0:
        return current
    lo = coarsest_level(cube.epsilon)
    hi = finest_level(cube.epsilon, n_grid)
    for _ in range(depth):
        nxt: set[CubeId] = set()
        for q in current:
            for offset in range(-2, 3):
                level = q.j + offset
                if clamp:
                    level = min(max(level, lo), hi)
                elif not lo <= level <= hi:
                    raise LevelResolutionError(
                        f"family band at level {level} is unresolved "
                        f"(valid range [{lo}, {hi}])")
                nxt.update(_band_cover(q, level, n_grid))
        current = nxt
    return current


# ---------------------------------------------------------------------------
# Vitali selection


def _dilated_intersect(a: CubeId, b: CubeId, n_grid: int, factor: float) -> bool:
    for axis in range(3):
        sa, la = cube_interval(a, n_grid, axis)
        sb, lb = cube_interval(b, n_grid, axis)
        sa, la = sa - 0.5 * (factor - 1.0) * la, factor * la
        sb, lb = sb - 0.5 * (factor - 1.0) * lb, factor * lb
        if not _intervals_intersect(sa, la, sb, lb, n_grid):
            return False
    return True


def vitali_cover(cubes, n_grid: int, dilation: float = 5.0,
                 pre_dilation: float = 1.0) -> list[CubeId]:
    """Greedy disjoint subfamily whose ``dilation``-enlargements cover the input.

    Cubes are visited in decreasing size, ties broken by level then
    lexicographic corner, and kept when disjoint from everything already
    kept.  For a common-level input the classical argument gives coverage
    with ``dilation = 5``: any rejected cube meets a kept cube of at least
    its size, hence lies inside the kept cube's 5-fold enlargement.

    With ``pre_dilation = D > 1`` disjointness is required of the D-fold
    enlargements instead, so kept cubes are spread at least D sides apart
    (their neighborhoods, e.g. nuclear families, stop overlapping) and the
    coverage guarantee transfers to the ``dilation * D`` enlargements.
    """
    def sort_key(c: CubeId):
        return (-cube_side_cells(c, n_grid), c.j, c.corner)

    selected: list[CubeId] = []
    for cube in sorted(set(cubes), key=sort_key):
        if all(not _dilated_intersect(cube, kept, n_grid, pre_dilation)
               for kept in selected):
            selected.append(cube)
    return selected
