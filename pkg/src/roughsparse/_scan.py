"""Vectorised sweeps over every lattice cube inside a square window.

For one lattice and one level the cubes inside a window tile a sub-box, so
per-cube statistics reduce to reshapes of the cell array. A :class:`Tiling`
describes one such sub-box; sweeping all tilings visits the cube family used
by every maximal function, weight characteristic and BMO norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import Cube, lattice_shift

# relative slack for tie-tolerant argmax
ARGMAX_RTOL = 1e-12


@dataclass(frozen=True)
class Tiling:
    lattice_id: int
    level: int
    side: int
    start: tuple  # first covered cell per axis, relative to the window
    counts: tuple  # cubes per axis

    @property
    def n(self):
        return len(self.start)

    @property
    def ncubes(self):
        return int(np.prod(self.counts))

    def region(self):
        return tuple(slice(s, s + c * self.side) for s, c in zip(self.start, self.counts))

    def blocks(self, arr):
        """``(ncubes, side**n)`` view-copy of ``arr`` grouped by cube."""
        sub = arr[self.region()]
        s = self.side
        if self.n == 1:
            return sub.reshape(self.counts[0], s)
        c0, c1 = self.counts
        return sub.reshape(c0, s, c1, s).transpose(0, 2, 1, 3).reshape(c0 * c1, s * s)

    def expand(self, per_cube):
        """Broadcast one value per cube to the cells of the tiled region."""
        out = np.asarray(per_cube).reshape(self.counts)
        for axis in range(self.n):
            out = np.repeat(out, self.side, axis=axis)
        return out

    def accumulate_max(self, target, per_cube):
        reg = self.region()
        np.maximum(target[reg], self.expand(per_cube), out=target[reg])

    def cube(self, index, window_offset, m):
        idx = np.unravel_index(index, self.counts)
        shift = lattice_shift(self.lattice_id, self.n)
        coords = []
        for axis in range(self.n):
            lo = window_offset + self.start[axis] + int(idx[axis]) * self.side
            coords.append((lo - shift[axis] % self.side) // self.side)
        return Cube(self.lattice_id, self.level, tuple(coords), m)

    def axis_bounds(self, size):
        """Per-axis arrays ``(lo, hi, valid)`` giving, for every window cell,
        the relative bounds of the tiling cube containing it."""
        i = np.arange(size)
        out = []
        for s, c in zip(self.start, self.counts):
            k = (i - s) // self.side
            valid = (k >= 0) & (k < c)
            lo = s + k * self.side
            out.append((lo, lo + self.side, valid))
        return out


@lru_cache(maxsize=256)
def tilings(window_offset, size, n, m, lattices=None, max_side=None):
    """All tilings of a square window ``[window_offset, window_offset + size)**n``.

    Ordered by lattice id, then from the coarsest level to single cells, which
    is the scan order used for argmax tie-breaks.
    """
    if lattices is None:
        lattices = tuple(range(3**n))
    top = size.bit_length() - 1
    if max_side is not None:
        top = min(top, max_side.bit_length() - 1)
    out = []
    for j in lattices:
        shift = lattice_shift(j, n)
        for k in range(top, -1, -1):
            s = 1 << k
            start, counts = [], []
            for sh in shift:
                o = (sh - window_offset) % s
                start.append(o)
                counts.append((size - o) // s)
            if min(counts) == 0:
                continue
            out.append(Tiling(j, m - k, s, tuple(start), tuple(counts)))
    return tuple(out)


def grid_tilings(grid, lattices=None):
    return tilings(grid.offset, grid.N, grid.n, grid.m, lattices)


def argmax_first(values):
    """Index of the first entry within ``ARGMAX_RTOL`` of the maximum."""
    values = np.asarray(values)
    top = values.max()
    thresh = top - ARGMAX_RTOL * abs(top)
    return int(np.flatnonzero(values >= thresh)[0])


def scan_max(grid, per_tiling):
    """Maximise a per-cube statistic over the cube family of ``grid``.

    ``per_tiling(tiling)`` returns one value per cube. Returns
    ``(value, cube)`` with the tie-tolerant first argmax in scan order.
    """
    best_vals = []
    best_idx = []
    tl = grid_tilings(grid)
    for t in tl:
        v = np.asarray(per_tiling(t), dtype=float)
        i = argmax_first(v)
        best_vals.append(v[i])
        best_idx.append(i)
    k = argmax_first(best_vals)
    return float(best_vals[k]), tl[k].cube(best_idx[k], grid.offset, grid.m)


def scan_all(grid, per_tiling):
    """Concatenate a per-cube statistic over every tiling of ``grid``."""
    return np.concatenate([np.asarray(per_tiling(t), dtype=float) for t in grid_tilings(grid)])


def maximal_over_cubes(grid, per_tiling, fill=-np.inf):
    """Cellwise max over all cubes containing the cell of a per-cube statistic."""
    out = np.full(grid.shape, fill, dtype=float)
    for t in grid_tilings(grid):
        t.accumulate_max(out, per_tiling(t))
    return out


def box_sum_table(values):
    """Zero-padded summed-area table for rectangle sums."""
    S = np.zeros(tuple(s + 1 for s in values.shape))
    if values.ndim == 1:
        S[1:] = np.cumsum(values)
    else:
        S[1:, 1:] = values.cumsum(0).cumsum(1)
    return S


def box_sums(S, bounds):
    """Rectangle sums for per-axis bound arrays ``[(lo, hi), ...]``."""
    if len(bounds) == 1:
        (lo, hi), = bounds
        return S[hi] - S[lo]
    (lo0, hi0), (lo1, hi1) = bounds
    return (
        S[hi0[:, None], hi1[None, :]]
        - S[lo0[:, None], hi1[None, :]]
        - S[hi0[:, None], lo1[None, :]]
        + S[lo0[:, None], lo1[None, :]]
    )
