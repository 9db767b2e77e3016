"""Dyadic grids, lattice cubes, the 3**n translated lattices and sparse families.

All geometry is integer-valued. A cell is addressed by its *absolute* index
vector; the base grid occupies cells ``[0, 2**m)`` along every axis and an
extended grid is a larger, concentric window in the same index frame. A cube
of level ``k`` has ``2**(m - k)`` cells per side, so level 0 is the base root
and negative levels are cubes coarser than the root.

Lattice ``j`` is the standard dyadic lattice translated by a fixed integer
vector whose entries are ``0``, ``0b0101...01`` or ``0b1010...10``. Those
translates stay about a third of the way between dyadic boundaries at every
scale, which is the discrete form of the one-third trick: for any base cube
``Q`` some lattice holds a cube ``R`` with ``3Q`` inside it and at most eight
times the side of ``Q``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MAX_CELLS",
    "Cube",
    "DyadicLattice",
    "Grid",
    "SparseFamily",
    "build_grid",
    "cube_containing",
    "dyadic_children",
    "dyadic_parent",
    "lattice_shift",
    "n_lattices",
    "shifted_lattices",
    "shifted_parent",
    "verify_sparse",
]

#: Default cap on the number of cells of any grid (memory budget).
MAX_CELLS = 1 << 22

_SHIFT_BITS = 48
_SHIFTS = (0, int("01" * (_SHIFT_BITS // 2), 2), int("10" * (_SHIFT_BITS // 2), 2))


def n_lattices(n):
    return 3**n


def lattice_shift(lattice_id, n):
    """Translation vector (absolute cells) of lattice ``lattice_id`` in dimension ``n``."""
    if not 0 <= lattice_id < 3**n:
        raise ValueError(f"lattice id {lattice_id} out of range for n={n}")
    digits = []
    j = lattice_id
    for _ in range(n):
        digits.append(_SHIFTS[j % 3])
        j //= 3
    return tuple(digits)


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``2**(m + ext)`` cells per side, centred at the origin.

    ``L`` and ``m`` fix the base root cube ``[-L, L)**n`` and the cell size
    ``2L / 2**m``. ``ext > 0`` widens the window to half-width ``2**ext * L``
    while keeping the same cells and the same absolute index frame.
    """

    n: int
    L: float
    m: int
    ext: int = 0
    max_cells: int = field(default=MAX_CELLS, compare=False, repr=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"unsupported dimension n={self.n}; only n in {{1, 2}}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"refinement level m must be an integer >= 1, got {self.m}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"half-width L must be positive, got {self.L}")
        if self.ext < 0:
            raise ValueError("ext must be >= 0")
        if self.ncells > self.max_cells:
            raise ValueError(
                f"grid with {self.ncells} cells exceeds the memory budget of {self.max_cells} cells"
            )

    @property
    def N(self):
        """Cells per side."""
        return 1 << (self.m + self.ext)

    @property
    def offset(self):
        """Absolute index of the first cell along each axis."""
        return -((1 << self.ext) - 1) << (self.m - 1)

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def ncells(self):
        return self.N**self.n

    @property
    def cell_size(self):
        return 2.0 * self.L / (1 << self.m)

    @property
    def cell_volume(self):
        return self.cell_size**self.n

    @property
    def half_width(self):
        return self.L * (1 << self.ext)

    @property
    def measure(self):
        return self.cell_volume * self.ncells

    @property
    def base(self):
        return Grid(self.n, self.L, self.m, 0, self.max_cells)

    @property
    def root(self):
        """The base root cube ``[-L, L)**n`` (lattice 0, level 0)."""
        return Cube(0, 0, (0,) * self.n, self.m)

    def extended(self, k):
        """Concentric grid with the same cells and ``2**k`` times the side."""
        return Grid(self.n, self.L, self.m, self.ext + k, self.max_cells)

    def centers(self):
        """Cell-centre coordinates along one axis (identical for every axis)."""
        idx = np.arange(self.N) + self.offset
        return -self.L + (idx + 0.5) * self.cell_size

    def mesh(self):
        """Tuple of ``n`` coordinate arrays of shape :attr:`shape` (``ij`` indexing)."""
        c = self.centers()
        return tuple(np.meshgrid(*([c] * self.n), indexing="ij"))

    def lo(self):
        return (self.offset,) * self.n

    def hi(self):
        return (self.offset + self.N,) * self.n

    def contains_box(self, lo, hi):
        return all(a >= self.offset and b <= self.offset + self.N for a, b in zip(lo, hi))

    def slices(self, lo, hi):
        """Index slices of the part of box ``[lo, hi)`` inside the grid, or None."""
        out = []
        for a, b in zip(lo, hi):
            a0 = max(a, self.offset) - self.offset
            b0 = min(b, self.offset + self.N) - self.offset
            if b0 <= a0:
                return None
            out.append(slice(a0, b0))
        return tuple(out)


def build_grid(n, L, m, max_cells=MAX_CELLS):
    if int(m) != m:
        raise ValueError(f"refinement level m must be an integer >= 1, got {m}")
    return Grid(n, float(L), int(m), 0, max_cells)


@dataclass(frozen=True, order=True)
class Cube:
    """Half-open lattice cube.

    ``coords`` index the cube among the lattice cubes of its level: the lower
    corner (absolute cells) is ``shift % side + coords * side`` per axis.
    """

    lattice_id: int
    level: int
    coords: tuple
    m: int

    def __post_init__(self):
        if self.level > self.m:
            raise ValueError(f"level {self.level} finer than a cell (m={self.m})")
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @property
    def n(self):
        return len(self.coords)

    @property
    def side(self):
        """Side length in cells."""
        return 1 << (self.m - self.level)

    @property
    def ncells(self):
        return self.side**self.n

    @property
    def lo(self):
        s = self.side
        return tuple(
            sh % s + c * s for sh, c in zip(lattice_shift(self.lattice_id, self.n), self.coords)
        )

    @property
    def hi(self):
        return tuple(a + self.side for a in self.lo)

    def sidelength(self, grid):
        return self.side * grid.cell_size

    def measure(self, grid):
        return self.sidelength(grid) ** self.n

    def triple(self):
        """Box ``(lo, hi)`` of the concentric cube with three times the side."""
        s = self.side
        return tuple(a - s for a in self.lo), tuple(a + 2 * s for a in self.lo)

    def contains_cell(self, idx):
        return all(a <= i < b for a, i, b in zip(self.lo, idx, self.hi))

    def contains(self, other):
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def intersects(self, other):
        return all(a < d and c < b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def inside(self, grid):
        return grid.contains_box(self.lo, self.hi)

    @property
    def key(self):
        return f"{self.lattice_id}:{self.level}:" + ",".join(str(c) for c in self.coords)

    @classmethod
    def from_key(cls, key, m):
        j, level, coords = key.split(":")
        return cls(int(j), int(level), tuple(int(c) for c in coords.split(",")), m)

    def __str__(self):
        return self.key


def cube_containing(lattice_id, level, cell, m):
    """The cube of ``lattice_id`` at ``level`` that contains absolute cell ``cell``."""
    n = len(cell)
    s = 1 << (m - level)
    shift = lattice_shift(lattice_id, n)
    coords = tuple((c - sh % s) // s for c, sh in zip(cell, shift))
    return Cube(lattice_id, level, coords, m)


def dyadic_children(Q):
    """The ``2**n`` children of ``Q``; raises for single-cell cubes."""
    if Q.level >= Q.m:
        raise ValueError(f"leaf cube {Q.key} has no dyadic children")
    half = Q.side // 2
    out = []
    for corner in itertools.product((0, 1), repeat=Q.n):
        cell = tuple(a + c * half for a, c in zip(Q.lo, corner))
        out.append(cube_containing(Q.lattice_id, Q.level + 1, cell, Q.m))
    return out


def dyadic_parent(Q):
    return cube_containing(Q.lattice_id, Q.level - 1, Q.lo, Q.m)


@dataclass(frozen=True)
class DyadicLattice:
    """One of the ``3**n`` translated dyadic lattices, truncated to a grid window."""

    id: int
    grid: Grid

    @property
    def shift(self):
        return lattice_shift(self.id, self.grid.n)

    @property
    def root(self):
        """Smallest cube of this lattice containing the base root cube."""
        g = self.grid
        base = g.root
        level = 0
        while True:
            Q = cube_containing(self.id, level, base.lo, g.m)
            if Q.contains(base):
                return Q
            level -= 1

    def generation(self, level):
        """Cubes of the given level lying entirely inside the grid window."""
        g = self.grid
        s = 1 << (g.m - level)
        axes = []
        for sh in self.shift:
            r = sh % s
            first = -((r - g.offset) // s)
            last = (g.offset + g.N - s - r) // s
            axes.append(range(first, last + 1))
        return [Cube(self.id, level, c, g.m) for c in itertools.product(*axes)]

    def levels(self):
        return range(-self.grid.ext, self.grid.m + 1)


def shifted_lattices(grid):
    return [DyadicLattice(j, grid) for j in range(3**grid.n)]


def _axis_fits(lo, hi, side):
    """Lattice digits (0, 1, 2) whose cube of ``side`` covers ``[lo, hi)``."""
    ok = []
    for t, sh in enumerate(_SHIFTS):
        r = sh % side
        start = r + ((lo - r) // side) * side
        if hi <= start + side:
            ok.append(t)
    return ok


def shifted_parent(Q, grid):
    """Cube ``R`` of some translated lattice with ``3Q`` (clipped to the base
    domain) inside ``R`` and ``|R| <= 8**n |Q|``.

    The smallest admissible side wins; among lattices of that side the lowest
    lattice id is taken.
    """
    base = grid.base
    lo3, hi3 = Q.triple()
    lo = tuple(max(a, base.offset) for a in lo3)
    hi = tuple(min(b, base.offset + base.N) for b in hi3)
    for up in range(4):
        side = Q.side << up
        fits = [_axis_fits(a, b, side) for a, b in zip(lo, hi)]
        if all(fits):
            j = sum(f[0] * 3**axis for axis, f in enumerate(fits))
            return cube_containing(j, Q.level - up, lo, Q.m)
    raise RuntimeError(f"no translated lattice cube covers 3Q for {Q.key}")


@dataclass
class SparseFamily:
    """Cubes of a single lattice with a sparseness parameter and optional witness.

    ``witness`` maps each cube to an ``(k, n)`` integer array of the absolute
    cells forming its major subset ``E_Q``.
    """

    lattice_id: int
    cubes: tuple
    eta: float
    witness: dict | None = None

    def __post_init__(self):
        self.cubes = tuple(sorted(set(self.cubes)))
        bad = [Q for Q in self.cubes if Q.lattice_id != self.lattice_id]
        if bad:
            raise ValueError(f"cube {bad[0].key} is not in lattice {self.lattice_id}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"sparseness parameter must lie in (0, 1], got {self.eta}")

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def keys(self):
        return [Q.key for Q in self.cubes]


def verify_sparse(F):
    """Search for pairwise disjoint major subsets ``E_Q`` with ``|E_Q| >= eta |Q|``.

    Cubes are processed from the smallest up and each claims exactly
    ``ceil(eta |Q|)`` of its still-free cells. Cubes of one lattice form a
    laminar family, and every free cell of ``Q`` is free for all of its
    ancestors, so this greedy choice succeeds whenever any witness exists.

    Returns ``(ok, witness)``; ``witness`` is None when ``ok`` is False.
    """
    cubes = list(F.cubes)
    if not cubes:
        return True, {}
    if any(Q.lattice_id != cubes[0].lattice_id for Q in cubes):
        raise ValueError("sparse family mixes lattices")
    n = cubes[0].n
    lo = np.min([Q.lo for Q in cubes], axis=0)
    hi = np.max([Q.hi for Q in cubes], axis=0)
    claimed = np.zeros(tuple(hi - lo), dtype=bool)
    witness = {}
    for Q in sorted(cubes, key=lambda c: (c.side, c.lo)):
        sl = tuple(slice(a - o, b - o) for a, b, o in zip(Q.lo, Q.hi, lo))
        region = claimed[sl]
        free = np.flatnonzero(~region.ravel())
        need = math.ceil(F.eta * Q.ncells - 1e-9)
        if free.size < need:
            return False, None
        idx = np.unravel_index(free[:need], region.shape)
        region[idx] = True
        witness[Q] = np.stack(idx, axis=1) + np.asarray(Q.lo)[None, :n]
    return True, witness
