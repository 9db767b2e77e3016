"""Brute-force reference implementations used by the test-suite.

Everything here enumerates the cube family cube by cube with plain loops, so
it shares no code path with the vectorised scans it checks.
"""

import itertools
import math

import numpy as np
from scipy.optimize import brentq

from roughsparse.lattice import DyadicLattice


def cube_family(grid):
    """Every cube of every translated lattice lying inside the grid window."""
    out = []
    for j in range(3**grid.n):
        lat = DyadicLattice(j, grid)
        for level in range(-grid.ext, grid.m + 1):
            out.extend(lat.generation(level))
    return out


def block(values, grid, Q):
    sl = tuple(slice(a - grid.offset, b - grid.offset) for a, b in zip(Q.lo, Q.hi))
    return values[sl]


def cells(grid, Q):
    rng = [range(a - grid.offset, b - grid.offset) for a, b in zip(Q.lo, Q.hi)]
    return itertools.product(*rng)


def luxemburg(a, psi, wts=None):
    """Orlicz norm of a sample by root finding on ``lam``."""
    a = np.abs(np.ravel(a))
    wts = np.full(a.size, 1.0 / a.size) if wts is None else np.ravel(wts) / np.sum(wts)
    if not a.any():
        return 0.0

    def F(lam):
        with np.errstate(over="ignore"):
            return float(np.sum(psi(a / lam) * wts)) - 1.0

    lo, hi = 1e-300, a.max()
    while F(hi) > 0:
        hi *= 2
    lo = hi
    while F(lo) <= 0:
        lo /= 2
    return brentq(F, lo, hi, xtol=1e-300, rtol=1e-14, maxiter=500)


def maximal(values, grid, norm=None):
    """``max_{Q containing x} norm(block)`` cell by cell."""
    norm = (lambda b: float(np.mean(np.abs(b)))) if norm is None else norm
    out = np.zeros(grid.shape)
    for Q in cube_family(grid):
        v = norm(block(values, grid, Q))
        sl = tuple(slice(a - grid.offset, b - grid.offset) for a, b in zip(Q.lo, Q.hi))
        out[sl] = np.maximum(out[sl], v)
    return out


def bmo(values, grid):
    best = 0.0
    for Q in cube_family(grid):
        b = block(values, grid, Q)
        best = max(best, float(np.mean(np.abs(b - b.mean()))))
    return best


def ap(values, grid, p):
    if p == 1:
        return float(np.max(maximal(values, grid) / values))
    best = 0.0
    for Q in cube_family(grid):
        b = block(values, grid, Q)
        best = max(best, float(b.mean() * np.mean(b ** (1 / (1 - p))) ** (p - 1)))
    return best


def ainf(values, grid):
    fam = cube_family(grid)
    best = 0.0
    for Q in fam:
        tot = 0.0
        for c in cells(grid, Q):
            x = tuple(i + grid.offset for i in c)
            mx = 0.0
            for P in fam:
                if not P.contains_cell(x):
                    continue
                lo = [max(a, b) for a, b in zip(P.lo, Q.lo)]
                hi = [min(a, b) for a, b in zip(P.hi, Q.hi)]
                sl = tuple(slice(a - grid.offset, b - grid.offset) for a, b in zip(lo, hi))
                mx = max(mx, float(values[sl].sum()) / P.ncells)
            tot += mx
        best = max(best, tot / float(block(values, grid, Q).sum()))
    return best


def mixed(values, grid, p, q):
    pp = p / (p - 1)
    best = 0.0
    for Q in cube_family(grid):
        b = block(values, grid, Q)
        val = b.mean() * np.mean(b ** (1 / (1 - q))) ** ((q - 1) / p)
        val *= math.exp(-np.mean(np.log(b))) ** (1 / pp)
        best = max(best, float(val))
    return best
