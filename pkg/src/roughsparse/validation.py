"""Input checks shared by the estimators and the command line."""

from __future__ import annotations

import math

import numpy as np

from .lattice import Grid
from .norms import GridFunction, Weight


def check_exponent(name, value, lo=1.0, strict=False, allow_inf=False):
    """Validate a real exponent ``value >= lo`` (``> lo`` when ``strict``)."""
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if (v <= lo) if strict else (v < lo):
        op = ">" if strict else ">="
        raise ValueError(f"{name} must be {op} {lo:g}, got {v:g}")
    return v


def check_unit_interval(name, value):
    v = float(value)
    if not 0 < v < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {v:g}")
    return v


def infer_grid(size, n=1, L=1.0):
    """Base grid with ``size`` cells in dimension ``n``."""
    side = round(size ** (1.0 / n))
    if side**n != size or side < 2 or side & (side - 1):
        raise ValueError(f"{size} cells do not form a 2**m grid in dimension {n}")
    return Grid(n, float(L), side.bit_length() - 1)


def check_grid_function(X, grid=None, n=1, L=1.0):
    """Coerce ``X`` (GridFunction or array) to a :class:`GridFunction`."""
    if isinstance(X, GridFunction):
        if grid is not None and X.grid != grid:
            raise ValueError("grid function lives on a different grid")
        return X
    a = np.asarray(X, dtype=float)
    if grid is None:
        grid = infer_grid(a.size, n, L)
    if not np.all(np.isfinite(a)):
        raise ValueError("input contains non-finite values")
    return GridFunction(grid, a.reshape(grid.shape))


def check_weight(X, grid=None, n=1, L=1.0):
    h = check_grid_function(X, grid, n, L)
    if isinstance(h, Weight):
        return h
    if h.values.min() <= 0:
        raise ValueError("weight must be strictly positive")
    return Weight(h.grid, h.values)


def check_nonnegative(h):
    if np.any(h.values < 0):
        raise ValueError("function must be nonnegative")
    return h
