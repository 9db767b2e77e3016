"""Weights, BMO symbols, probe corpora and seeded random test inputs."""

from __future__ import annotations

import numpy as np

from .norms import GridFunction, Weight

__all__ = [
    "checkerboard_weight",
    "dyadic_indicators",
    "exp_bmo_weight",
    "haar_differences",
    "indicator",
    "indicator_symbol",
    "log_symbol",
    "modulated_bumps",
    "power_weight",
    "probe_corpus",
    "random_signs",
    "random_triple",
    "single_cell",
    "weak_probes",
    "weight_suite",
]


def _radius(grid, x0=0.0):
    X = grid.mesh()
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (grid.n,))
    return np.sqrt(sum((Xi - c) ** 2 for Xi, c in zip(X, x0)))


def power_weight(grid, delta, eps=None, x0=0.0):
    """``max(|x - x0|, eps)**delta``; ``eps`` defaults to half a cell."""
    eps = grid.cell_size / 2 if eps is None else float(eps)
    if not eps > 0:
        raise ValueError("power weight floor must be positive")
    return Weight(grid, np.maximum(_radius(grid, x0), eps) ** float(delta))


def checkerboard_weight(grid, a, b, cells=None):
    """Two-valued weight alternating ``a`` and ``b`` on blocks of ``cells`` cells per side."""
    if not (a > 0 and b > 0):
        raise ValueError("checkerboard values must be positive")
    cells = max(1, grid.N // 4) if cells is None else int(cells)
    idx = (np.arange(grid.N) + grid.offset) // cells
    parity = sum(np.meshgrid(*([idx] * grid.n), indexing="ij")) % 2
    return Weight(grid, np.where(parity == 0, float(a), float(b)))


def log_symbol(grid, x0=0.0, eps=None):
    """Clipped log-distance ``log(max(|x - x0|, eps))``."""
    eps = grid.cell_size / 2 if eps is None else float(eps)
    return GridFunction(grid, np.log(np.maximum(_radius(grid, x0), eps)))


def indicator(grid, lo, hi):
    """Indicator of the box ``[lo, hi)`` in space coordinates (by cell centre)."""
    X = grid.mesh()
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (grid.n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (grid.n,))
    mask = np.ones(grid.shape, dtype=bool)
    for Xi, a, b in zip(X, lo, hi):
        mask &= (Xi >= a) & (Xi < b)
    return GridFunction(grid, mask.astype(float))


indicator_symbol = indicator


def exp_bmo_weight(grid, gamma, b):
    """``exp(gamma * b)`` for a BMO symbol ``b``."""
    return Weight(grid, np.exp(float(gamma) * b.values))


def weight_suite(grid):
    """Named weights used by the verification suites."""
    suite = {"constant": Weight.constant(grid, 1.0)}
    for d in (-0.2, -0.5, -0.8):
        suite[f"power({d:g})"] = power_weight(grid, d)
    suite["power(0.5)"] = power_weight(grid, 0.5)
    suite["checkerboard(1,16)"] = checkerboard_weight(grid, 1.0, 16.0)
    x0 = 0.3 * grid.L
    suite["exp_bmo(-0.4)"] = exp_bmo_weight(grid, -0.4, log_symbol(grid, x0))
    return suite


# --------------------------------------------------------------- probes


def random_signs(grid, count, rng):
    return [GridFunction(grid, rng.choice([-1.0, 1.0], size=grid.shape)) for _ in range(count)]


def dyadic_indicators(grid, count, rng=None):
    """Indicators of base-lattice cubes, from coarse to fine, cycling through positions."""
    out = []
    level = 0
    while len(out) < count and level <= grid.m:
        s = grid.N >> level
        k = 1 << level
        picks = range(k**grid.n) if rng is None else rng.permutation(k**grid.n)
        for c in list(picks)[: max(1, count // (grid.m + 1))]:
            idx = np.unravel_index(int(c), (k,) * grid.n)
            v = np.zeros(grid.shape)
            v[tuple(slice(i * s, (i + 1) * s) for i in idx)] = 1.0
            out.append(GridFunction(grid, v))
            if len(out) == count:
                break
        level += 1
    return out


def modulated_bumps(grid, count, rng):
    """Smooth bumps times oscillating factors at random centres, widths and frequencies."""
    X = grid.mesh()
    out = []
    for _ in range(count):
        c = rng.uniform(-0.6, 0.6, size=grid.n) * grid.L
        width = rng.uniform(0.05, 0.4) * grid.L
        freq = rng.uniform(0.0, 12.0) / grid.L
        r2 = sum((Xi - ci) ** 2 for Xi, ci in zip(X, c))
        phase = sum(X)
        out.append(GridFunction(grid, np.exp(-r2 / (2 * width**2)) * np.cos(freq * phase)))
    return out


def haar_differences(grid, count):
    """Haar functions of base-lattice cubes (split along the first axis)."""
    out = []
    for level in range(grid.m):
        s = grid.N >> level
        v = np.zeros(grid.shape)
        v[: s // 2] = 1.0
        v[s // 2 : s] = -1.0
        if grid.n == 2:
            v[:, s:] = 0.0
        out.append(GridFunction(grid, v))
        if len(out) == count:
            break
    return out


def single_cell(grid, cell=None):
    v = np.zeros(grid.shape)
    cell = tuple(s // 2 for s in grid.shape) if cell is None else cell
    v[cell] = 1.0
    return GridFunction(grid, v)


def probe_corpus(grid, rng, signs=32, indicators=16, bumps=8):
    """The default probe set for operator-norm lower estimates."""
    return (
        random_signs(grid, signs, rng)
        + dyadic_indicators(grid, indicators)
        + modulated_bumps(grid, bumps, rng)
    )


def weak_probes(grid, rng=None):
    """Probes for weak-type estimates: dyadic indicators, Haar differences, a single cell."""
    probes = dyadic_indicators(grid, 12) + haar_differences(grid, 4) + [single_cell(grid)]
    if rng is not None:
        probes += random_signs(grid, 2, rng)
    return probes


def random_triple(grid, seed, pieces=32, eps=None):
    """Seeded ``(b, f, g)`` defined independently of the resolution.

    ``f`` and ``g`` are piecewise constant on ``pieces`` equal intervals per
    axis and ``b`` is a clipped log-distance to a random point with floor
    ``eps`` (default ``L / 1024``), so grids of different ``m`` sample the
    same functions.
    """
    rng = np.random.default_rng(seed)
    k = min(pieces, grid.N)
    fa = rng.normal(size=(k,) * grid.n)
    ga = rng.normal(size=(k,) * grid.n)
    x0 = rng.uniform(-0.8, 0.8, size=grid.n) * grid.L
    eps = grid.L / 1024 if eps is None else eps
    rep = grid.N // k
    f, g = fa, ga
    for axis in range(grid.n):
        f = np.repeat(f, rep, axis=axis)
        g = np.repeat(g, rep, axis=axis)
    b = np.log(np.maximum(_radius(grid, x0), eps))
    return GridFunction(grid, b), GridFunction(grid, f), GridFunction(grid, g)
