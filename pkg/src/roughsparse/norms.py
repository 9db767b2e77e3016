"""Grid functions, weights, Orlicz averages, maximal functions and weight characteristics.

Every supremum over cubes runs over the cube family of the grid: all cubes
of the ``3**n`` translated lattices, at every level, that lie inside the grid
window. Constants are returned as :class:`Constant` pairs carrying the
maximising cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import _scan
from .lattice import Cube, Grid
from .reports import VerificationReport

__all__ = [
    "Constant",
    "GridFunction",
    "Weight",
    "WeightConstants",
    "YoungFunction",
    "Power",
    "LlogL",
    "ExpL",
    "parse_young",
    "ainf_constant",
    "ap_constant",
    "bmo_norm",
    "cube_profile",
    "default_tau",
    "geo_mean",
    "local_avg",
    "m_r_weight",
    "maximal_fn",
    "mixed_one_sup_constant",
    "orlicz_local_norm",
    "reverse_holder_check",
    "weight_constants",
]

ORLICZ_RTOL = 1e-10
ORLICZ_MAXITER = 200


# --------------------------------------------------------------------------- data


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real cell values on a :class:`~roughsparse.lattice.Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            if v.size != self.grid.ncells:
                raise ValueError(f"expected {self.grid.ncells} values, got {v.size}")
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, grid, fn):
        """Sample ``fn`` at cell centres; ``fn`` receives ``n`` coordinate arrays."""
        return cls(grid, np.broadcast_to(fn(*grid.mesh()), grid.shape))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def zeros(cls, grid):
        return cls.constant(grid, 0.0)

    def _new(self, values):
        return GridFunction(self.grid, values)

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self._new(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._new(self.values - self._other(other))

    def __rsub__(self, other):
        return self._new(self._other(other) - self.values)

    def __mul__(self, other):
        return self._new(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._new(self.values / self._other(other))

    def __neg__(self):
        return self._new(-self.values)

    def __abs__(self):
        return self._new(np.abs(self.values))

    def __pow__(self, e):
        return self._new(self.values**e)

    def integral(self):
        return float(self.values.sum() * self.grid.cell_volume)

    def lp_norm(self, p, weight=None):
        """``||h||_{L^p(w)}``; ``p = inf`` gives the max of ``|h|``."""
        a = np.abs(self.values)
        if math.isinf(p):
            return float(a.max())
        mu = self.grid.cell_volume if weight is None else _vals(weight) * self.grid.cell_volume
        return float(np.sum(a**p * mu) ** (1.0 / p))

    def block(self, Q):
        return self.values[_cube_slices(self.grid, Q)]

    def extend(self, grid, mode="zero"):
        """Embed into a concentric larger grid, by zeros or by edge values."""
        return GridFunction(grid, _embed(self.values, self.grid, grid, mode))

    def restrict(self, grid):
        """Restriction to a concentric smaller grid window."""
        k = (grid.offset - self.grid.offset)
        sl = (slice(k, k + grid.N),) * self.grid.n
        return GridFunction(grid, self.values[sl])


class Weight(GridFunction):
    """Strictly positive grid function."""

    def __post_init__(self):
        super().__post_init__()
        if self.values.min() <= 0:
            raise ValueError("weight must be strictly positive")

    def _new(self, values):
        return GridFunction(self.grid, values)

    @classmethod
    def from_function(cls, h):
        return cls(h.grid, h.values)

    def scaled(self, lam):
        return Weight(self.grid, self.values * float(lam))

    def power(self, e):
        return Weight(self.grid, self.values**e)

    def extend(self, grid, mode="edge"):
        return Weight(grid, _embed(self.values, self.grid, grid, mode))

    def restrict(self, grid):
        return Weight.from_function(GridFunction.restrict(self, grid))

    def measure(self, Q=None):
        """``w(Q)``; total mass of the grid window when ``Q`` is None."""
        v = self.values if Q is None else self.block(Q)
        return float(v.sum() * self.grid.cell_volume)


def _vals(h):
    return h.values if isinstance(h, GridFunction) else np.asarray(h, dtype=float)


def _embed(values, src, dst, mode):
    if dst.n != src.n or dst.m != src.m or dst.L != src.L or dst.ext < src.ext:
        raise ValueError("target grid must be a concentric extension with the same cells")
    pad = src.offset - dst.offset
    if pad == 0:
        return np.array(values, dtype=float)
    if mode == "zero":
        return np.pad(values, pad, mode="constant")
    if mode == "edge":
        return np.pad(values, pad, mode="edge")
    raise ValueError(f"unknown extension mode {mode!r}")


def _cube_slices(grid, Q):
    if Q.m != grid.m or Q.n != grid.n:
        raise ValueError(f"cube {Q.key} does not belong to this grid")
    if not Q.inside(grid):
        raise ValueError(f"cube {Q.key} is empty or not inside the grid window")
    return grid.slices(Q.lo, Q.hi)


class Constant(NamedTuple):
    value: float
    cube: Cube | None


# ------------------------------------------------------------- Young functions


def _llogl_inverse_one():
    return brentq(lambda t: t * math.log(math.e + t) - 1.0, 1e-6, 1.0, xtol=1e-15)


@dataclass(frozen=True)
class YoungFunction:
    """One of ``t**r`` (tag ``power``), ``t log(e + t)`` (``llogl``) or ``e**t - 1`` (``expl``)."""

    tag: str
    r: float = 1.0

    def __post_init__(self):
        if self.tag not in ("power", "llogl", "expl"):
            raise ValueError(f"unknown Young function {self.tag!r}")
        if self.tag == "power" and not self.r >= 1:
            raise ValueError(f"power Young function needs r >= 1, got {self.r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.tag == "power":
            return t**self.r
        if self.tag == "llogl":
            return t * np.log(np.e + t)
        with np.errstate(over="ignore"):
            return np.expm1(t)

    @property
    def inverse_at_one(self):
        """``t`` with ``psi(t) = 1``."""
        if self.tag == "power":
            return 1.0
        if self.tag == "expl":
            return math.log(2.0)
        return _LLOGL_ONE

    @property
    def name(self):
        return f"Power({self.r:g})" if self.tag == "power" else {"llogl": "LlogL", "expl": "ExpL"}[self.tag]

    def __str__(self):
        return self.name


_LLOGL_ONE = _llogl_inverse_one()


def Power(r=1.0):
    return YoungFunction("power", float(r))


def LlogL():
    return YoungFunction("llogl")


def ExpL():
    return YoungFunction("expl")


def parse_young(spec):
    """Parse ``"power:2"``, ``"llogl"``, ``"expl"`` or a :class:`YoungFunction`."""
    if isinstance(spec, YoungFunction):
        return spec
    s = str(spec).strip().lower()
    if s.startswith("power"):
        _, _, r = s.partition(":")
        return Power(float(r) if r else 1.0)
    if s in ("llogl", "l log l"):
        return LlogL()
    if s in ("expl", "exp l"):
        return ExpL()
    raise ValueError(f"unknown Young function {spec!r}")


def orlicz_rows(a, psi, mu=None):
    """Orlicz norms of each row of ``|a|`` for the averaging measure ``mu``.

    ``mu`` (same shape as ``a``) holds nonnegative cell masses; Lebesgue
    averaging is used when it is None. Rows that vanish give 0.
    """
    a = np.abs(np.asarray(a, dtype=float))
    if a.ndim == 1:
        a = a[None, :]
    if mu is None:
        wts = None
        mean = a.mean(axis=1)
    else:
        mu = np.asarray(mu, dtype=float).reshape(a.shape)
        tot = mu.sum(axis=1)
        if np.any(tot <= 0):
            raise ValueError("averaging measure vanishes on a cube")
        wts = mu / tot[:, None]
        mean = (a * wts).sum(axis=1)

    def avg(x):
        return x.mean(axis=1) if wts is None else (x * wts).sum(axis=1)

    if psi.tag == "power":
        if psi.r == 1.0:
            return mean
        return avg(a**psi.r) ** (1.0 / psi.r)

    top = a.max(axis=1)
    out = np.zeros(a.shape[0])
    live = top > 0
    if not live.any():
        return out
    a, top, mean = a[live], top[live], mean[live]
    loc = None if wts is None else wts[live]
    c = psi.inverse_at_one
    # Jensen gives avg psi(a/lo) >= 1 >= avg psi(a/hi)
    lo = np.log(mean / c)
    hi = np.log(top / c)
    for _ in range(ORLICZ_MAXITER):
        if np.all(hi - lo <= ORLICZ_RTOL * 0.5):
            break
        mid = 0.5 * (lo + hi)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = psi(a / np.exp(mid)[:, None])
            F = vals.mean(axis=1) if loc is None else (vals * loc).sum(axis=1)
        above = F > 1.0
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    out[live] = np.exp(hi)
    return out


# ------------------------------------------------------------------ local ops


def local_avg(h, Q, alpha=1.0, mu=None):
    """``((1/mu(Q)) int_Q |h|**alpha dmu)**(1/alpha)``; Lebesgue when ``mu`` is None."""
    if alpha < 1:
        raise ValueError(f"exponent alpha must be >= 1, got {alpha}")
    a = np.abs(h.block(Q)).ravel()
    m = None if mu is None else mu.block(Q).ravel()
    return float(orlicz_rows(a, Power(alpha), m)[0])


def orlicz_local_norm(h, Q, psi, mu=None):
    """Local Luxemburg norm ``inf{lam > 0 : avg_Q psi(|h|/lam) <= 1}``."""
    a = h.block(Q).ravel()
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite values")
    m = None if mu is None else mu.block(Q).ravel()
    return float(orlicz_rows(a, psi, m)[0])


def geo_mean(w, Q):
    """``exp`` of the Lebesgue average of ``log w`` over ``Q``."""
    v = w.block(Q)
    if v.min() <= 0:
        raise ValueError("geometric mean needs a strictly positive weight")
    return float(np.exp(np.log(v).mean()))


def cube_norms(values, grid, tiling, psi, mu=None):
    """Per-cube Orlicz norms of ``values`` over one tiling."""
    blocks = tiling.blocks(values)
    m = None if mu is None else tiling.blocks(mu)
    return orlicz_rows(blocks, psi, m)


def maximal_fn(h, psi=None):
    """Maximal function ``M_psi h`` over the cube family; ``psi`` defaults to ``Power(1)``."""
    psi = Power(1.0) if psi is None else psi
    g = h.grid
    a = np.abs(h.values)
    out = _scan.maximal_over_cubes(g, lambda t: cube_norms(a, g, t, psi), fill=0.0)
    return GridFunction(g, out)


def m_r_weight(w, r):
    """``(M(w**r))**(1/r)``."""
    if not r > 1:
        raise ValueError(f"r must exceed 1, got {r}")
    Mw = maximal_fn(GridFunction(w.grid, w.values**r))
    return Weight(w.grid, Mw.values ** (1.0 / r))


def bmo_norm(b, return_cube=False):
    """Largest mean oscillation ``(1/|Q|) int_Q |b - b_Q|`` over the cube family."""
    g = b.grid
    v = b.values

    def osc(t):
        blk = t.blocks(v)
        return np.abs(blk - blk.mean(axis=1, keepdims=True)).mean(axis=1)

    val, Q = _scan.scan_max(g, osc)
    return Constant(val, Q) if return_cube else val


# ------------------------------------------------------------ weight constants


def _check_weight(w):
    if not isinstance(w, GridFunction):
        raise TypeError("expected a Weight")
    if w.values.min() <= 0:
        raise ValueError("weight must be strictly positive")


def _cell_cube(grid, flat_index):
    cell = np.unravel_index(flat_index, grid.shape)
    return Cube(0, grid.m, tuple(int(c) + grid.offset for c in cell), grid.m)


def ap_constant(w, p):
    """``[w]_{A_p}`` over the cube family; ``p = 1`` uses the cellwise max of ``Mw / w``."""
    _check_weight(w)
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    g = w.grid
    v = w.values
    if p == 1:
        ratio = maximal_fn(w).values / v
        k = _scan.argmax_first(ratio.ravel())
        return Constant(float(ratio.ravel()[k]), _cell_cube(g, k))
    e = 1.0 / (1.0 - p)
    dual = v**e

    def ratio(t):
        return t.blocks(v).mean(axis=1) * t.blocks(dual).mean(axis=1) ** (p - 1.0)

    return Constant(*_scan.scan_max(g, ratio))


def _axis_bound_arrays(grid):
    tl = _scan.grid_tilings(grid)
    return tl, [t.axis_bounds(grid.N) for t in tl]


def ainf_constant(w):
    """Fujii-Wilson constant ``sup_Q w(Q)**-1 int_Q M(w chi_Q)``, exact over the cube family.

    For a cube ``Q`` and a cell ``x`` in ``Q`` the relevant competitors are the
    family cubes ``P`` containing ``x``; ``int_{P cap Q} w`` is a rectangle sum,
    so each pair of tilings costs one vectorised pass over the cells.
    """
    _check_weight(w)
    g = w.grid
    v = w.values
    n, N = g.n, g.N
    S = _scan.box_sum_table(v)
    tl, bounds = _axis_bound_arrays(g)

    def per_tiling(i):
        t1, b1 = tl[i], bounds[i]
        local = np.zeros(g.shape)
        for t2, b2 in zip(tl, bounds):
            rect = []
            valid = None
            for (ql, qh, qv), (pl, ph, pv) in zip(b1, b2):
                ok = qv & pv
                lo = np.clip(np.maximum(ql, pl), 0, N)
                hi = np.clip(np.minimum(qh, ph), 0, N)
                rect.append((lo, hi))
                valid = ok if valid is None else valid[:, None] & ok[None, :]
            vals = np.where(valid, _scan.box_sums(S, rect), 0.0) / float(t2.side**n)
            np.maximum(local, vals, out=local)
        return t1.blocks(local).sum(axis=1) / t1.blocks(v).sum(axis=1)

    best_vals, best_idx = [], []
    for i in range(len(tl)):
        r = per_tiling(i)
        k = _scan.argmax_first(r)
        best_vals.append(r[k])
        best_idx.append(k)
    k = _scan.argmax_first(best_vals)
    return Constant(float(best_vals[k]), tl[k].cube(best_idx[k], g.offset, g.m))


def default_tau(n):
    return 11.0 * 2**n


def reverse_holder_check(w, tau=None, ainf=None):
    """Check ``<w**r_w>_Q**(1/r_w) <= 2 <w>_Q`` on every cube, ``r_w = 1 + 1/(tau [w]_{A_inf})``."""
    _check_weight(w)
    g = w.grid
    tau = default_tau(g.n) if tau is None else float(tau)
    if not tau > 0:
        raise ValueError("tau must be positive")
    a_inf = ainf_constant(w).value if ainf is None else float(ainf)
    r = 1.0 + 1.0 / (tau * a_inf)
    v = w.values
    vr = v**r

    def ratio(t):
        return t.blocks(vr).mean(axis=1) ** (1.0 / r) / t.blocks(v).mean(axis=1)

    worst, Q = _scan.scan_max(g, ratio)
    return VerificationReport(
        name="reverse_holder",
        lhs=worst,
        rhs=2.0,
        passed=worst <= 2.0 * (1 + 1e-12),
        params={"tau": tau, "r_w": r, "a_inf": a_inf},
        details={"cube": Q.key},
    )


def _check_pq(p, q):
    if not 1 < q < p < math.inf:
        raise ValueError(f"mixed constant needs 1 < q < p < inf, got q={q}, p={p}")


def _mixed_ratio(t, v, sigma, logv, p, q):
    pp = p / (p - 1.0)
    avg = t.blocks(v).mean(axis=1)
    sig = t.blocks(sigma).mean(axis=1)
    geo = np.exp(t.blocks(logv).mean(axis=1))
    return avg * sig ** ((q - 1.0) / p) * geo ** (-1.0 / pp)


def mixed_one_sup_constant(w, p, q):
    """``sup_Q <w>_Q <w**(1/(1-q))>_Q**((q-1)/p) exp(<log w**-1>_Q)**(1/p')``."""
    _check_weight(w)
    _check_pq(p, q)
    v = w.values
    sigma = v ** (1.0 / (1.0 - q))
    logv = np.log(v)
    return Constant(*_scan.scan_max(w.grid, lambda t: _mixed_ratio(t, v, sigma, logv, p, q)))


def cube_profile(w, p, q):
    """Per-cube ``A_q`` and mixed ratios over the whole cube family (scan order)."""
    _check_weight(w)
    _check_pq(p, q)
    v = w.values
    sigma = v ** (1.0 / (1.0 - q))
    logv = np.log(v)
    aq = _scan.scan_all(
        w.grid, lambda t: t.blocks(v).mean(axis=1) * t.blocks(sigma).mean(axis=1) ** (q - 1.0)
    )
    mixed = _scan.scan_all(w.grid, lambda t: _mixed_ratio(t, v, sigma, logv, p, q))
    return {"aq": aq, "mixed": mixed}


@dataclass
class WeightConstants:
    p: float
    q: float | None
    a_p: float
    a_1: float
    a_inf: float
    mixed: float
    rh_exponent: float
    cube_argmax: dict = field(default_factory=dict)

    def row(self):
        out = {"p": self.p, "q": self.q, "a_p": self.a_p, "a_1": self.a_1, "a_inf": self.a_inf,
               "mixed": self.mixed, "r_w": self.rh_exponent}
        for k, Q in self.cube_argmax.items():
            out[f"argmax_{k}"] = Q.key if Q is not None else ""
        return out


def weight_constants(w, p=2.0, q=None, tau=None):
    """All characteristics of ``w`` at once; ``mixed`` is nan unless ``1 < q < p``."""
    ap = ap_constant(w, p)
    a1 = ap_constant(w, 1)
    ai = ainf_constant(w)
    tau = default_tau(w.grid.n) if tau is None else tau
    if q is not None:
        mx = mixed_one_sup_constant(w, p, q)
    else:
        mx = Constant(math.nan, None)
    return WeightConstants(
        p=p,
        q=q,
        a_p=ap.value,
        a_1=a1.value,
        a_inf=ai.value,
        mixed=mx.value,
        rh_exponent=1.0 + 1.0 / (tau * ai.value),
        cube_argmax={"a_p": ap.cube, "a_1": a1.cube, "a_inf": ai.cube, "mixed": mx.cube},
    )
