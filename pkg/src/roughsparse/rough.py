"""Rough homogeneous singular integrals, commutators and grand maximal operators.

The operator is the convolution sum

    T f(x_i) = sum_{j != i} Omega((x_i - x_j)') / |x_i - x_j|**n * f(x_j) * h**n

over cell centres. The cell volume cancels the kernel scaling, so on every
grid the sum is a discrete convolution with ``K(d) = Omega(d') / |d|**n`` for
integer displacements ``d != 0``. Functions vanish outside the grid window.

Truncations ``T(f chi_{3Q})|_Q`` for all cubes of one tiling are evaluated in
one batched FFT over the ``3l``-windows around the cubes;
``T(f chi_{R^n \\ 3Q}) = T f - T(f chi_{3Q})`` then follows on ``Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import fftconvolve

from . import _scan
from .norms import GridFunction, maximal_fn

__all__ = [
    "OmegaKernel",
    "WeakTypeEstimate",
    "apply_t_omega",
    "apply_t_adjoint",
    "bilinear_grand_maximal",
    "commutator_adjoint_apply",
    "commutator_apply",
    "grand_maximal_p",
    "m_lambda",
    "outer_truncation",
    "weak_type_estimate",
]

MEAN_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class OmegaKernel:
    """Bounded mean-zero angular profile.

    For ``n = 1`` ``values`` is ``(Omega(+1), Omega(-1))``. For ``n = 2`` it is
    piecewise constant on ``len(values)`` equal arcs, arc ``i`` covering angles
    ``[2 pi i / k, 2 pi (i + 1) / k)`` measured from the first axis towards the
    second; ``k`` must be even so that ``Omega(-y')`` is again of this form.
    """

    n: int
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if self.n not in (1, 2):
            raise ValueError(f"unsupported dimension n={self.n}")
        if self.n == 1 and len(vals) != 2:
            raise ValueError("a 1D kernel needs exactly the two values Omega(+1), Omega(-1)")
        if self.n == 2 and (len(vals) < 2 or len(vals) % 2):
            raise ValueError("a 2D kernel needs an even number of arcs")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("kernel values must be finite")
        scale = max(1.0, max(abs(v) for v in vals))
        if abs(math.fsum(vals)) > MEAN_ZERO_TOL * scale * len(vals):
            raise ValueError("Omega must have mean zero on the sphere")

    @classmethod
    def hilbert(cls, a=1.0):
        """1D kernel ``Omega(+-1) = +-a`` (a multiple of the Hilbert kernel)."""
        return cls(1, (a, -a))

    @classmethod
    def arcs(cls, values):
        return cls(2, tuple(values))

    @classmethod
    def alternating(cls, k=16, a=1.0):
        """2D rough profile alternating ``+-a`` over ``k`` arcs."""
        return cls(2, tuple(a if i % 2 == 0 else -a for i in range(k)))

    @classmethod
    def from_config(cls, spec):
        """``{dim: 1, value: a}`` or ``{dim: 2, arcs: [...]}``."""
        dim = int(spec.get("dim", 1))
        if dim == 1:
            return cls.hilbert(float(spec.get("value", 1.0)))
        if "arcs" not in spec:
            raise ValueError("2D kernel spec needs an 'arcs' list")
        return cls.arcs(spec["arcs"])

    @property
    def norm_inf(self):
        return max(abs(v) for v in self.values)

    def adjoint(self):
        """Kernel of the transpose, ``Omega(-y')``."""
        if self.n == 1:
            return OmegaKernel(1, (self.values[1], self.values[0]))
        k = len(self.values)
        return OmegaKernel(2, tuple(self.values[(i + k // 2) % k] for i in range(k)))

    def scaled(self, c):
        return OmegaKernel(self.n, tuple(c * v for v in self.values))

    def to_config(self):
        if self.n == 1:
            return {"dim": 1, "value": self.values[0]}
        return {"dim": 2, "arcs": list(self.values)}


def _arc_index(dx, dy, k):
    """Arc containing the direction of ``(dx, dy)``, with ``arc(-d) = arc(d) + k/2``."""
    upper = (dy > 0) | ((dy == 0) & (dx > 0))
    sx = np.where(upper, dx, -dx)
    sy = np.where(upper, dy, -dy)
    ang = np.arctan2(sy, sx)  # in [0, pi)
    idx = np.floor(ang * (k / (2 * np.pi))).astype(int)
    idx = np.clip(idx, 0, k // 2 - 1)
    return np.where(upper, idx, idx + k // 2)


@lru_cache(maxsize=64)
def kernel_array(omega, radius):
    """Kernel values ``K(d)`` for ``|d_i| <= radius``, centred; ``K(0) = 0``."""
    d = np.arange(-radius, radius + 1)
    if omega.n == 1:
        K = np.zeros(d.shape)
        K[d > 0] = omega.values[0] / d[d > 0]
        K[d < 0] = omega.values[1] / -d[d < 0]
    else:
        dx, dy = np.meshgrid(d, d, indexing="ij")
        r2 = (dx * dx + dy * dy).astype(float)
        arcs = _arc_index(dx, dy, len(omega.values))
        vals = np.asarray(omega.values)[arcs]
        with np.errstate(divide="ignore", invalid="ignore"):
            K = np.where(r2 > 0, vals / r2, 0.0)
    K.setflags(write=False)
    return K


def _check_kernel(omega, grid):
    if not isinstance(omega, OmegaKernel):
        raise TypeError("expected an OmegaKernel")
    if omega.n != grid.n:
        raise ValueError(f"kernel dimension {omega.n} does not match grid dimension {grid.n}")


def _convolve_same(values, omega):
    N = values.shape[0]
    K = kernel_array(omega, N - 1)
    full = fftconvolve(values, K, mode="full")
    sl = tuple(slice(N - 1, 2 * N - 1) for _ in range(values.ndim))
    return full[sl]


def apply_t_omega(f, omega):
    """``T_Omega f`` on the cells of ``f.grid``, principal value by omitting the diagonal."""
    _check_kernel(omega, f.grid)
    if not np.any(f.values):
        return GridFunction.zeros(f.grid)
    return GridFunction(f.grid, _convolve_same(f.values, omega))


def apply_t_adjoint(g, omega):
    """Transpose ``T_Omega^t g``, the operator with kernel ``Omega(-y')``."""
    return apply_t_omega(g, omega.adjoint())


def _is_constant(v):
    return v.size == 0 or float(v.max()) == float(v.min())


def commutator_apply(b, f, omega):
    """``[b, T] f = T(b f) - b T f``; exactly zero for constant ``b``."""
    if b.grid != f.grid:
        raise ValueError("b and f live on different grids")
    if _is_constant(b.values):
        _check_kernel(omega, f.grid)
        return GridFunction.zeros(f.grid)
    return apply_t_omega(b * f, omega) - b * apply_t_omega(f, omega)


def commutator_adjoint_apply(b, g, omega):
    """Transpose of ``[b, T]``, which equals ``-[b, T^t]``."""
    return -commutator_apply(b, g, omega.adjoint())


# ------------------------------------------------------- local truncations


def inner_truncation_blocks(values, tiling, omega):
    """``T(u chi_{3Q})`` on each cube ``Q`` of ``tiling``, as ``(ncubes, side**n)``.

    ``values`` is the full window array of ``u``; ``u`` vanishes outside it.
    """
    s = tiling.side
    n = values.ndim
    padded = np.pad(values, s)
    win = sliding_window_view(padded, (3 * s,) * n)
    sl = tuple(slice(st, st + c * s, s) for st, c in zip(tiling.start, tiling.counts))
    win = win[sl]
    K = kernel_array(omega, 2 * s - 1)
    axes = tuple(range(n, 2 * n))
    Kb = K.reshape((1,) * n + K.shape)
    if s <= 2:
        out = _direct_windows(win, K, s, n)
    else:
        full = fftconvolve(win, Kb, mode="full", axes=axes)
        cut = (slice(None),) * n + (slice(3 * s - 1, 4 * s - 1),) * n
        out = full[cut]
    return out.reshape(tiling.ncubes, s**n)


def _direct_windows(win, K, s, n):
    """Direct evaluation of the windowed truncation for tiny cubes."""
    c = K.shape[0] // 2
    if n == 1:
        out = np.zeros(win.shape[:1] + (s,))
        for u in range(s):
            for v in range(3 * s):
                d = (s + u) - v
                if d:
                    out[:, u] += K[c + d] * win[:, v]
        return out
    out = np.zeros(win.shape[:2] + (s, s))
    for u0 in range(s):
        for u1 in range(s):
            d0 = (s + u0) - np.arange(3 * s)
            d1 = (s + u1) - np.arange(3 * s)
            kk = K[np.ix_(c + d0, c + d1)]
            out[:, :, u0, u1] = np.tensordot(win, kk, axes=([2, 3], [0, 1]))
    return out


def outer_truncation_blocks(values, Tvalues, tiling, omega):
    """``T(u chi_{R^n \\ 3Q})`` on each cube ``Q`` of ``tiling``."""
    return tiling.blocks(Tvalues) - inner_truncation_blocks(values, tiling, omega)


def outer_truncation(f, Q, omega):
    """``T(f chi_{R^n \\ 3Q})`` restricted to one cube ``Q`` (as an array over its cells)."""
    g = f.grid
    Tf = apply_t_omega(f, omega).values
    if not Q.inside(g):
        raise ValueError(f"cube {Q.key} is not inside the grid window")
    lo3, hi3 = Q.triple()
    mask = np.zeros(g.shape, dtype=bool)
    sl = g.slices(lo3, hi3)
    if sl is not None:
        mask[sl] = True
    inner = _convolve_same(np.where(mask, f.values, 0.0), omega)
    return (Tf - inner)[g.slices(Q.lo, Q.hi)]


def _outer_scan(f, omega, reduce_fn, fill=0.0):
    g = f.grid
    _check_kernel(omega, g)
    out = np.full(g.shape, fill)
    if not np.any(f.values):
        return GridFunction(g, np.zeros(g.shape))
    v = f.values
    Tv = _convolve_same(v, omega)
    for t in _scan.grid_tilings(g):
        blocks = np.abs(outer_truncation_blocks(v, Tv, t, omega))
        t.accumulate_max(out, reduce_fn(blocks, t))
    return GridFunction(g, out)


def grand_maximal_p(f, p, omega):
    """``M_{p,T} f(x) = sup_{Q ∋ x} <T(f chi_{R^n \\ 3Q})>_{p,Q}``; ``p = inf`` gives the sup."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if math.isinf(p):
        return _outer_scan(f, omega, lambda a, t: a.max(axis=1))
    if p == 1:
        return _outer_scan(f, omega, lambda a, t: a.mean(axis=1))
    return _outer_scan(f, omega, lambda a, t: (a**p).mean(axis=1) ** (1.0 / p))


def bilinear_grand_maximal(f, g, omega):
    """``sup_{Q ∋ x} (1/|Q|) int_Q |T(f chi_{R^n \\ 3Q})| |g|``."""
    if f.grid != g.grid:
        raise ValueError("f and g live on different grids")
    ga = np.abs(g.values)
    if not np.any(ga):
        return GridFunction.zeros(f.grid)
    return _outer_scan(f, omega, lambda a, t: (a * t.blocks(ga)).mean(axis=1))


def rearrangement_rank(lam, ncells):
    """1-indexed rank ``ceil(lam * ncells)`` (at least 1) used for ``(h chi_Q)*(lam |Q|)``."""
    return max(1, math.ceil(lam * ncells - 1e-12))


def m_lambda(f, lam, omega):
    """``sup_{Q ∋ x} (T(f chi_{R^n \\ 3Q}) chi_Q)*(lam |Q|)`` with the rank convention above."""
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")

    def red(a, t):
        k = a.shape[1]
        rank = rearrangement_rank(lam, k)
        return np.partition(a, k - rank, axis=1)[:, k - rank]

    return _outer_scan(f, omega, red)


# ----------------------------------------------------------- weak type


@dataclass
class WeakTypeEstimate:
    q: float
    constant: float
    probes: int
    best_probe: int = -1

    def __post_init__(self):
        if self.constant < 0:
            raise ValueError("weak-type constant must be nonnegative")


def distribution_sup(values, cell_volume, q):
    """``sup_lam lam |{|v| > lam}|**(1/q)`` for a simple function, via order statistics."""
    v = np.sort(np.abs(np.ravel(values)))[::-1]
    k = np.arange(1, v.size + 1)
    return float(np.max(v * (k * cell_volume) ** (1.0 / q)))


def resolve_operator(op, omega=None, **params):
    """Map an operator tag to a callable on grid functions."""
    if callable(op):
        return op
    if op == "identity":
        return lambda f: f
    if omega is None:
        raise ValueError(f"operator {op!r} needs a kernel")
    if op == "t_omega":
        return lambda f: apply_t_omega(f, omega)
    if op == "m_p":
        return lambda f: grand_maximal_p(f, params["p"], omega)
    if op == "m_lambda":
        return lambda f: m_lambda(f, params["lam"], omega)
    if op == "m_t":
        return lambda f: grand_maximal_p(f, math.inf, omega)
    if op == "hl":
        return maximal_fn
    if op == "commutator":
        b = params["b"]
        return lambda f: commutator_apply(b, f, omega)
    raise ValueError(f"unknown operator tag {op!r}")


def weak_type_estimate(op, q, probes, omega=None, **params):
    """Lower estimate of the weak-``(q, q)`` norm: max over probes of the exact
    distributional supremum ``sup_lam lam |{|Op f| > lam}|**(1/q) / ||f||_q``."""
    probes = list(probes)
    if not probes:
        raise ValueError("empty probe set")
    fn = resolve_operator(op, omega, **params)
    best, arg = 0.0, -1
    for i, f in enumerate(probes):
        nf = f.lp_norm(q)
        if nf == 0:
            raise ValueError(f"probe {i} vanishes")
        val = distribution_sup(fn(f).values, f.grid.cell_volume, q) / nf
        if val > best:
            best, arg = val, i
    return WeakTypeEstimate(q=float(q), constant=best, probes=len(probes), best_probe=arg)
