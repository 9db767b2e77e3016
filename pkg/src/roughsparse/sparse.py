"""Calderon-Zygmund stopping cubes, sparse domination of ``[b, T]`` and sparse-form checks.

The domination algorithm works on the base root cube ``Q0``: it sizes the four
exceptional sets by quantiles of the normalised comparison functions, selects
stopping cubes, and recurses. Each visited cube ``Q`` joins the family ``F``
together with its local bound

    int_Q |[b, T](f chi_{3Q})| |g|
        <= sum_j int_{P_j} |[b, T](f chi_{3P_j})| |g| + A_Q (t_Q + t*_Q),

which is asserted numerically. The cubes are then lifted to their covering
cubes ``R_Q`` in the translated lattices.

Functions vanish outside the base domain. The constant ``b_R`` subtracted on
a cube ``R`` is the mean of ``b`` over ``R`` intersected with the base domain;
``b`` only ever meets ``f`` or ``g``, so its values outside the domain never
enter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _scan
from .lattice import Cube, Grid, SparseFamily, cube_containing, shifted_parent, verify_sparse
from .norms import GridFunction, Power, ainf_constant, maximal_fn, orlicz_rows
from .reports import VerificationReport
from .rough import OmegaKernel, commutator_apply, inner_truncation_blocks

__all__ = [
    "BilinearFormParams",
    "DominationResult",
    "InvariantError",
    "bilinear_form",
    "carleson_verify",
    "cz_decompose",
    "family_grid",
    "lemma23_suite",
    "lemma23_verify",
    "local_grand_maximal",
    "sparse_dominate_commutator",
    "sparse_operator_BS",
]

#: relative slack for the asserted per-node bounds
NODE_RTOL = 1e-9


class InvariantError(AssertionError):
    """A numerical invariant of the construction failed."""


# ------------------------------------------------------------------ helpers


def _mean(a):
    """Mean that is exact for constant arrays."""
    a = np.asarray(a)
    if a.size and a.max() == a.min():
        return float(a.flat[0])
    return float(a.mean())


def _clipped(grid, lo, hi):
    return grid.slices(lo, hi)


def _box_integral_abs(values, grid, lo, hi, power=1.0):
    """``int_{box cap grid} |v|**power`` in cell units."""
    sl = _clipped(grid, lo, hi)
    if sl is None:
        return 0.0
    a = np.abs(values[sl])
    return float(np.sum(a if power == 1.0 else a**power))


def _box_mean(values, grid, lo, hi):
    sl = _clipped(grid, lo, hi)
    if sl is None:
        return 0.0
    return _mean(values[sl])


def family_grid(grid, cubes):
    """Smallest concentric extension of ``grid`` containing every cube."""
    k = 0
    cubes = list(cubes)
    while not all(Q.inside(grid.extended(k)) for Q in cubes):
        k += 1
        if k > 12:
            raise ValueError("family extends too far beyond the grid")
    return grid.extended(k)


def _local_array(values, grid, Q):
    """Copy of ``values`` over ``3Q`` (zeros outside the grid), ``Q`` at offset ``side``."""
    s = Q.side
    lo3, hi3 = Q.triple()
    out = np.zeros((3 * s,) * grid.n)
    sl = grid.slices(lo3, hi3)
    if sl is not None:
        dst = tuple(
            slice(a.start + grid.offset - l, a.stop + grid.offset - l) for a, l in zip(sl, lo3)
        )
        out[dst] = values[sl]
    return out


def _sub_tiling(Q, depth, start):
    k = 1 << depth
    n = Q.n
    return _scan.Tiling(Q.lattice_id, Q.level + depth, Q.side >> depth, (start,) * n, (k,) * n)


# -------------------------------------------------------------- CZ decomposition


def _as_mask(indicator, grid):
    if isinstance(indicator, GridFunction):
        return indicator.grid, indicator.values != 0
    if grid is None:
        raise ValueError("a raw indicator array needs its grid")
    mask = np.asarray(indicator).astype(bool)
    if mask.shape != grid.shape:
        raise ValueError("indicator shape does not match the grid")
    return grid, mask


def cz_decompose(indicator, Q0, height, grid=None):
    """Maximal dyadic subcubes ``P`` of ``Q0`` with ``|P cap Omega| > height |P|``.

    ``indicator`` marks the cells of ``Omega`` (a GridFunction, or a boolean
    array together with ``grid``). The scan is top-down and stops at the first
    crossing, so no selected cube has a selected ancestor.
    """
    grid, mask = _as_mask(indicator, grid)
    if not 0 < height < 1:
        raise ValueError(f"height must lie in (0, 1), got {height}")
    sl = grid.slices(Q0.lo, Q0.hi)
    if not Q0.inside(grid):
        raise ValueError(f"cube {Q0.key} is not inside the grid window")
    total = int(mask.sum())
    block = mask[sl]
    if int(block.sum()) != total:
        raise ValueError("the set is not contained in Q0")
    return _cz_block(block, Q0, height)


def _cz_block(block, Q0, height):
    n = Q0.n
    s0 = Q0.side
    out = []
    if not block.any():
        return out
    active = np.ones((1,) * n, dtype=bool)
    depth = 0
    while True:
        k = 1 << depth
        s = s0 >> depth
        if n == 1:
            counts = block.reshape(k, s).sum(axis=1)
        else:
            counts = block.reshape(k, s, k, s).sum(axis=(1, 3))
        sel = active & (counts > height * s**n)
        for idx in zip(*np.nonzero(sel)):
            cell = tuple(a + int(i) * s for a, i in zip(Q0.lo, idx))
            out.append(cube_containing(Q0.lattice_id, Q0.level + depth, cell, Q0.m))
        active = active & ~sel & (counts > 0)
        if s == 1 or not active.any():
            break
        for axis in range(n):
            active = np.repeat(active, 2, axis=axis)
        depth += 1
    return sorted(out)


# ------------------------------------------------------- local grand maximal


def _local_gm_arrays(U, V, Q0, omega):
    """``M_{T,Q0}(u, v)`` on ``Q0`` from local ``3Q0`` arrays ``U`` and ``V``.

    Returns ``(M, F0)`` where ``F0 = T(u chi_{3Q0})`` on ``Q0``.
    """
    s0 = Q0.side
    n = Q0.n
    t0 = _sub_tiling(Q0, 0, s0)
    F0 = inner_truncation_blocks(U, t0, omega).reshape((s0,) * n)
    F0full = np.zeros(U.shape)
    F0full[(slice(s0, 2 * s0),) * n] = F0
    out = np.zeros((s0,) * n)
    vabs = np.abs(V)
    if not vabs[(slice(s0, 2 * s0),) * n].any():
        return out, F0
    depth = 1
    while (s0 >> depth) >= 1:
        t = _sub_tiling(Q0, depth, s0)
        diff = np.abs(t.blocks(F0full) - inner_truncation_blocks(U, t, omega))
        vals = (diff * t.blocks(vabs)).mean(axis=1)
        np.maximum(out, t.expand(vals), out=out)
        depth += 1
    return out, F0


def local_grand_maximal(f, g, Q0, omega):
    """``M_{T,Q0}(f, g)(x) = max_{Q ∋ x, Q in D(Q0)} (1/|Q|) int_Q |T(f chi_{3Q0 \\ 3Q})| |g|``.

    Returned as an array over the cells of ``Q0``.
    """
    grid = f.grid
    if not Q0.inside(grid):
        raise ValueError(f"cube {Q0.key} is not inside the grid window")
    U = _local_array(f.values, grid, Q0)
    V = _local_array(g.values, grid, Q0)
    return _local_gm_arrays(U, V, Q0, omega)[0]


# ------------------------------------------------------------ domination


@dataclass
class BilinearFormParams:
    r: float = 1.0
    s: float = 2.0
    adjoint: bool = False

    def __post_init__(self):
        if not (self.r >= 1 and self.s >= 1):
            raise ValueError("form exponents must be >= 1")


def _avg_abs(values, grid, lo, hi, r, volume_cells):
    """``<h>_{r, box}`` with ``h`` zero outside the grid."""
    return (_box_integral_abs(values, grid, lo, hi, r) / volume_cells) ** (1.0 / r)


def _form_terms(Q, grid, b, f, g, r, s, center=None):
    """``(t, t*)`` for one cube: ``<f>_r <(b - c) g>_s |Q|`` and ``<(b - c) f>_r <g>_s |Q|``."""
    lo, hi = Q.lo, Q.hi
    c = _box_mean(b, grid, lo, hi) if center is None else center
    sl = _clipped(grid, lo, hi)
    if sl is None:
        return 0.0, 0.0
    vol = Q.ncells
    beta = b[sl] - c
    ff, gg = f[sl], g[sl]
    fa = (np.sum(np.abs(ff) ** r) / vol) ** (1 / r)
    bga = (np.sum(np.abs(beta * gg) ** s) / vol) ** (1 / s)
    bfa = (np.sum(np.abs(beta * ff) ** r) / vol) ** (1 / r)
    ga = (np.sum(np.abs(gg) ** s) / vol) ** (1 / s)
    meas = Q.measure(grid)
    return float(fa * bga * meas), float(bfa * ga * meas)


def bilinear_form(S, params, b, f, g):
    """``sum_Q <f>_{r,Q} <(b - b_Q) g>_{s,Q} |Q|``, or the adjoint form with the roles swapped."""
    grid = f.grid
    total = 0.0
    for Q in S:
        t, ts = _form_terms(Q, grid, b.values, f.values, g.values, params.r, params.s)
        total += ts if params.adjoint else t
    return total


@dataclass
class DominationResult:
    """Outcome of :func:`sparse_dominate_commutator`.

    ``K_empirical`` is the largest summed multiplier ``sum_{Q -> R} A_Q c_Q``
    over lifted cubes ``R``, so ``lhs <= K_empirical * forms`` is exact;
    ``A_max`` is the largest node constant ``A`` on its own.
    """

    grid: Grid
    omega: OmegaKernel
    s: float
    families: list
    base_family: SparseFamily
    K_empirical: float
    A_max: float
    recursion_depth: int
    lhs: float
    rhs: float
    forms: float
    rhs_weighted: float
    nodes: list = field(default_factory=list)
    lift: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.lhs <= self.rhs * (1 + NODE_RTOL) + 1e-300

    def node_rows(self):
        return [dict(r) for r in self.nodes]

    def family_rows(self):
        rows = []
        for F in self.families:
            for Q in F.cubes:
                rows.append({"lattice": F.lattice_id, "cube": Q.key, "eta": F.eta})
        return rows

    def to_dict(self):
        return {
            "grid": {"n": self.grid.n, "L": self.grid.L, "m": self.grid.m},
            "omega": self.omega.to_config(),
            "s": self.s,
            "K_empirical": self.K_empirical,
            "A_max": self.A_max,
            "recursion_depth": self.recursion_depth,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "forms": self.forms,
            "rhs_weighted": self.rhs_weighted,
            "base_family": self.base_family.keys(),
            "families": {str(F.lattice_id): F.keys() for F in self.families},
            "eta": self.families[0].eta if self.families else None,
            "lift": {Q.key: R.key for Q, R in self.lift.items()},
            "nodes": self.nodes,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, default=float)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        gd = d["grid"]
        grid = Grid(gd["n"], gd["L"], gd["m"])
        m = grid.m
        eta = d["eta"] if d["eta"] is not None else 1.0 / (2 * 9**grid.n)
        fams = [
            SparseFamily(int(j), tuple(Cube.from_key(k, m) for k in keys), eta)
            for j, keys in sorted(d["families"].items(), key=lambda kv: int(kv[0]))
        ]
        base = SparseFamily(0, tuple(Cube.from_key(k, m) for k in d["base_family"]), 0.5)
        lift = {Cube.from_key(a, m): Cube.from_key(b, m) for a, b in d["lift"].items()}
        return cls(
            grid=grid,
            omega=OmegaKernel.from_config(d["omega"]),
            s=d["s"],
            families=fams,
            base_family=base,
            K_empirical=d["K_empirical"],
            A_max=d["A_max"],
            recursion_depth=d["recursion_depth"],
            lhs=d["lhs"],
            rhs=d["rhs"],
            forms=d["forms"],
            rhs_weighted=d["rhs_weighted"],
            nodes=d["nodes"],
            lift=lift,
        )

    def reverify(self, b, f, g):
        """Recompute both sides from the stored families and re-check sparseness.

        Returns a :class:`VerificationReport`; ``passed`` requires every family
        to be sparse and ``lhs <= K_empirical * forms``.
        """
        sparse_ok = all(verify_sparse(F)[0] for F in self.families)
        base_ok = verify_sparse(self.base_family)[0]
        lhs = abs(float(np.sum(commutator_apply(b, f, self.omega).values * g.values))
                  * self.grid.cell_volume)
        forms = 0.0
        for F in self.families:
            for Q in F.cubes:
                t, ts = _form_terms(Q, self.grid, b.values, f.values, g.values, 1.0, self.s)
                forms += t + ts
        rhs = self.K_empirical * forms
        ok = sparse_ok and base_ok and lhs <= rhs * (1 + NODE_RTOL) + 1e-300
        return VerificationReport(
            name="domination_reverify",
            lhs=lhs,
            rhs=rhs,
            passed=ok,
            params={"s": self.s, "K": self.K_empirical},
            details={"sparse": sparse_ok, "base_sparse": base_ok},
        )


def _quantile_threshold(phi, k):
    """Value with at most ``k`` entries strictly above it (the ``(k+1)``-th largest)."""
    flat = np.ravel(phi)
    if k <= 0:
        return float(flat.max())
    idx = flat.size - 1 - k
    return float(np.partition(flat, idx)[idx])


def _node(Q0, grid, bv, fv, gv, omega, s):
    """Thresholds, exceptional set and stopping cubes for one recursion node."""
    n = grid.n
    s0 = Q0.side
    cells = Q0.ncells
    R = shifted_parent(Q0, grid)
    c = _box_mean(bv, grid, R.lo, R.hi)
    beta = bv - c
    if bv.max() == bv.min():
        beta = np.zeros_like(bv)
    F = _local_array(fv, grid, Q0)
    FB = _local_array(beta * fv, grid, Q0)
    G = _local_array(gv, grid, Q0)
    GB = _local_array(beta * gv, grid, Q0)
    mid = (slice(s0, 2 * s0),) * n
    vol3 = 3**n * cells
    f3 = np.abs(F).sum() / vol3
    fb3 = np.abs(FB).sum() / vol3
    g_s = (np.sum(np.abs(G[mid]) ** s) / cells) ** (1 / s)
    gb_s = (np.sum(np.abs(GB[mid]) ** s) / cells) ** (1 / s)

    M2, T1 = _local_gm_arrays(F, GB, Q0, omega)
    M4, T3 = _local_gm_arrays(FB, G, Q0, omega)
    norms = (f3, f3 * gb_s, fb3, fb3 * g_s)
    raw = (np.abs(T1), M2, np.abs(T3), M4)
    k = int(math.floor(cells / 2 ** (n + 5)))
    A = []
    omega0 = np.zeros((s0,) * n, dtype=bool)
    for num, den in zip(raw, norms):
        if den == 0:
            A.append(0.0)
            continue
        phi = num / den
        a = _quantile_threshold(phi, k)
        A.append(a)
        omega0 |= phi > a
    # local left side  int_Q0 |T(beta f chi_3Q0) - beta T(f chi_3Q0)| |g|
    bq = beta[grid.slices(Q0.lo, Q0.hi)]
    gq = gv[grid.slices(Q0.lo, Q0.hi)]
    local_lhs = float(np.sum(np.abs(T3 - bq * T1) * np.abs(gq)))
    t = f3 * gb_s * cells
    ts = fb3 * g_s * cells
    return {
        "R": R,
        "A": A,
        "omega0": omega0,
        "t": float(t),
        "ts": float(ts),
        "local_lhs": local_lhs,
        "k": k,
    }


def _check(cond, message):
    if not cond:
        raise InvariantError(message)


def sparse_dominate_commutator(b, f, g, omega, s=2.0, r=1.0):
    """Sparse domination of ``|<[b, T] f, g>|`` by ``K * sum_j (T_{S_j} + T*_{S_j})``.

    Runs the stopping-cube recursion from the base root, asserting at every
    node the measure bounds and the local inequality, then lifts the cubes to
    the translated lattices. Only ``r = 1`` is supported.
    """
    grid = f.grid
    if grid.ext != 0:
        raise ValueError("domination runs on a base grid")
    if b.grid != grid or g.grid != grid:
        raise ValueError("b, f and g must share one grid")
    if not s > 1:
        raise ValueError(f"s must exceed 1, got {s}")
    if r != 1.0:
        raise ValueError("only r = 1 is implemented")
    _check(omega.n == grid.n, "kernel dimension mismatch")
    n = grid.n
    eta = 1.0 / (2 * 9**n)
    bv, fv, gv = b.values, f.values, g.values
    cv = grid.cell_volume

    if not np.any(fv):
        return DominationResult(grid, omega, s, [], SparseFamily(0, (), 0.5), 0.0, 0.0, 0,
                                0.0, 0.0, 0.0, 0.0)

    height = 2.0 ** -(n + 1)
    root = grid.root
    stack = [(root, 0)]
    info = {}
    children = {}
    depth_max = 0
    while stack:
        Q0, depth = stack.pop()
        depth_max = max(depth_max, depth)
        nd = _node(Q0, grid, bv, fv, gv, omega, s)
        cells = Q0.ncells
        om = nd["omega0"]
        size = int(om.sum())
        _check(size <= 4 * nd["k"], f"|E| quantile bound failed at {Q0.key}")
        _check(size <= cells / 2 ** (n + 2), f"|Omega| > 2^-(n+2)|Q0| at {Q0.key}")
        P = _cz_block(om, Q0, height)
        tot = sum(Pj.ncells for Pj in P)
        _check(tot <= cells / 2, f"sum |P_j| > |Q0|/2 at {Q0.key}")
        for Pj in P:
            off = tuple(a - b0 for a, b0 in zip(Pj.lo, Q0.lo))
            inter = int(om[tuple(slice(o, o + Pj.side) for o in off)].sum())
            _check(height * Pj.ncells < inter <= Pj.ncells / 2,
                   f"stopping cube density out of range at {Pj.key}")
            _check(inter < Pj.ncells, f"stopping cube {Pj.key} misses the complement")
        nd["P"] = P
        nd["depth"] = depth
        nd["omega_frac"] = size / cells
        nd["P_frac"] = tot / cells
        info[Q0] = nd
        children[Q0] = P
        for Pj in reversed(P):
            stack.append((Pj, depth + 1))

    # local inequality, bottom-up over the recorded tree
    for Q0, nd in info.items():
        A = sum(nd["A"])
        rhs_loc = sum(info[P]["local_lhs"] for P in children[Q0]) + A * (nd["t"] + nd["ts"])
        _check(nd["local_lhs"] <= rhs_loc * (1 + NODE_RTOL) + 1e-12 * abs(nd["local_lhs"]),
               f"local domination failed at {Q0.key}")

    # lift to the translated lattices
    lift = {}
    weight = {}
    for Q, nd in info.items():
        R = nd["R"]
        _check(R.m == grid.m and R.ncells <= 9**n * Q.ncells, f"lifted cube too large for {Q.key}")
        cQ = 3.0**-n * (R.ncells / Q.ncells) ** (1.0 / s)
        lift[Q] = R
        nd["c"] = cQ
        weight[R] = weight.get(R, 0.0) + sum(nd["A"]) * cQ
    by_lattice = {}
    for R in weight:
        by_lattice.setdefault(R.lattice_id, []).append(R)
    families = []
    for j in sorted(by_lattice):
        F = SparseFamily(j, tuple(by_lattice[j]), eta)
        ok, wit = verify_sparse(F)
        _check(ok, f"lifted family {j} is not {eta:g}-sparse")
        F.witness = wit
        families.append(F)
    base = SparseFamily(0, tuple(info), 0.5)
    ok, wit = verify_sparse(base)
    _check(ok, "stopping family is not 1/2-sparse")
    base.witness = wit

    terms = {}
    for R in weight:
        terms[R] = _form_terms(R, grid, bv, fv, gv, 1.0, s)
    forms = sum(t + ts for t, ts in terms.values())
    K = max(weight.values())
    rhs_weighted = sum(weight[R] * (terms[R][0] + terms[R][1]) for R in weight)
    lhs = abs(float(np.sum(commutator_apply(b, f, omega).values * gv)) * cv)
    root_lhs = info[root]["local_lhs"] * cv
    _check(lhs <= root_lhs * (1 + NODE_RTOL) + 1e-300, "global pairing exceeds the root bound")
    node_bound = sum(sum(nd["A"]) * (nd["t"] + nd["ts"]) for nd in info.values()) * cv
    _check(root_lhs <= node_bound * (1 + NODE_RTOL) + 1e-300, "tree bound failed")
    _check(node_bound <= rhs_weighted * (1 + NODE_RTOL) + 1e-300, "lift bound failed")
    rhs = K * forms
    _check(rhs_weighted <= rhs * (1 + NODE_RTOL) + 1e-300, "multiplier bound failed")

    rows = []
    for Q, nd in sorted(info.items(), key=lambda kv: (kv[1]["depth"], kv[0].lo)):
        rows.append({
            "cube": Q.key,
            "depth": nd["depth"],
            "cells": Q.ncells,
            "omega_frac": nd["omega_frac"],
            "P_frac": nd["P_frac"],
            "A1": nd["A"][0],
            "A2": nd["A"][1],
            "A3": nd["A"][2],
            "A4": nd["A"][3],
            "A": sum(nd["A"]),
            "t": nd["t"] * cv,
            "t_adj": nd["ts"] * cv,
            "local_lhs": nd["local_lhs"] * cv,
            "lifted": nd["R"].key,
            "lift_factor": nd["c"],
            "children": len(nd["P"]),
        })
    return DominationResult(
        grid=grid,
        omega=omega,
        s=s,
        families=families,
        base_family=base,
        K_empirical=float(K),
        A_max=float(max(sum(nd["A"]) for nd in info.values())),
        recursion_depth=depth_max,
        lhs=lhs,
        rhs=float(rhs),
        forms=float(forms),
        rhs_weighted=float(rhs_weighted),
        nodes=rows,
        lift=lift,
    )


# ------------------------------------------------ B_S and sparse-form checks


def _cube_norms(values, grid, cubes, psi):
    """Orlicz norms of ``values`` over cubes inside ``grid``, batched by side."""
    out = {}
    by_side = {}
    for Q in cubes:
        by_side.setdefault(Q.side, []).append(Q)
    for side, group in by_side.items():
        rows = np.stack([values[grid.slices(Q.lo, Q.hi)].ravel() for Q in group])
        for Q, v in zip(group, orlicz_rows(rows, psi)):
            out[Q] = float(v)
    return out


def sparse_operator_BS(S, psi, f):
    """``sum_{Q in S} ||f||_{psi, Q} chi_Q`` on ``f.grid``."""
    g = f.grid
    cubes = list(S)
    for Q in cubes:
        if not Q.inside(g):
            raise ValueError(f"cube {Q.key} is not inside the grid window")
    out = np.zeros(g.shape)
    for Q, a in _cube_norms(f.values, g, cubes, psi).items():
        out[g.slices(Q.lo, Q.hi)] += a
    return GridFunction(g, out)


def _require_sparse(S):
    if S.witness is not None:
        return S.witness
    ok, wit = verify_sparse(S)
    if not ok:
        raise ValueError(f"family on lattice {S.lattice_id} is not {S.eta:g}-sparse")
    return wit


def lemma23_verify(S, psi, f, w, ainf=None, grid=None):
    """Check ``||B_S f||_{L^1(w)} <= (4/eta) [w]_{A_inf} ||M_psi f||_{L^1(w)}``.

    ``f`` is extended by zero and ``w`` by its edge values to a window
    containing every cube; the A_inf constant and the maximal function are
    computed on that window. ``ainf`` may be passed to reuse a computed value
    for the same window.
    """
    ok, _ = verify_sparse(S)
    if not ok:
        raise ValueError(f"family on lattice {S.lattice_id} is not {S.eta:g}-sparse")
    G = family_grid(f.grid, S.cubes) if grid is None else grid
    fe = f.extend(G, "zero") if f.grid != G else f
    we = w.extend(G, "edge") if w.grid != G else w
    a_inf = ainf_constant(we).value if ainf is None else float(ainf)
    lhs = 0.0
    for Q, a in _cube_norms(fe.values, G, S.cubes, psi).items():
        lhs += a * we.measure(Q)
    Mf = maximal_fn(fe, psi).values
    rhs = (4.0 / S.eta) * a_inf * float(np.sum(Mf * we.values) * G.cell_volume)
    return VerificationReport(
        name="bs_bound",
        lhs=lhs,
        rhs=rhs,
        passed=lhs <= rhs * (1 + 1e-12),
        params={"psi": psi.name, "eta": S.eta, "lattice": S.lattice_id},
        details={"a_inf": a_inf, "ext": G.ext},
    )


def carleson_verify(S, f, p, grid=None):
    """Check ``sum_Q <|f|>_Q**p |Q| <= eta**-1 ||M f||_p**p`` through the stored witness.

    The intermediate bound ``eta**-1 sum_Q |E_Q| min_{E_Q} (M f)**p`` is
    reported as well; both inequalities are asserted.
    """
    if S.witness is None:
        raise ValueError("Carleson check needs a sparse family with a witness")
    if not p > 1:
        raise ValueError("p must exceed 1")
    G = family_grid(f.grid, S.cubes) if grid is None else grid
    fe = f.extend(G, "zero") if f.grid != G else f
    Mf = maximal_fn(fe).values
    avgs = _cube_norms(fe.values, G, S.cubes, Power(1.0))
    cv = G.cell_volume
    lhs = sum(a**p * Q.measure(G) for Q, a in avgs.items())
    wit_bound = 0.0
    for Q in S.cubes:
        E = S.witness[Q]
        idx = tuple((E - G.offset).T)
        wit_bound += len(E) * cv * float(np.min(Mf[idx])) ** p
    wit_bound /= S.eta
    rhs = float(np.sum(Mf**p) * cv) / S.eta
    tol = 1 + 1e-12
    ok = lhs <= wit_bound * tol and wit_bound <= rhs * tol
    return VerificationReport(
        name="carleson",
        lhs=lhs,
        rhs=rhs,
        passed=ok,
        params={"p": p, "eta": S.eta, "lattice": S.lattice_id},
        details={"witness_bound": wit_bound},
    )


def lemma23_suite(grid, families, psis, fs, weights):
    """Batched B_S bound checks over families x Young functions x functions x weights.

    ``weights`` maps names to weights on ``grid``. Orlicz norms, maximal
    functions and weight constants are shared across the batch; returns one
    :class:`VerificationReport` per combination.
    """
    families = list(families)
    for F in families:
        _require_sparse(F)
    cubes = sorted({Q for F in families for Q in F.cubes})
    G = family_grid(grid, cubes) if cubes else grid
    wdata = {}
    for name, w in weights.items():
        we = w.extend(G, "edge") if w.grid != G else w
        wdata[name] = (we, ainf_constant(we).value, {Q: we.measure(Q) for Q in cubes})
    reports = []
    for psi in psis:
        for fi, f in enumerate(fs):
            fe = f.extend(G, "zero") if f.grid != G else f
            norms = _cube_norms(fe.values, G, cubes, psi) if cubes else {}
            Mf = maximal_fn(fe, psi).values
            for name, (we, a_inf, wq) in wdata.items():
                mint = float(np.sum(Mf * we.values) * G.cell_volume)
                for F in families:
                    lhs = sum(norms[Q] * wq[Q] for Q in F.cubes)
                    rhs = (4.0 / F.eta) * a_inf * mint
                    reports.append(VerificationReport(
                        name="bs_bound",
                        lhs=lhs,
                        rhs=rhs,
                        passed=lhs <= rhs * (1 + 1e-12),
                        params={"psi": psi.name, "f": fi, "weight": name,
                                "lattice": F.lattice_id, "eta": F.eta},
                        details={"a_inf": a_inf},
                    ))
    return reports
