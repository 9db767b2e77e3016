"""Rubio de Francia iteration, operator-norm lower estimates and the theorem verifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import generators as gen
from .norms import (
    GridFunction,
    Weight,
    ainf_constant,
    ap_constant,
    bmo_norm,
    default_tau,
    m_r_weight,
    maximal_fn,
    mixed_one_sup_constant,
)
from .reports import VerificationReport, safe_ratio
from .rough import (
    apply_t_adjoint,
    apply_t_omega,
    commutator_adjoint_apply,
    commutator_apply,
)

__all__ = [
    "RdFResult",
    "boyd_probe",
    "conjugate",
    "loglog_rows",
    "rdf_R",
    "rdf_S",
    "scaling_experiment",
    "thm11_constant",
    "verify_thm11",
    "verify_thm12",
    "weighted_norm",
    "weighted_opnorm_lower",
]


def conjugate(p):
    return math.inf if p == 1 else p / (p - 1.0)


def weighted_norm(f, p, w=None):
    """``||f||_{L^p(w)}`` (Lebesgue when ``w`` is None)."""
    return f.lp_norm(p, w)


# ------------------------------------------------------------ Rubio de Francia


def rdf_S(f, w, p, r, mrw=None):
    """``S f = M(f (M_r w)**(1/p)) / (M_r w)**(1/p)``."""
    if not (p > 1 and r > 1):
        raise ValueError("rdf_S needs p > 1 and r > 1")
    mu = m_r_weight(w, r) if mrw is None else mrw
    scale = mu.values ** (1.0 / p)
    return GridFunction(f.grid, maximal_fn(GridFunction(f.grid, f.values * scale)).values / scale)


@dataclass
class RdFResult:
    Rh: GridFunction
    S_norm_estimate: float
    truncation_terms: int
    tail_bound: float
    a1_of_product: float
    h_norm: float = 0.0
    Rh_norm: float = 0.0
    doublings: int = 0
    iterate_ratios: list = field(default_factory=list)

    def property_a(self, h):
        return bool(np.all(self.Rh.values >= h.values))

    def property_b(self):
        return self.Rh_norm <= 2.0 * self.h_norm + self.tail_bound


def rdf_R(h, w, p, r, max_terms=16, probes=None, rng=None):
    """Truncated series ``R h = sum_{k < max_terms} 2**-k S**k h / S_hat**k``.

    ``S_hat`` starts as twice the largest observed ratio
    ``||S phi|| / ||phi||`` in ``L^p(M_r w)`` over the probes and ``h``; it is
    doubled until every iterate used satisfies ``||S**(k+1) h|| <= S_hat ||S**k h||``,
    which is what makes the tail bound ``2**(1 - max_terms) ||h||`` valid.
    """
    if np.any(h.values < 0):
        raise ValueError("rdf_R needs a nonnegative h")
    if max_terms < 8:
        raise ValueError("max_terms must be at least 8")
    g = h.grid
    mu = m_r_weight(w, r)

    def norm(f):
        return f.lp_norm(p, mu)

    def S(f):
        return rdf_S(f, w, p, r, mrw=mu)

    rng = np.random.default_rng(0) if rng is None else rng
    if probes is None:
        probes = [abs(f) for f in gen.probe_corpus(g, rng, signs=4, indicators=8, bumps=4)]
    est = 0.0
    for f in list(probes) + [h]:
        nf = norm(f)
        if nf > 0:
            est = max(est, norm(S(f)) / nf)
    S_hat = 2.0 * max(est, 1.0)
    hn = norm(h)
    if hn == 0:
        return RdFResult(GridFunction.zeros(g), S_hat, max_terms, 0.0, math.nan, 0.0, 0.0)

    iterates = [h]
    for _ in range(max_terms - 1):
        iterates.append(S(iterates[-1]))
    norms = [norm(f) for f in iterates]
    ratios = [b / a for a, b in zip(norms, norms[1:])]
    doublings = 0
    while any(q > S_hat for q in ratios):
        S_hat *= 2.0
        doublings += 1
    Rh = np.zeros(g.shape)
    for k, f in enumerate(iterates):
        Rh += f.values / (2.0 * S_hat) ** k
    Rh = GridFunction(g, Rh)
    prod = Weight(g, Rh.values * mu.values ** (1.0 / p))
    a1 = ap_constant(prod, 1).value
    return RdFResult(
        Rh=Rh,
        S_norm_estimate=S_hat,
        truncation_terms=max_terms,
        tail_bound=2.0 ** (1 - max_terms) * hn,
        a1_of_product=a1,
        h_norm=hn,
        Rh_norm=norm(Rh),
        doublings=doublings,
        iterate_ratios=ratios,
    )


# ----------------------------------------------------------- operator norms


def _operator(op, omega=None, b=None):
    """``(apply, adjoint)`` pair for an operator tag."""
    if callable(op):
        return op, None
    if op == "identity":
        return (lambda f: f), (lambda g: g)
    if op == "t_omega":
        return (lambda f: apply_t_omega(f, omega)), (lambda g: apply_t_adjoint(g, omega))
    if op == "commutator":
        return (lambda f: commutator_apply(b, f, omega)), (
            lambda g: commutator_adjoint_apply(b, g, omega)
        )
    raise ValueError(f"unknown operator tag {op!r}")


def boyd_probe(op, p, w, source, start, omega=None, b=None, iters=8):
    """Nonlinear power iteration for ``sup ||A f||_{L^p(w)} / ||f||_{L^p(v)}``.

    Alternates the dual element ``w |Af|**(p-2) Af`` of the image with the
    extremal ``f`` for the adjoint image. Returns the last iterate.
    """
    A, At = _operator(op, omega, b)
    if At is None:
        raise ValueError("power iteration needs an operator with an adjoint")
    pp = conjugate(p)
    wv = w.values if w is not None else 1.0
    vv = source.values if source is not None else 1.0
    f = start
    for _ in range(iters):
        u = A(f).values
        if not np.any(u):
            break
        dual = wv * np.abs(u) ** (p - 1) * np.sign(u)
        z = At(GridFunction(f.grid, dual)).values
        if not np.any(z):
            break
        fv = np.abs(z / vv) ** (pp - 1) * np.sign(z)
        f = GridFunction(f.grid, fv / np.abs(fv).max())
    return f


def weighted_opnorm_lower(op, p, w, source_weight=None, probes=(), omega=None, b=None,
                          power_iters=0, return_probe=False):
    """``max_f ||Op f||_{L^p(w)} / ||f||_{L^p(source)}`` over the probes.

    ``source_weight`` defaults to ``w``. With ``power_iters > 0`` the best probe
    seeds :func:`boyd_probe` and its output joins the probe set.
    """
    probes = list(probes)
    if not probes:
        raise ValueError("empty probe set")
    A, _ = _operator(op, omega, b)
    src = w if source_weight is None else source_weight
    best, arg = 0.0, None

    def ratio(f):
        nf = f.lp_norm(p, src)
        if nf == 0:
            raise ValueError("probe vanishes in the source norm")
        return A(f).lp_norm(p, w) / nf

    for f in probes:
        val = ratio(f)
        if val > best or arg is None:
            best, arg = val, f
    if power_iters > 0 and best > 0:
        fs = boyd_probe(op, p, w, src, arg, omega=omega, b=b, iters=power_iters)
        val = ratio(fs)
        if val > best:
            best, arg = val, fs
    return (best, arg) if return_probe else best


# ------------------------------------------------------------- theorems


def thm11_constant(p, r):
    """``(p')**3 p**2 (r')**(1 + 1/p')``."""
    pp = conjugate(p)
    rp = conjugate(r)
    return pp**3 * p**2 * rp ** (1.0 + 1.0 / pp)


def _probes(grid, seed, counts):
    rng = np.random.default_rng(seed)
    return gen.probe_corpus(grid, rng, counts.get("signs", 32), counts.get("indicators", 16),
                            counts.get("bumps", 8))


def verify_thm11(w, p, r, b, omega, probes=None, seed=0, power_iters=8, constants=None):
    """Two-weight and ``A_1``-``A_inf`` forms of the commutator bound.

    Reports ``lhs_two`` (``L^p(M_r w) -> L^p(w)``) against
    ``||Omega|| ||b|| (p')**3 p**2 (r')**(1+1/p')`` and the one-weight norm
    ``lhs_one`` on ``L^p(w)`` against the same norms and ``p`` factors times
    ``[w]_{A_1}**(1/p) [w]_{A_inf}**(1 + 1/p')``; the older growth
    ``[w]_{A_1}**(1/p) [w]_{A_inf}**(2 + 1/p)`` is reported alongside.
    """
    if not (p > 1 and r > 1):
        raise ValueError("verify_thm11 needs p > 1 and r > 1")
    g = w.grid
    probes = _probes(g, seed, {}) if probes is None else probes
    mrw = m_r_weight(w, r)
    lhs_two = weighted_opnorm_lower("commutator", p, w, mrw, probes, omega, b, power_iters)
    lhs_one = weighted_opnorm_lower("commutator", p, w, None, probes, omega, b, power_iters)
    bn = bmo_norm(b)
    norms = omega.norm_inf * bn
    pp = conjugate(p)
    if constants is None:
        a1 = ap_constant(w, 1).value
        ai = ainf_constant(w).value
    else:
        a1, ai = constants
    rhs_core = norms * thm11_constant(p, r)
    pfac = pp**3 * p**2
    rhs_mix = norms * pfac * a1 ** (1 / p) * ai ** (1 + 1 / pp)
    rhs_old = norms * pfac * a1 ** (1 / p) * ai ** (2 + 1 / p)
    return VerificationReport(
        name="thm11",
        lhs=lhs_two,
        rhs=rhs_core,
        passed=math.isfinite(safe_ratio(lhs_two, rhs_core)) and rhs_mix <= rhs_old * (1 + 1e-12),
        params={"p": p, "r": r},
        details={
            "lhs_two": lhs_two,
            "lhs_one": lhs_one,
            "bmo": bn,
            "omega_inf": omega.norm_inf,
            "a_1": a1,
            "a_inf": ai,
            "rhs_core": rhs_core,
            "rhs_mix": rhs_mix,
            "rhs_old": rhs_old,
            "ratio_core": safe_ratio(lhs_two, rhs_core),
            "ratio_mix": safe_ratio(lhs_one, rhs_mix),
            "ratio_old": safe_ratio(lhs_one, rhs_old),
            "new_le_old": rhs_mix <= rhs_old * (1 + 1e-12),
        },
    )


def verify_thm12(w, p, q, b, omega, probes=None, seed=0, power_iters=8, c_fit=None,
                 c_ainf=None):
    """``||[b,T]||_{L^p(w)} <= C [w]_{A_inf} [w]_mixed ||b|| ||Omega||`` with a frozen ``C``.

    Also reports the pure ``A_q`` comparisons ``[w]_{A_q}**2`` and
    ``[w]_{A_q}**3`` and checks the per-cube consequence
    ``mixed * a_inf <= c_ainf * a_q**2`` when ``c_ainf`` (a fitted bound on
    ``a_inf / a_q``) is given.
    """
    if not 1 < q < p:
        raise ValueError(f"verify_thm12 needs 1 < q < p, got q={q}, p={p}")
    g = w.grid
    probes = _probes(g, seed, {}) if probes is None else probes
    lhs = weighted_opnorm_lower("commutator", p, w, None, probes, omega, b, power_iters)
    bn = bmo_norm(b)
    norms = omega.norm_inf * bn
    ai = ainf_constant(w).value
    mx = mixed_one_sup_constant(w, p, q).value
    aq = ap_constant(w, q).value
    rhs = ai * mx * norms
    ratio = safe_ratio(lhs, rhs)
    ok = mx <= aq * (1 + 1e-12)
    if c_fit is not None:
        ok = ok and ratio <= c_fit
    if c_ainf is not None:
        ok = ok and mx * ai <= c_ainf * aq**2 * (1 + 1e-12)
    return VerificationReport(
        name="thm12",
        lhs=lhs,
        rhs=rhs,
        passed=ok,
        params={"p": p, "q": q},
        details={
            "a_inf": ai,
            "mixed": mx,
            "a_q": aq,
            "bmo": bn,
            "rhs_aq2": aq**2 * norms,
            "rhs_aq3": aq**3 * norms,
            "mixed_le_aq": mx <= aq * (1 + 1e-12),
            "c_fit": c_fit,
        },
    )


# ------------------------------------------------------------- scaling


SCALING_COLUMNS = [
    "delta", "a_1", "a_p", "a_inf", "mixed", "r_w", "lhs_two", "lhs_one", "rhs_core",
    "rhs_mix", "rhs_old", "rhs_a", "ratio_core", "ratio_mix", "ratio_old", "ratio_a",
    "new_le_old",
]


def scaling_experiment(grid, deltas, p, q, r, b, omega, probes=None, seed=0, power_iters=8,
                       tau=None, eps=None):
    """Constants, lower norm estimates and every bound across a power-weight family.

    Returns one dict per ``delta`` with :data:`SCALING_COLUMNS`.
    """
    deltas = list(deltas)
    if not deltas:
        raise ValueError("empty weight family")
    probes = _probes(grid, seed, {}) if probes is None else probes
    tau = default_tau(grid.n) if tau is None else tau
    rows = []
    for d in deltas:
        try:
            w = gen.power_weight(grid, d, eps)
        except ValueError as exc:
            raise ValueError(f"family member delta={d} is not a valid weight: {exc}") from exc
        a1 = ap_constant(w, 1).value
        ap = ap_constant(w, p).value
        ai = ainf_constant(w).value
        mx = mixed_one_sup_constant(w, p, q).value if q is not None and 1 < q < p else math.nan
        rep = verify_thm11(w, p, r, b, omega, probes, seed, power_iters, constants=(a1, ai))
        dt = rep.details
        norms = dt["omega_inf"] * dt["bmo"]
        rhs_a = ai * mx * norms if math.isfinite(mx) else math.nan
        rows.append({
            "delta": d,
            "a_1": a1,
            "a_p": ap,
            "a_inf": ai,
            "mixed": mx,
            "r_w": 1.0 + 1.0 / (tau * ai),
            "lhs_two": dt["lhs_two"],
            "lhs_one": dt["lhs_one"],
            "rhs_core": dt["rhs_core"],
            "rhs_mix": dt["rhs_mix"],
            "rhs_old": dt["rhs_old"],
            "rhs_a": rhs_a,
            "ratio_core": dt["ratio_core"],
            "ratio_mix": dt["ratio_mix"],
            "ratio_old": dt["ratio_old"],
            "ratio_a": safe_ratio(dt["lhs_one"], rhs_a) if math.isfinite(rhs_a) else math.nan,
            "new_le_old": dt["new_le_old"],
        })
    return rows


def loglog_rows(rows, x="a_1", ys=("lhs_one", "rhs_mix", "rhs_old")):
    """Log-log plot data: ``log`` of ``x`` against ``log`` of each ``y`` column."""
    out = []
    for row in rows:
        rec = {"delta": row["delta"], f"log_{x}": math.log(row[x])}
        for y in ys:
            v = row[y]
            rec[f"log_{y}"] = math.log(v) if v > 0 else -math.inf
        out.append(rec)
    return out
