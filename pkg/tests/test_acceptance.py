"""The twelve acceptance criteria, each at its stated scale and tolerance.

Every test prints one ``PASS k: ...`` or ``FAIL k: ...`` line; the lines are
collected and repeated in the pytest terminal summary.
"""

import math
import os
import time

import numpy as np
import pytest
import yaml
from conftest import VERDICTS

from roughsparse import generators as gen
from roughsparse.cli import run_cli
from roughsparse.harness import conjugate, rdf_R, scaling_experiment, verify_thm12
from roughsparse.lattice import build_grid, verify_sparse
from roughsparse.norms import (
    ExpL,
    GridFunction,
    LlogL,
    Power,
    Weight,
    cube_profile,
    default_tau,
    reverse_holder_check,
    weight_constants,
)
from roughsparse.rough import OmegaKernel, apply_t_omega, weak_type_estimate
from roughsparse.sparse import carleson_verify, lemma23_suite, sparse_dominate_commutator

H1 = OmegaKernel.hilbert()
A16 = OmegaKernel.alternating(16)
CONSTANTS = ("a_p", "a_1", "a_inf", "mixed")


def verdict(k, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} {k}: {text}"
    print(line)
    VERDICTS.append(line)
    return ok


def r_squared(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    A = np.vstack([x, np.ones_like(x)]).T
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    resid = y - A @ coef
    return float(coef[0]), float(1 - resid @ resid / np.sum((y - y.mean()) ** 2))


def suites():
    return [build_grid(1, 1.0, 8), build_grid(2, 1.0, 5)]


# ---------------------------------------------------------------------------


def test_01_quadrature_oracle():
    t0 = time.perf_counter()
    g = build_grid(1, 2.0, 10)
    x = g.centers()
    T = apply_t_omega(gen.indicator(g, -1.0, 1.0), H1).values
    exact = np.log(np.abs((x + 1) / (x - 1)))
    far = np.minimum(np.abs(x - 1), np.abs(x + 1)) >= 8 * g.cell_size
    err = float(np.max(np.abs(T[far] - exact[far]) / np.abs(exact[far])))
    dt = time.perf_counter() - t0
    ok = err <= 0.01 and dt < 5.0
    assert verdict(1, ok, f"quadrature max rel err {err:.3e} (<= 1e-2), {dt:.2f}s (< 5s)")


def test_02_constant_baselines_and_scale_invariance():
    worst_one, mismatches = 0.0, []
    for g in suites():
        c = weight_constants(Weight.constant(g, 1.0), 2.0, 1.5)
        worst_one = max(worst_one, max(abs(getattr(c, k) - 1.0) for k in CONSTANTS))
        for name, w in gen.weight_suite(g).items():
            c0 = weight_constants(w, 2.0, 1.5)
            for lam in (1e-3, 1e3):
                c1 = weight_constants(w.scaled(lam), 2.0, 1.5)
                same = all(math.isclose(getattr(c0, k), getattr(c1, k), rel_tol=1e-12)
                           for k in CONSTANTS)
                if not (same and c0.cube_argmax == c1.cube_argmax):
                    mismatches.append((g.n, name, lam))
    ok = worst_one <= 1e-9 and not mismatches
    assert verdict(2, ok, f"w=1 constants off by {worst_one:.1e} (<= 1e-9); "
                          f"scale-invariance mismatches {len(mismatches)}")


def test_03_per_cube_jensen():
    violations, cubes = 0, 0
    for g in suites():
        for w in gen.weight_suite(g).values():
            for p, q in ((2.0, 1.5), (3.0, 2.0), (4.0, 1.2)):
                prof = cube_profile(w, p, q)
                violations += int(np.sum(prof["mixed"] > prof["aq"] * (1 + 1e-12)))
                cubes += prof["aq"].size
    assert verdict(3, violations == 0, f"mixed <= A_q ratio on {cubes} cube evaluations, "
                                       f"{violations} violations")


def test_04_reverse_holder():
    fails, worst = [], 0.0
    for g in suites():
        for name, w in gen.weight_suite(g).items():
            rep = reverse_holder_check(w, default_tau(g.n))
            worst = max(worst, rep.lhs / rep.rhs)
            if not rep.passed:
                fails.append((g.n, name))
    assert verdict(4, not fails, f"tau_n = 11*2^n, worst <w^r>^(1/r)/(2<w>) = {worst:.4f}, "
                                 f"{len(fails)} failures")


# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def item5():
    t0 = time.perf_counter()
    g8, g10 = build_grid(1, 1.0, 8), build_grid(1, 1.0, 10)
    runs = []
    for k in range(50):
        b, f, h = gen.random_triple(g8, k)
        r8 = sparse_dominate_commutator(b, f, h, H1, 2.0)
        r10 = sparse_dominate_commutator(*gen.random_triple(g10, k), H1, 2.0)
        runs.append((r8, r10))
    return g8, runs, time.perf_counter() - t0


def test_05_sparse_domination_end_to_end(item5):
    g, runs, dt = item5
    n = g.n
    eta = 1 / (2 * 9**n)
    holds = all(r8.holds and r10.holds for r8, r10 in runs)
    sparse = all(F.eta == eta and verify_sparse(F)[0]
                 for r8, r10 in runs for F in r8.families + r10.families)
    nodes = all(row["omega_frac"] <= 2.0 ** -(n + 2) and row["P_frac"] <= 0.5
                for r8, r10 in runs for row in r8.nodes + r10.nodes)
    ks = [r10.K_empirical / r8.K_empirical for r8, r10 in runs]
    stable = all(0.5 <= k <= 2.0 for k in ks)
    ok = holds and sparse and nodes and stable and dt < 60.0
    assert verdict(5, ok, f"50 triples: lhs<=rhs {holds}, sparse {sparse}, node bounds {nodes}, "
                          f"K(m=10)/K(m=8) in [{min(ks):.3f}, {max(ks):.3f}], {dt:.1f}s (< 60s)")


def test_06_bs_bound_suite(item5):
    g, runs, _ = item5
    fams = [F for r8, _ in runs for F in r8.families]
    rng = np.random.default_rng(2024)
    fs = [GridFunction(g, rng.normal(size=g.shape)) for _ in range(20)]
    reps = lemma23_suite(g, fams, (Power(1), LlogL(), ExpL()), fs, gen.weight_suite(g))
    fails = sum(not r.passed for r in reps)
    worst = max(r.lhs / r.rhs for r in reps)
    assert verdict(6, fails == 0, f"{len(reps)} checks over {len(fams)} families, "
                                  f"worst lhs/rhs {worst:.3e}, {fails} failures")


def test_07_carleson_suite(item5):
    g, runs, _ = item5
    rng = np.random.default_rng(7)
    extra = [GridFunction(g, rng.normal(size=g.shape)) for _ in range(3)]
    n, fails = 0, 0
    for k, (r8, _) in enumerate(runs):
        fs = [gen.random_triple(g, k)[1]] + extra
        for F in r8.families:
            for f in fs:
                for p in (1.5, 2.0, 4.0):
                    n += 1
                    fails += not carleson_verify(F, f, p).passed
    assert verdict(7, fails == 0, f"{n} Carleson checks at p in {{1.5, 2, 4}}, {fails} failures")


# ---------------------------------------------------------------------------


def test_08_rubio_de_francia():
    g = build_grid(1, 1.0, 8)
    h = GridFunction(g, np.abs(np.random.default_rng(8).normal(size=g.shape)))
    ps = (1.25, 1.5, 2.0)
    table = {}
    prop_a = prop_b = tail = True
    for name, w in gen.weight_suite(g).items():
        for p in ps:
            res = rdf_R(h, w, p, 1.5, max_terms=16)
            prop_a &= res.property_a(h)
            prop_b &= res.property_b()
            tail &= res.tail_bound <= 2.0**-15 * res.h_norm * (1 + 1e-12)
            table[name, p] = res.a1_of_product / conjugate(p)
    # one constant, frozen from the unit weight, bounds every weight and p
    c_fit = 2.0 * max(table["constant", p] for p in ps)
    bounded = all(math.isfinite(v) and v <= c_fit for v in table.values())
    slope, _ = r_squared([conjugate(p) for p in ps],
                         [table["constant", p] * conjugate(p) for p in ps])
    ok = prop_a and prop_b and tail and bounded
    assert verdict(8, ok, f"(a) {prop_a}, (b) {prop_b}, tail <= 2^-15||h|| {tail}, "
                          f"max a1/p' {max(table.values()):.3f} <= C {c_fit:.3f} "
                          f"(unit-weight slope in p' {slope:.3f})")


def test_09_thm11_scaling():
    g = build_grid(1, 1.0, 9)
    b = gen.log_symbol(g)
    probes = gen.probe_corpus(g, np.random.default_rng(0))
    rows = scaling_experiment(g, [-0.2, -0.4, -0.6, -0.8], 2.0, 1.5, 2.0, b, H1, probes)
    ratios = [r["ratio_mix"] for r in rows]
    spread = max(ratios) / min(ratios)
    new_le_old = all(r["new_le_old"] for r in rows)
    old = ", ".join(f"{r['ratio_old']:.3g}" for r in rows)
    ok = spread <= 4.0 and new_le_old
    assert verdict(9, ok, f"LHS/RHS_mix max/min {spread:.3f} (<= 4), RHS_new <= RHS_old "
                          f"{new_le_old}; LHS/RHS_old: {old}")


def test_10_thm12_suite():
    g = build_grid(1, 1.0, 8)
    b = gen.log_symbol(g)
    probes = gen.probe_corpus(g, np.random.default_rng(0))
    fails, worst = [], 0.0
    for p, q in ((2.0, 1.5), (3.0, 2.0)):
        base = verify_thm12(Weight.constant(g, 1.0), p, q, b, H1, probes)
        c_fit = 4.0 * base.ratio
        for name, w in gen.weight_suite(g).items():
            rep = verify_thm12(w, p, q, b, H1, probes, c_fit=c_fit)
            worst = max(worst, rep.ratio / c_fit)
            if not rep.passed:
                fails.append((p, q, name))
    assert verdict(10, not fails, f"C_fit = 4 x unit-weight ratio, worst ratio/C_fit "
                                  f"{worst:.3f}, {len(fails)} failures")


def test_11_weak_type_slopes():
    g = build_grid(2, 1.0, 6)
    probes = gen.weak_probes(g, np.random.default_rng(0))
    lams = (2.0**-1, 2.0**-3, 2.0**-6)
    ps = (1.0, 2.0, 4.0, 8.0)
    el = [weak_type_estimate("m_lambda", 1.0, probes, A16, lam=lam).constant for lam in lams]
    ep = [weak_type_estimate("m_p", 1.0, probes, A16, p=p).constant for p in ps]
    s_l, r2_l = r_squared(np.log(1 / np.array(lams)), el)
    s_p, r2_p = r_squared(ps, ep)
    ok = r2_l >= 0.9 and r2_p >= 0.9
    assert verdict(11, ok, f"2D 16-arc kernel m=6: log(1/lambda) fit R^2 {r2_l:.4f} "
                           f"(slope {s_l:.3f}), p fit R^2 {r2_p:.4f} (slope {s_p:.3f})")


def test_12_determinism(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"m": 7, "seed": 11, "lemma_functions": 4}))
    names, diffs = 0, []
    for command in ("constants", "dominate", "verify-thm11", "verify-thm12", "lemmas", "rdf"):
        outs = [str(tmp_path / f"{command}-{i}") for i in range(2)]
        codes = [run_cli(str(cfg), command, out) for out in outs]
        if codes != [0, 0]:
            diffs.append(f"{command} exit {codes}")
            continue
        for name in sorted(os.listdir(outs[0])):
            if not name.endswith(".csv"):
                continue
            names += 1
            with open(os.path.join(outs[0], name), "rb") as a, \
                    open(os.path.join(outs[1], name), "rb") as b:
                if a.read() != b.read():
                    diffs.append(f"{command}/{name}")
    assert verdict(12, not diffs, f"{names} CSV files compared byte for byte, "
                                  f"{len(diffs)} differences")
