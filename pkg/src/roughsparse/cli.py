"""Command-line entry point.

Every subcommand writes ``constants.csv`` and ``summary.txt`` to the output
directory, plus its own tables. Exit codes: 0 on success, 2 for configuration
errors, 3 when a numerical check or invariant fails.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import generators as gen
from .config import ConfigError, ExperimentConfig
from .harness import (
    SCALING_COLUMNS,
    conjugate,
    loglog_rows,
    rdf_R,
    scaling_experiment,
    verify_thm11,
    verify_thm12,
)
from .lattice import verify_sparse
from .norms import (
    ExpL,
    GridFunction,
    LlogL,
    Power,
    Weight,
    cube_profile,
    reverse_holder_check,
    weight_constants,
)
from .reports import fmt, write_csv
from .sparse import (
    DominationResult,
    InvariantError,
    carleson_verify,
    lemma23_suite,
    sparse_dominate_commutator,
)

COMMANDS = ("constants", "dominate", "verify-thm11", "verify-thm12", "lemmas", "scaling", "rdf")

CONSTANT_COLUMNS = ["weight", "p", "q", "a_p", "a_1", "a_inf", "mixed", "r_w",
                    "argmax_a_p", "argmax_a_1", "argmax_a_inf", "argmax_mixed"]
NODE_COLUMNS = ["cube", "depth", "cells", "omega_frac", "P_frac", "A1", "A2", "A3", "A4", "A",
                "t", "t_adj", "local_lhs", "lifted", "lift_factor", "children"]
THM11_COLUMNS = ["weight", "p", "r", "lhs_two", "lhs_one", "bmo", "a_1", "a_inf", "rhs_core",
                 "rhs_mix", "rhs_old", "ratio_core", "ratio_mix", "ratio_old", "new_le_old",
                 "passed"]
THM12_COLUMNS = ["weight", "p", "q", "lhs", "rhs", "ratio", "a_inf", "mixed", "a_q", "bmo",
                 "rhs_aq2", "rhs_aq3", "mixed_le_aq", "c_fit", "passed"]
LEMMA_COLUMNS = ["check", "weight", "psi", "f", "lattice", "eta", "p", "lhs", "rhs", "ratio",
                 "passed"]
RDF_COLUMNS = ["weight", "p", "r", "S_norm_estimate", "truncation_terms", "tail_bound",
               "h_norm", "Rh_norm", "a1_of_product", "a1_over_pprime", "doublings",
               "property_a", "property_b"]


class CheckFailed(Exception):
    """A numerical check reported a failure."""


class Run:
    """Shared state of one invocation: config, grid, output files and summary lines."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.grid = cfg.grid()
        self.omega = cfg.omega()
        self.out = cfg.out
        self.lines = []
        self.failures = []
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        return os.path.join(self.out, name)

    def note(self, line):
        self.lines.append(line)

    def fail(self, what):
        self.failures.append(what)

    def header(self, command):
        c = self.cfg
        self.note(f"command: {command}")
        for key, val in c.to_dict().items():
            if key != "out":
                self.note(f"{key}: {val if not isinstance(val, float) else fmt(val)}")
        self.note("")

    def finish(self):
        state = "FAILED: " + "; ".join(self.failures) if self.failures else "OK"
        self.note(f"status: {state}")
        with open(self.path("summary.txt"), "w") as fh:
            fh.write("\n".join(self.lines) + "\n")
        if self.failures:
            raise CheckFailed("; ".join(self.failures))

    def probes(self, offset=0):
        rng = np.random.default_rng(self.cfg.seed + offset)
        c = self.cfg.probe_counts()
        return gen.probe_corpus(self.grid, rng, c["signs"], c["indicators"], c["bumps"])


# ------------------------------------------------------------- commands


def _constants(run, weights):
    cfg = run.cfg
    rows = []
    for name, w in weights.items():
        row = {"weight": name}
        row.update(weight_constants(w, cfg.p, cfg.q, cfg.tau).row())
        rows.append(row)
    write_csv(run.path("constants.csv"), rows, CONSTANT_COLUMNS)
    return rows


def _triple(run, k=0):
    """``(b, f, g)``: the configured symbol and seeded piecewise-constant ``f``, ``g``."""
    _, f, g = gen.random_triple(run.grid, run.cfg.seed + k)
    return run.cfg.symbol_fn(run.grid), f, g


def _dominate(run, write=True):
    cfg = run.cfg
    results = []
    node_rows = []
    fam_rows = []
    for k in range(cfg.triples):
        b, f, g = _triple(run, k)
        res = sparse_dominate_commutator(b, f, g, run.omega, cfg.s)
        results.append((res, b, f, g))
        for row in res.node_rows():
            node_rows.append({"triple": k, **row})
        for row in res.family_rows():
            fam_rows.append({"triple": k, **row})
        run.note(
            f"triple {k}: lhs={fmt(res.lhs)} rhs={fmt(res.rhs)} K={fmt(res.K_empirical)} "
            f"A_max={fmt(res.A_max)} nodes={len(res.nodes)} depth={res.recursion_depth} "
            f"cubes={sum(len(F) for F in res.families)}"
        )
        if not res.holds:
            run.fail(f"domination inequality lhs <= rhs (triple {k})")
    if write:
        write_csv(run.path("domination_report.csv"), node_rows, ["triple"] + NODE_COLUMNS)
        write_csv(run.path("families.csv"), fam_rows, ["triple", "lattice", "cube", "eta"])
        with open(run.path("domination.json"), "w") as fh:
            fh.write(results[0][0].to_json() + "\n")
    return results


def _reloaded_domination(run):
    """Dominate the first triple, serialise, reload and re-check before use."""
    res, b, f, g = _dominate(run)[0]
    with open(run.path("domination.json")) as fh:
        loaded = DominationResult.from_json(fh.read())
    rep = loaded.reverify(b, f, g)
    run.note("reloaded " + rep.summary())
    if not rep.passed:
        run.fail("reloaded domination families failed re-verification")
    return loaded, rep


def cmd_constants(run):
    for row in _constants(run, run.cfg.weights(run.grid)):
        run.note(f"{row['weight']}: a_p={fmt(row['a_p'])} a_1={fmt(row['a_1'])} "
                 f"a_inf={fmt(row['a_inf'])} mixed={fmt(row['mixed'])} r_w={fmt(row['r_w'])}")


def cmd_dominate(run):
    _constants(run, run.cfg.weights(run.grid))
    _dominate(run)


def cmd_thm11(run):
    cfg = run.cfg
    weights = cfg.weights(run.grid)
    _constants(run, weights)
    _reloaded_domination(run)
    b = cfg.symbol_fn(run.grid)
    probes = run.probes()
    rows = []
    for name, w in weights.items():
        rep = verify_thm11(w, cfg.p, cfg.r, b, run.omega, probes, cfg.seed, cfg.power_iters)
        rows.append({"weight": name, **rep.params, **rep.details, "passed": rep.passed})
        run.note(f"{name}: " + rep.summary())
        if not rep.passed:
            run.fail(f"new bound below old bound for {name}")
    write_csv(run.path("thm11.csv"), rows, THM11_COLUMNS)


def cmd_thm12(run):
    cfg = run.cfg
    if cfg.q is None:
        raise ConfigError("q", "verify-thm12 needs 1 < q < p")
    weights = cfg.weights(run.grid)
    _constants(run, weights)
    _reloaded_domination(run)
    b = cfg.symbol_fn(run.grid)
    probes = run.probes()
    one = Weight.constant(run.grid, 1.0)
    base = verify_thm12(one, cfg.p, cfg.q, b, run.omega, probes, cfg.seed, cfg.power_iters)
    c_fit = 4.0 * base.ratio
    run.note(f"baseline ratio={fmt(base.ratio)} c_fit={fmt(c_fit)}")
    rows = []
    for name, w in weights.items():
        rep = verify_thm12(w, cfg.p, cfg.q, b, run.omega, probes, cfg.seed, cfg.power_iters,
                           c_fit=c_fit)
        rows.append({"weight": name, "lhs": rep.lhs, "rhs": rep.rhs, "ratio": rep.ratio,
                     **rep.params, **rep.details, "passed": rep.passed})
        run.note(f"{name}: " + rep.summary())
        if not rep.passed:
            run.fail(f"lhs <= c_fit * a_inf * mixed * norms for {name}")
    write_csv(run.path("thm12.csv"), rows, THM12_COLUMNS)


def cmd_lemmas(run):
    cfg = run.cfg
    weights = cfg.weights(run.grid)
    _constants(run, weights)
    results = _dominate(run)
    families = [F for res, *_ in results for F in res.families]
    for F in families:
        ok, wit = verify_sparse(F)
        if not ok:
            run.fail(f"family on lattice {F.lattice_id} is not sparse")
    rng = np.random.default_rng(cfg.seed)
    fs = [GridFunction(run.grid, rng.normal(size=run.grid.shape))
          for _ in range(cfg.lemma_functions)]
    rows = []
    reps = lemma23_suite(run.grid, families, (Power(1.0), LlogL(), ExpL()), fs, weights)
    for rep in reps:
        rows.append({"check": rep.name, **rep.params, "lhs": rep.lhs, "rhs": rep.rhs,
                     "ratio": rep.ratio, "passed": rep.passed})
    bad = sum(not r.passed for r in reps)
    run.note(f"B_S bound: {len(reps)} checks, {bad} failures")
    if bad:
        run.fail("B_S bound")
    cnt = bad = 0
    for F in families:
        for p in (1.5, 2.0, 4.0):
            for fi, f in enumerate(fs[:4]):
                rep = carleson_verify(F, f, p)
                rows.append({"check": rep.name, "f": fi, **rep.params, "lhs": rep.lhs,
                             "rhs": rep.rhs, "ratio": rep.ratio, "passed": rep.passed})
                cnt += 1
                bad += not rep.passed
    run.note(f"Carleson embedding: {cnt} checks, {bad} failures")
    if bad:
        run.fail("Carleson embedding")
    bad = 0
    for name, w in weights.items():
        rep = reverse_holder_check(w, cfg.tau)
        rows.append({"check": rep.name, "weight": name, "lhs": rep.lhs, "rhs": rep.rhs,
                     "ratio": rep.ratio, "passed": rep.passed})
        run.note(f"{name}: " + rep.summary())
        bad += not rep.passed
        if cfg.q is not None:
            prof = cube_profile(w, cfg.p, cfg.q)
            viol = int(np.sum(prof["mixed"] > prof["aq"] * (1 + 1e-12)))
            worst = float(np.max(prof["mixed"] / prof["aq"]))
            rows.append({"check": "jensen", "weight": name, "lhs": worst, "rhs": 1.0,
                         "ratio": worst, "passed": viol == 0})
            run.note(f"{name}: jensen violations={viol} worst={fmt(worst)}")
            bad += viol > 0
    if bad:
        run.fail("reverse Hoelder or per-cube Jensen")
    write_csv(run.path("lemmas.csv"), rows, LEMMA_COLUMNS)


def cmd_scaling(run):
    cfg = run.cfg
    if cfg.weight != "power":
        raise ConfigError("weight", "scaling runs over a power family; set weight: power")
    weights = cfg.weights(run.grid)
    _constants(run, weights)
    deltas = [float(d) for d in (cfg.weight_params or [-0.2, -0.4, -0.6, -0.8])]
    q = cfg.q if cfg.q is not None and cfg.q < cfg.p else None
    rows = scaling_experiment(run.grid, deltas, cfg.p, q, cfg.r, cfg.symbol_fn(run.grid),
                              run.omega, run.probes(), cfg.seed, cfg.power_iters, cfg.tau)
    write_csv(run.path("scaling.csv"), rows, SCALING_COLUMNS)
    write_csv(run.path("scaling_loglog.csv"), loglog_rows(rows))
    ratios = [r["ratio_mix"] for r in rows]
    spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
    run.note(f"ratio_mix spread max/min={fmt(spread)}")
    if not all(r["new_le_old"] for r in rows):
        run.fail("new bound below old bound")
    a1 = [r["a_1"] for r in sorted(rows, key=lambda r: -r["delta"])]
    if any(y <= x for x, y in zip(a1, a1[1:])) and all(d < 0 for d in deltas):
        run.fail("a_1 increasing in |delta|")


def cmd_rdf(run):
    cfg = run.cfg
    weights = cfg.weights(run.grid)
    _constants(run, weights)
    rng = np.random.default_rng(cfg.seed)
    h = GridFunction(run.grid, np.abs(rng.normal(size=run.grid.shape)))
    rows = []
    for name, w in weights.items():
        res = rdf_R(h, w, cfg.p, cfg.r, cfg.max_terms, rng=np.random.default_rng(cfg.seed))
        pa, pb = res.property_a(h), res.property_b()
        rows.append({
            "weight": name, "p": cfg.p, "r": cfg.r, "S_norm_estimate": res.S_norm_estimate,
            "truncation_terms": res.truncation_terms, "tail_bound": res.tail_bound,
            "h_norm": res.h_norm, "Rh_norm": res.Rh_norm, "a1_of_product": res.a1_of_product,
            "a1_over_pprime": res.a1_of_product / conjugate(cfg.p), "doublings": res.doublings,
            "property_a": pa, "property_b": pb,
        })
        run.note(f"{name}: S_hat={fmt(res.S_norm_estimate)} a1={fmt(res.a1_of_product)} "
                 f"(a)={pa} (b)={pb}")
        if not (pa and pb):
            run.fail(f"majorant properties for {name}")
    write_csv(run.path("rdf.csv"), rows, RDF_COLUMNS)


HANDLERS = {
    "constants": cmd_constants,
    "dominate": cmd_dominate,
    "verify-thm11": cmd_thm11,
    "verify-thm12": cmd_thm12,
    "lemmas": cmd_lemmas,
    "scaling": cmd_scaling,
    "rdf": cmd_rdf,
}


# ----------------------------------------------------------------- entry


def run_cli(config_path=None, command="constants", out=None, seed=None, resolution=None):
    """Run one subcommand; returns the process exit code."""
    try:
        cfg = ExperimentConfig.load(config_path) if config_path else ExperimentConfig()
        cfg = cfg.replace(out=out, seed=seed, m=resolution)
        if command not in HANDLERS:
            raise ConfigError("command", f"unknown subcommand {command!r}")
        run = Run(cfg)
        run.header(command)
        HANDLERS[command](run)
        run.finish()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 3
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="roughsparse", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", metavar="PATH", help="YAML file of flat experiment keys")
    ap.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    ap.add_argument("--seed", metavar="N", type=int, help="random seed (overrides the config)")
    ap.add_argument("--resolution", metavar="M", type=int,
                    help="levels per axis, 2**M cells (overrides the config)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run_cli(args.config, args.command, args.out, args.seed, args.resolution)


if __name__ == "__main__":
    sys.exit(main())
