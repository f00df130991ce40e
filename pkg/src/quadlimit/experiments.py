"""Experiment drivers behind the command line subcommands.

Each driver takes a parameter dict and a seed and returns an
:class:`ExperimentResult`: CSV tables, a JSON-able summary and optional
plain-text artifacts. Drivers do no I/O.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import assembler, branches, enumeration, quadmap, spine
from .errors import ConfigError
from .fitting import fit_exponent
from .rng import make_rng
from .trees import LabeledTree

DEFAULTS = {
    "constants": {"k_max": 10},
    "counts": {"n_max": 30, "k_max": 4, "audit_n": 7, "audit_k": 4, "method": "auto",
               "cache_dir": None},
    "sojourn": {"k_values": [100, 1000, 10000], "tol": 1e-12, "mc_k": 50,
                "replicas": 10000, "horizon": None},
    "gkernel": {"k_max": 500, "j_max": 2000, "j_export": 100, "k0": 5, "j0": 1000,
                "window": [50, 500]},
    "growth": {"j_max": 64, "k_cut": 2048, "window": [8, 64]},
    "sample-tree": {"mode": "finite", "n": 20, "k_cut": 8, "j_target": 4},
    "map-quad": {"trees": 20, "n": 50},
    "cylinder": {"n_grid": [50, 200, 800], "replicas": 10000,
                 "patterns": ["1[1]", "1[2]"]},
}


@dataclass
class ExperimentResult:
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    summary: dict = field(default_factory=dict)
    texts: dict = field(default_factory=dict)  # file name -> text


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def _fit_dict(fit) -> dict:
    return {"slope": fit.slope, "intercept": fit.intercept, "stderr": fit.stderr,
            "window": list(fit.window), "n_points": fit.n_points}


def run_constants(p, seed) -> ExperimentResult:
    k_max = int(p["k_max"])
    if k_max < 1:
        raise ConfigError("k_max must be >= 1")
    rows = []
    for k in range(1, k_max + 1):
        bd = spine.bd_params(k)
        rows.append([k, _frac(enumeration.z_value(k)), _frac(enumeration.w_value(k)),
                     _frac(enumeration.d_value(k)), _frac(bd.p), _frac(bd.q), _frac(bd.r)])
    return ExperimentResult({"constants": (["k", "z", "w", "d", "p", "q", "r"], rows)},
                            {"k_max": k_max})


def run_counts(p, seed) -> ExperimentResult:
    n_max, k_max = int(p["n_max"]), int(p["k_max"])
    if p.get("cache_dir"):
        table = enumeration.cached_count_table(n_max, k_max, p["cache_dir"], method=p["method"])
    else:
        table = enumeration.build_count_table(n_max, k_max, method=p["method"])
    rows = [[N, k, table.D(N, k), table.E(N, k)]
            for N in range(n_max + 1) for k in range(1, k_max + 1)]
    audit = []
    for N in range(min(int(p["audit_n"]), n_max, enumeration.BRUTE_FORCE_MAX_N) + 1):
        for k in range(1, min(int(p["audit_k"]), k_max) + 1):
            b = enumeration.count_k_labeled_brute(N, k)
            audit.append([N, k, table.D(N, k), b, int(b == table.D(N, k))])
    closed = all(table.D(N, 1) == enumeration.count_well_labeled(N) for N in range(n_max + 1))
    return ExperimentResult(
        {"counts": (["N", "k", "D", "E"], rows),
         "audit": (["N", "k", "table", "brute", "match"], audit)},
        {"method": table.method, "closed_form_match": closed,
         "audit_all_match": all(r[-1] for r in audit)})


def run_sojourn(p, seed) -> ExperimentResult:
    rows = []
    for k in p["k_values"]:
        e = spine.sojourn_exact(int(k), float(p["tol"]))
        rows.append([int(k), e.value, e.value / k, e.value / k - 3 / 7, e.error_bound, e.n_terms])
    summary = {}
    tables = {"sojourn_exact": (["k", "E_S", "ratio", "gap_to_3_7", "error_bound", "terms"], rows)}
    if p.get("mc_k"):
        k = int(p["mc_k"])
        mc = spine.sojourn_mc(k, int(p["replicas"]), p.get("horizon"), seed=seed)
        ex = spine.sojourn_exact(k)
        z = (mc.value - ex.value) / mc.stderr
        tables["sojourn_mc"] = (["k", "replicas", "mc_mean", "stderr", "exact", "z", "censored"],
                                [[k, mc.replicas, mc.value, mc.stderr, ex.value, z,
                                  mc.censored_fraction]])
        summary["mc_z"] = z
    return ExperimentResult(tables, summary)


def run_gkernel(p, seed) -> ExperimentResult:
    K = branches.g_kernel_exact(int(p["k_max"]), int(p["j_max"]))
    lo, hi = p["window"]
    k0, j0 = int(p["k0"]), int(p["j0"])
    j = np.arange(1, K.j_max + 1)
    fit_j = fit_exponent(np.column_stack([j, K.G[k0 - 1]]), (lo, hi))
    kk = np.arange(1, min(K.k_max, j0 - 1) + 1)
    fit_k = fit_exponent(np.column_stack([kk, K.G[kk - 1, j0 - 1]]), (lo, hi))
    m = K.k_max
    sym = float(np.max(np.abs(K.G[:, :m] - K.G[:, :m].T)) / np.max(K.G))
    je = min(int(p["j_export"]), K.j_max)
    rows = [[k, jj, float(K.G[k - 1, jj - 1])] for k in range(1, min(m, je) + 1)
            for jj in range(1, je + 1)]
    diag = [[k, float(K.G[k - 1, k - 1]), float(K.G[k - 1, k - 1]) / k] for k in range(1, m + 1)]
    return ExperimentResult(
        {"gkernel": (["k", "j", "G"], rows), "gkernel_diagonal": (["k", "G_kk", "G_kk_over_k"], diag)},
        {"residual_norm": K.residual_norm, "symmetry_error": sym,
         "fit_decay_in_j": _fit_dict(fit_j), "fit_growth_in_k": _fit_dict(fit_k)})


def run_growth(p, seed) -> ExperimentResult:
    j_max, k_cut = int(p["j_max"]), int(p["k_cut"])
    est = assembler.synthesize_table(j_max, k_cut)
    vol = assembler.ball_volume_table(j_max, k_cut)
    rows = [[e.j, e.value, e.truncated, e.tail, e.error_bound, e.value / e.j**3, vol[e.j]]
            for e in est]
    lo, hi = p["window"]
    fit_n = fit_exponent([(e.j, e.value) for e in est], (lo, hi))
    fit_b = fit_exponent([(r, vol[r]) for r in range(1, j_max + 1)], (lo, hi))
    return ExperimentResult(
        {"growth": (["j", "E_Nj", "truncated", "tail", "tail_bound", "E_Nj_over_j3", "E_ball"],
                    rows)},
        {"fit_E_Nj": _fit_dict(fit_n), "fit_E_ball": _fit_dict(fit_b), "k_cut": k_cut})


def run_sample_tree(p, seed) -> ExperimentResult:
    mode = p["mode"]
    if mode == "finite":
        t = assembler.sample_finite_uniform(int(p["n"]), seed)
        summary = {"mode": mode, "N": t.n_edges}
    elif mode == "uit":
        u = assembler.sample_uit(int(p["j_target"]), int(p["k_cut"]), seed)
        t = assembler.uit_to_tree(u)
        h = assembler.label_histogram(u)
        summary = {"mode": mode, "spine_length": u.n_spine, "vertices": t.n_vertices,
                   "label_counts": h.counts[1:].tolist(), "bias_bound": h.bias_bound[1:].tolist()}
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    texts = {"tree.txt": t.to_text()}
    if t.n_vertices <= 200:
        texts["tree_nested.txt"] = t.to_compact() + "\n"
    return ExperimentResult({}, summary, texts)


def run_map_quad(p, seed) -> ExperimentResult:
    n_trees, n = int(p["trees"]), int(p["n"])
    table = enumeration.cached_count_table(n, n + 1)
    sampler = assembler.FiniteUniformSampler(table)
    rng = make_rng(seed)
    rows, texts = [], {}
    for i in range(n_trees):
        N = 1 + i % n
        t = sampler.sample(N, rng)
        q = quadmap.build_q(t, check=False)
        rep = quadmap.verify_faces(q.pre_deletion)
        probs = quadmap.check_quadrangulation(t, q)
        faces = q.map.faces()
        rows.append([i, N, q.map.n_vertices, q.map.n_edges, len(faces), rep.n_triangles,
                     rep.n_quadrangles, len(rep.violations), int(not probs)])
        if i == 0:
            texts["map_0.txt"] = q.map.to_text()
            texts["tree_0.txt"] = t.to_text()
    return ExperimentResult(
        {"map_quad": (["tree", "N", "V", "E", "F", "pre_triangles", "pre_quadrangles",
                       "violations", "ok"], rows)},
        {"all_ok": all(r[-1] for r in rows)}, texts)


def run_cylinder(p, seed) -> ExperimentResult:
    rows = []
    ss = np.random.SeedSequence(seed).spawn(len(p["patterns"]))
    for pat, s in zip(p["patterns"], ss):
        t = LabeledTree.from_compact(pat)
        rep = assembler.empirical_cylinder_check(list(p["n_grid"]), t, int(p["replicas"]), s)
        for r, tot in zip(rep.rows, rep.shape_totals):
            rows.append([pat, _frac(rep.limit), r.N, r.replicas, r.hits, r.frequency, r.stderr,
                         r.gap, tot])
    return ExperimentResult(
        {"cylinder": (["pattern", "limit", "N", "replicas", "hits", "frequency", "stderr",
                       "gap", "shape_total"], rows)}, {})


RUNNERS = {
    "constants": run_constants,
    "counts": run_counts,
    "sojourn": run_sojourn,
    "gkernel": run_gkernel,
    "growth": run_growth,
    "sample-tree": run_sample_tree,
    "map-quad": run_map_quad,
    "cylinder": run_cylinder,
}
