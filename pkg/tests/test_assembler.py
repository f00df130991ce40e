from collections import Counter
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from scipy import stats

from quadlimit import assembler as asm
from quadlimit.enumeration import build_count_table, iter_labeled_trees
from quadlimit.errors import ConfigError, TableRangeError
from quadlimit.spine import sojourn_exact
from quadlimit.trees import LabeledTree, ball_of_tree


def test_synthesis_basic():
    est = asm.synthesize_table(8, 256)
    vals = np.array([e.value for e in est])
    assert np.all(np.diff(vals) > 0)
    assert all(e.tail >= 0 and e.error_bound >= e.tail for e in est)
    assert asm.synthesize_ENj(3, 256) == est[2]
    vol = asm.ball_volume_table(8, 256)
    assert vol[0] == 1 and vol[8] == pytest.approx(1 + vals.sum())
    with pytest.raises(ConfigError):
        asm.synthesize_ENj(0, 256)


def test_synthesis_stable_in_cut():
    a = np.array([e.value for e in asm.synthesize_table(8, 512)])
    b = np.array([e.value for e in asm.synthesize_table(8, 1024)])
    bound = np.array([e.error_bound for e in asm.synthesize_table(8, 512)])
    assert np.all(np.abs(a - b) <= bound)


def test_truncated_expectation_below_full():
    cut = asm.truncated_expectation(6, 40)
    full = asm.synthesize_table(6, 1024)
    bias = asm.truncation_bias(6, 40)
    for e in full:
        assert cut[e.j] < e.truncated
        assert bias[e.j] >= e.value - cut[e.j] - 1e-9


def test_count_mode_matches_exact_truncation():
    k_cut, j_max, n = 10, 4, 20000
    x = asm.sample_uit_counts(j_max, k_cut, n, seed=3)
    exact = asm.truncated_expectation(j_max, k_cut)
    se = x.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(x.mean(axis=0) - exact)[1:] < 4 * se[1:])


def test_materialized_mode_matches_exact_truncation():
    k_cut, j_max, n = 6, 3, 3000
    h = np.array([asm.label_histogram(asm.sample_uit(j_max, k_cut, seed=s)).counts
                  for s in range(n)])
    exact = asm.truncated_expectation(j_max, k_cut)
    se = h.std(axis=0, ddof=1) / np.sqrt(n)
    assert np.all(np.abs(h.mean(axis=0) - exact)[1:] < 4 * se[1:])


def test_uit_tree_invariants():
    u = asm.sample_uit(3, 8, seed=12)
    t = asm.uit_to_tree(u)
    t.validate(root_label=1)
    assert [t.labels[v] for v in t.spine] == u.spine.states.tolist()
    for a, b in zip(t.spine, t.spine[1:]):
        assert t.parent[b] == a
    sizes = sum(l.n_edges + r.n_edges for l, r in u.branches)
    assert t.n_edges == sizes + u.n_spine - 1
    h = asm.label_histogram(u)
    assert h.counts[1:].tolist() == t.label_counts(3)[1:]
    with pytest.raises(TableRangeError):
        asm.label_histogram(u, 4)


def test_spine_sojourn_in_truncated_tree():
    # mean number of spine visits to level 1 before exit is close to E_1[S_1]
    n = 4000
    visits = [int(np.sum(asm.sample_uit(2, 12, seed=s).spine.states == 1)) for s in range(n)]
    se = np.std(visits, ddof=1) / np.sqrt(n)
    assert abs(np.mean(visits) - sojourn_exact(1).value) < 4 * se + 1e-6


def test_finite_sampler_uniform_small():
    table = build_count_table(3, 4)
    sampler = asm.FiniteUniformSampler(table)
    rng = np.random.default_rng(1)
    for N in (1, 2, 3):
        trees = [t for t in iter_labeled_trees(N, 1)]
        reps = 400 * len(trees)
        seen = Counter(sampler.sample(N, rng).to_nested() for _ in range(reps))
        assert set(seen) == set(trees)
        obs = [seen[t] for t in trees]
        assert stats.chisquare(obs).pvalue > 1e-4


def test_depth_limited_ball_law():
    # the ball drawn with depth_limit has the law of the ball of a full tree
    N, r, reps = 5, 1, 20000
    exact = Counter(ball_of_tree(LabeledTree.from_nested(t), r).to_nested()
                    for t in iter_labeled_trees(N, 1))
    total = sum(exact.values())
    sampler = asm.FiniteUniformSampler(build_count_table(N, N + 1))
    rng = np.random.default_rng(7)
    seen = Counter(sampler.sample(N, rng, depth_limit=r).to_nested() for _ in range(reps))
    keys = sorted(exact, key=repr)
    assert set(seen) <= set(keys)
    obs = [seen[k] for k in keys]
    expected = [reps * exact[k] / total for k in keys]
    assert stats.chisquare(obs, expected).pvalue > 1e-4


def test_sampler_guards():
    table = build_count_table(4, 2)
    with pytest.raises(TableRangeError):
        asm.FiniteUniformSampler(table).sample(4, 0)
    with pytest.raises(ConfigError):
        asm.sample_finite_uniform(-1, 0)


def test_cylinder_exact_values():
    assert asm.cylinder_measure(LabeledTree.from_compact("1[1]")) == Fraction(1, 12)
    assert asm.cylinder_measure(LabeledTree.from_compact("1[2]")) == Fraction(23, 48)
    with pytest.raises(ConfigError):
        asm.cylinder_measure(LabeledTree.from_compact("1[2]"), r=2)


def test_height_one_cylinders_sum_to_one():
    # the measure depends only on how many rim labels are 1 and 2
    total = Fraction(0)
    for m in range(1, 60):
        for a in range(m + 1):
            pat = LabeledTree(1)
            for lab in [2] * a + [1] * (m - a):
                pat.add_child(0, lab)
            total += comb(m, a) * asm.cylinder_measure(pat)
    assert 0 < 1 - total < 1e-30


def test_height_two_cylinders_consistent():
    # summing over second generations of a height-one pattern recovers it
    base = asm.cylinder_measure(LabeledTree.from_compact("1[2]"))
    total = Fraction(0)
    for m in range(1, 30):
        for a in range(m + 1):
            for b in range(m - a + 1):
                kids = [3] * a + [2] * b + [1] * (m - a - b)
                pat = LabeledTree(1)
                c = pat.add_child(0, 2)
                for lab in kids:
                    pat.add_child(c, lab)
                mult = comb(m, a) * comb(m - a, b)
                total += mult * asm.cylinder_measure(pat)
    assert 0 < base - total < Fraction(1, 10**9)


def test_empirical_cylinder_small():
    # at finite N the ball "1[2]" means the root has a single child of label 2
    N = 30
    pat = LabeledTree.from_compact("1[2]")
    rep = asm.empirical_cylinder_check([N], pat, 4000, seed=5)
    row = rep.rows[0]
    t = build_count_table(N, 2)
    exact = float(Fraction(t.D(N - 1, 2), t.D(N, 1)))
    assert rep.limit == Fraction(23, 48)
    assert row.hits == round(row.frequency * 4000)
    assert abs(row.frequency - exact) < 4 * row.stderr


def test_synthesis_monotone_in_cut():
    vals = [asm.synthesize_ENj(8, kc).truncated for kc in (128, 256, 512, 1024)]
    inc = np.diff(vals)
    assert np.all(inc > 0) and np.all(np.diff(inc) < 0)


def test_truncation_bias_scales_inversely_with_cut():
    e8 = asm.synthesize_ENj(8, 2048).value
    rel = {kc: asm.truncation_bias(8, kc)[8] / e8 for kc in (512, 1024, 2048)}
    assert rel[1024] < 0.01
    assert rel[512] / rel[1024] == pytest.approx(2, rel=0.05)
    assert rel[1024] / rel[2048] == pytest.approx(2, rel=0.05)
