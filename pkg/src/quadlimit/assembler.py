"""Tree laws and label-occurrence counts.

* Truncated uniform infinite tree: a spine driven by the birth-and-death
  chain with two independent branches grafted at every spine vertex. The
  truncation keeps every vertex whose ancestral path (itself included)
  stays at labels ``<= k_cut``; the spine therefore stops just before its
  first passage above ``k_cut``. Expected label counts of the truncated
  tree are known exactly, so the truncation bias is exact as well.
* Exactly uniform finite well-labeled trees, sampled by the recursive
  method from exact counts.
* Cylinder probabilities of the infinite law and their finite-size
  Monte-Carlo check.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .branches import BranchSampler, DEFAULT_SIZE_CAP, gw_label_counts, kernel_columns
from .enumeration import CountTable, cached_count_table, d_value, w_value
from .errors import ConfigError, HorizonExceededError, TableRangeError
from .rng import make_rng, randbelow, spawn_rngs
from .spine import SpinePath, _step_tables, killed_visits, sojourn_table
from .trees import LabeledTree, ball_of_tree

__all__ = [
    "TruncatedUIT", "LabelHistogram", "ENjEstimate", "sample_uit", "sample_uit_counts",
    "label_histogram", "uit_to_tree", "truncated_expectation", "synthesize_ENj",
    "synthesize_table", "ball_volume_table", "sample_finite_uniform", "FiniteUniformSampler",
    "ball_of_tree", "cylinder_measure", "empirical_cylinder_check", "CylinderReport",
]


# ---------------------------------------------------------------------------
# exact expectations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ENjEstimate:
    """Expected number of label-``j`` vertices of the infinite tree.

    ``truncated`` sums spine levels ``k <= k_cut``; ``tail`` estimates the
    remaining levels as ``C j^4 / k_cut`` with ``C`` calibrated on the top
    decade of levels; ``error_bound`` uses the largest calibration value.
    """

    j: int
    k_cut: int
    truncated: float
    tail: float
    error_bound: float
    tail_constant: float

    @property
    def value(self) -> float:
        return self.truncated + self.tail


def _kernel_buffer(k_cut: int) -> int:
    return k_cut + max(64, k_cut // 2)


@lru_cache(maxsize=16)
def _synthesis(j_max: int, k_cut: int):
    if k_cut < j_max:
        raise ConfigError("need k_cut >= j")
    S = sojourn_table(k_cut)
    n = _kernel_buffer(k_cut)
    G = kernel_columns(np.arange(1, j_max + 1), n)  # G[k-1, j-1] = G(k, j)
    k = np.arange(1, k_cut + 1)
    weighted = S[k][:, None] * G[:k_cut]
    trunc = 2.0 * weighted.sum(axis=0) - S[1 : j_max + 1]
    lo = max(1, k_cut // 10)
    top = weighted[lo - 1 :] * (np.arange(lo, k_cut + 1) ** 2)[:, None]
    out = []
    for j in range(1, j_max + 1):
        a_last = float(top[-1, j - 1])
        a_max = float(top[:, j - 1].max())
        out.append(ENjEstimate(j, k_cut, float(trunc[j - 1]), 2.0 * a_last / k_cut,
                               2.0 * a_max / k_cut, a_last / j**4))
    return tuple(out)


def synthesize_table(j_max: int, k_cut: int) -> list[ENjEstimate]:
    """:func:`synthesize_ENj` for ``j = 1 .. j_max`` sharing one kernel solve."""
    return list(_synthesis(int(j_max), int(k_cut)))


def synthesize_ENj(j: int, k_cut: int) -> ENjEstimate:
    """``E[N_j] = 2 sum_k E_1[S_k] G(k, j) - E_1[S_j]`` truncated at
    ``k_cut`` plus a calibrated tail estimate."""
    if j < 1:
        raise ConfigError("j must be >= 1")
    return _synthesis(int(j), int(k_cut))[j - 1]


def ball_volume_table(j_max: int, k_cut: int) -> np.ndarray:
    """``E|B_r| = 1 + sum_{j<=r} E[N_j]`` for ``r = 0 .. j_max``."""
    vals = [e.value for e in synthesize_table(j_max, k_cut)]
    return 1.0 + np.concatenate([[0.0], np.cumsum(vals)])


@lru_cache(maxsize=16)
def truncated_expectation(j_max: int, k_cut: int) -> np.ndarray:
    """Exact ``E[N_j]`` of the tree truncated at ``k_cut``, ``j = 0 .. j_max``.

    ``2 sum_{k<=k_cut} V(k) G_cut(k, j) - V(j)`` where ``V`` counts spine
    visits before the first passage above ``k_cut`` and ``G_cut`` is the
    kernel of branches pruned above ``k_cut``.
    """
    if j_max > k_cut:
        raise ConfigError("need j_max <= k_cut")
    V = killed_visits(k_cut)
    G = kernel_columns(np.arange(1, j_max + 1), k_cut, boundary="dirichlet")
    out = np.zeros(j_max + 1)
    out[1:] = 2.0 * V[1:] @ G - V[1 : j_max + 1]
    return out


@lru_cache(maxsize=16)
def truncation_bias(j_max: int, k_cut: int, reference_cut: int | None = None) -> np.ndarray:
    """``E[N_j] - E[N_j(truncated)]`` for ``j = 0 .. j_max``.

    The full expectation is evaluated at ``reference_cut`` (default
    ``max(16 k_cut, 2048)``) plus its calibrated tail and error bound, so
    the returned value is an upper bound on the bias."""
    ref = reference_cut or max(16 * k_cut, 2048)
    full = synthesize_table(j_max, ref)
    cut = truncated_expectation(j_max, k_cut)
    out = np.zeros(j_max + 1)
    for e in full:
        out[e.j] = e.truncated + max(e.tail, e.error_bound) - cut[e.j]
    return out


# ---------------------------------------------------------------------------
# truncated infinite tree
# ---------------------------------------------------------------------------

@dataclass
class TruncatedUIT:
    """Spine ``X_0 .. X_{n-1}`` (all ``<= k_cut``) with branch pairs.

    ``branches[t] = (left, right)``, both rooted at label ``X_t`` and
    pruned above ``k_cut``.
    """

    spine: SpinePath
    branches: list
    k_cut: int
    completeness_labels: int
    bias_bound: np.ndarray = field(repr=False)

    @property
    def n_spine(self) -> int:
        return len(self.spine.states)


@dataclass
class LabelHistogram:
    counts: np.ndarray  # index j = 0 .. j_max, entry 0 unused
    bias_bound: np.ndarray

    @property
    def j_max(self) -> int:
        return len(self.counts) - 1


def _default_step_budget(k_cut: int) -> int:
    return 200 * k_cut * k_cut + 10_000


def _run_spine_until_exit(k_cut: int, rng, max_steps: int) -> np.ndarray:
    up, down = _step_tables(k_cut + 2)
    states = [1]
    x = 1
    while True:
        u = rng.random(4096)
        for val in u.tolist():
            if val < up[x]:
                x += 1
            elif val >= down[x]:
                x -= 1
            if x > k_cut:
                return np.asarray(states, dtype=np.int64)
            states.append(x)
            if len(states) > max_steps:
                raise HorizonExceededError(
                    f"spine did not pass above {k_cut} within {max_steps} steps")


def sample_uit(j_target: int, k_cut: int, seed, size_cap: int = 10**7,
               max_steps: int | None = None) -> TruncatedUIT:
    """Materialize the infinite tree truncated at ``k_cut``.

    Every label-``j`` vertex, ``j <= j_target``, whose ancestral path stays
    at labels ``<= k_cut`` is present; ``bias_bound[j]`` bounds the
    expected number of missing ones.
    """
    if not k_cut > j_target >= 1:
        raise ConfigError("need k_cut > j_target >= 1")
    spine_rng, branch_rng = spawn_rngs(seed, 2)
    states = _run_spine_until_exit(k_cut, spine_rng, max_steps or _default_step_budget(k_cut))
    sampler = BranchSampler(branch_rng, size_cap, max_label=k_cut)
    branches = [(sampler.sample(int(x)), sampler.sample(int(x))) for x in states]
    return TruncatedUIT(SpinePath(states, seed), branches, k_cut, j_target,
                        truncation_bias(j_target, k_cut))


def label_histogram(t: TruncatedUIT, j_max: int | None = None) -> LabelHistogram:
    """Label counts with spine vertices counted once."""
    j_max = t.completeness_labels if j_max is None else j_max
    if j_max > t.completeness_labels:
        raise TableRangeError(f"j_max={j_max} beyond completeness {t.completeness_labels}")
    counts = np.zeros(j_max + 1, dtype=np.int64)
    for x, (left, right) in zip(t.spine.states, t.branches):
        c = np.bincount(left.labels + right.labels, minlength=j_max + 1)[: j_max + 1]
        counts += c
        if x <= j_max:
            counts[x] -= 1
    return LabelHistogram(counts, t.bias_bound[: j_max + 1].copy())


def uit_to_tree(t: TruncatedUIT) -> LabeledTree:
    """Single planar tree. At spine vertex ``e_t`` the children are, in
    contour order, the right branch's children, then ``e_{t+1}``, then the
    left branch's children; so the right side of the spine is traversed
    first."""
    out = LabeledTree(int(t.spine.states[0]))
    spine_ids = [0]

    def graft(src: LabeledTree, at: int, kids):
        stack = [(c, at) for c in reversed(kids)]
        while stack:
            v, p = stack.pop()
            nv = out.add_child(p, src.labels[v])
            stack.extend((c, nv) for c in reversed(src.children[v]))

    for i, (left, right) in enumerate(t.branches):
        e = spine_ids[-1]
        graft(right, e, right.children[0])
        if i + 1 < len(t.branches):
            spine_ids.append(out.add_child(e, int(t.spine.states[i + 1])))
        graft(left, e, left.children[0])
    out.spine = spine_ids
    out._reorder_preorder()
    return out


def sample_uit_counts(j_max: int, k_cut: int, replicas: int, seed, batch: int = 500,
                      max_steps: int | None = None) -> np.ndarray:
    """Label counts ``N_j``, ``j = 0 .. j_max``, of ``replicas`` independent
    truncated trees, without building them. Same law as
    ``label_histogram(sample_uit(j_max, k_cut, ...))``."""
    if not k_cut > j_max >= 1:
        raise ConfigError("need k_cut > j_max >= 1")
    budget = max_steps or _default_step_budget(k_cut)
    up, down = _step_tables(k_cut + 2)
    n_batches = -(-replicas // batch)
    out = np.empty((replicas, j_max + 1), dtype=np.int64)
    width = k_cut + 2
    for b, rng in enumerate(spawn_rngs(seed, n_batches)):
        m = min(batch, replicas - b * batch)
        visits = np.zeros(m * width, dtype=np.int64)
        x = np.ones(m, dtype=np.int64)
        live = np.arange(m)
        steps = 0
        while live.size:
            visits += np.bincount(live * width + x, minlength=m * width)
            u = rng.random(live.size)
            x = x + (u < up[x]) - (u >= down[x])
            keep = x <= k_cut
            live, x = live[keep], x[keep]
            steps += 1
            if steps > budget:
                raise HorizonExceededError(
                    f"spine did not pass above {k_cut} within {budget} steps")
        V = visits.reshape(m, width)
        rows, labs = np.nonzero(V)
        counts, _ = gw_label_counts(rows, labs, 2 * V[rows, labs], m, j_max, rng,
                                    max_label=k_cut)
        out[b * batch : b * batch + m] = counts - V[:, : j_max + 1]
    out[:, 0] = 0
    return out


# ---------------------------------------------------------------------------
# exactly uniform finite trees
# ---------------------------------------------------------------------------

class FiniteUniformSampler:
    """Recursive-method sampler of uniform ``k``-labeled trees.

    The root's planted subtrees are generated one at a time: the first
    has ``M`` edges with probability ``E[M,k] D[n-M,k] / D[n,k]`` and its
    top vertex has label ``k+e`` with probability ``D[M-1,k+e] / E[M,k]``.
    Every draw is an exact big-integer uniform, so the output law is
    exactly uniform.
    """

    def __init__(self, table: CountTable):
        self.table = table
        self._prefix = {}

    def _size_prefix(self, n: int, k: int):
        key = (n, k)
        pre = self._prefix.get(key)
        if pre is None:
            t = self.table
            acc = 0
            pre = []
            for M in range(1, n + 1):
                acc += t.E(M, k) * t.D(n - M, k)
                pre.append(acc)
            self._prefix[key] = pre
        return pre

    def sample(self, N: int, rng, root_label: int = 1, depth_limit: int | None = None) -> LabeledTree:
        """Uniform tree with ``N`` edges; with ``depth_limit`` only the ball
        of that radius is generated (its law is the ball of a uniform tree)."""
        t = self.table
        if N > t.n_max:
            raise TableRangeError(f"N={N} beyond table n_max={t.n_max}")
        reach = N if depth_limit is None else min(N, depth_limit)
        if root_label + reach > t.k_max:
            raise TableRangeError(f"labels up to {root_label + reach} need k_max >= "
                                  f"{root_label + reach}")
        rng = make_rng(rng)
        tree = LabeledTree(root_label)
        tasks = [(0, N, 0)]
        while tasks:
            v, n, d = tasks.pop()
            if depth_limit is not None and d >= depth_limit:
                continue
            k = tree.labels[v]
            pending = []
            while n > 0:
                pre = self._size_prefix(n, k)
                r = randbelow(rng, pre[-1])
                M = bisect_right(pre, r) + 1
                r2 = randbelow(rng, t.E(M, k))
                for e in (-1, 0, 1):
                    c = k + e
                    if c < 1:
                        continue
                    wgt = t.D(M - 1, c)
                    if r2 < wgt:
                        break
                    r2 -= wgt
                child = tree.add_child(v, c)
                pending.append((child, M - 1, d + 1))
                n -= M
            tasks.extend(reversed(pending))
        return tree


_SAMPLERS: list = []


def _finite_sampler(n_max: int, k_max: int) -> FiniteUniformSampler:
    # reuse any sampler whose table already covers the request
    for s in _SAMPLERS:
        if s.table.covers(n_max, k_max):
            return s
    s = FiniteUniformSampler(cached_count_table(n_max, k_max))
    _SAMPLERS.append(s)
    del _SAMPLERS[:-4]
    return s


def sample_finite_uniform(N: int, seed, table: CountTable | None = None,
                          depth_limit: int | None = None) -> LabeledTree:
    """Uniformly random well-labeled tree with ``N`` edges."""
    if N < 0:
        raise ConfigError("N must be >= 0")
    if table is None:
        k_need = 1 + (N if depth_limit is None else min(N, depth_limit))
        sampler = _finite_sampler(N, max(k_need, 1))
    else:
        sampler = FiniteUniformSampler(table)
    return sampler.sample(N, seed, depth_limit=depth_limit)


# ---------------------------------------------------------------------------
# cylinder sets
# ---------------------------------------------------------------------------

def cylinder_measure(pattern: LabeledTree, r: int | None = None) -> Fraction:
    """Probability that the infinite tree rooted at ``pattern``'s root label
    has ball of radius ``height(pattern)`` equal to ``pattern``:
    ``12^{-|p|} sum_t (d_{k_t}/d_k) prod_{s != t} w_{k_s}`` over the
    vertices at maximal depth."""
    pattern.validate()
    dep = pattern.depths()
    h = max(dep)
    if r is not None and r != h:
        raise ConfigError(f"pattern height {h} differs from radius {r}")
    k = pattern.root_label
    rim = [pattern.labels[v] for v in range(pattern.n_vertices) if dep[v] == h]
    ws = [w_value(x) for x in rim]
    total = Fraction(0)
    for t, kt in enumerate(rim):
        prod = Fraction(1)
        for s, wv in enumerate(ws):
            if s != t:
                prod *= wv
        total += d_value(kt) * prod
    return total / d_value(k) / Fraction(12) ** pattern.n_edges


@dataclass
class CylinderRow:
    N: int
    replicas: int
    hits: int
    frequency: float
    stderr: float
    limit: float
    gap: float


@dataclass
class CylinderReport:
    pattern: str
    limit: Fraction
    rows: list
    shape_totals: list  # per N: summed frequency of all observed ball shapes

    def gaps(self):
        return [row.gap for row in self.rows]


def empirical_cylinder_check(N_grid, pattern: LabeledTree, replicas: int, seed,
                             tables: dict | None = None) -> CylinderReport:
    """Frequency of ``ball_r(tree) == pattern`` over uniform trees of each
    size in ``N_grid``, where ``r`` is the height of ``pattern``."""
    limit = cylinder_measure(pattern)
    r = pattern.height()
    target = pattern.to_nested()
    rows, totals = [], []
    for N, rng in zip(N_grid, spawn_rngs(seed, len(N_grid))):
        table = (tables or {}).get(N) or cached_count_table(N, 1 + min(N, r))
        sampler = FiniteUniformSampler(table)
        shapes = {}
        for _ in range(replicas):
            key = sampler.sample(N, rng, depth_limit=r).to_nested()
            shapes[key] = shapes.get(key, 0) + 1
        hits = shapes.get(target, 0)
        f = hits / replicas
        se = math.sqrt(max(f * (1 - f), 1e-300) / replicas)
        rows.append(CylinderRow(N, replicas, hits, f, se, float(limit), f - float(limit)))
        totals.append(sum(shapes.values()) / replicas)
    return CylinderReport(pattern.to_compact(), limit, rows, totals)
