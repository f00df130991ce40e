"""Finite branches hanging off the spine and their occurrence kernel.

A branch rooted at label ``l`` is a multitype Galton-Watson tree. Each
individual of type ``l`` performs independent trials with outcomes
``l+1``, ``l-1``, ``l`` and stop, of probabilities ``w_{l+1}/12``,
``w_{l-1}/12``, ``w_l/12`` and ``1/w_l``; its children are the outcomes
drawn before the first stop.

``G(k, j)`` is the expected number of label-``j`` vertices in a branch
rooted at ``k``. It solves the symmetric difference equation

    G(k, j) = delta_kj + (w_j / 12) sum_e w_{j+e} G(k, j+e).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .enumeration import iter_labeled_trees, w_array, w_value
from .errors import CapExceededError, ConfigError
from .rng import make_rng
from .trees import LabeledTree
from .tridiag import solve_tridiagonal

DEFAULT_SIZE_CAP = 10**6


@dataclass(frozen=True)
class OffspringLaw:
    label: int
    p_up: Fraction
    p_down: Fraction
    p_stay: Fraction
    p_stop: Fraction

    @property
    def mean_offspring(self) -> Fraction:
        return (1 - self.p_stop) / self.p_stop


def offspring_law(label: int) -> OffspringLaw:
    l = int(label)
    if l < 1:
        raise ConfigError("label must be >= 1")
    return OffspringLaw(
        l,
        w_value(l + 1) / 12,
        w_value(l - 1) / 12,
        w_value(l) / 12,
        1 / w_value(l),
    )


def expected_branch_size(label: int) -> Fraction:
    """Mean edge count ``(3l^2 + 9l - 2)/10`` of a branch rooted at ``l``."""
    l = int(label)
    if l < 1:
        raise ConfigError("label must be >= 1")
    return Fraction(3 * l * l + 9 * l - 2, 10)


def branch_probability(tree) -> Fraction:
    """Exact probability ``12^{-|w|} / w_k`` of a finite branch.

    ``tree`` is a :class:`LabeledTree` or a nested tuple."""
    if isinstance(tree, LabeledTree):
        n, k = tree.n_edges, tree.root_label
    else:
        n, k = _nested_size(tree), tree[0]
    return Fraction(1, 12**n) / w_value(k)


def _nested_size(nested) -> int:
    total = 0
    stack = [nested]
    while stack:
        _, kids = stack.pop()
        total += len(kids)
        stack.extend(kids)
    return total


# ---------------------------------------------------------------------------
# planar sampler
# ---------------------------------------------------------------------------

class BranchSampler:
    """Reusable depth-first branch sampler bound to one random stream.

    Parameters
    ----------
    rng : seed or Generator
    size_cap : int
        Maximum number of edges; larger trees raise :class:`CapExceededError`.
    max_label : int or None
        If set, children whose label exceeds it are pruned together with
        their progeny.
    """

    def __init__(self, rng, size_cap: int = DEFAULT_SIZE_CAP, max_label: int | None = None):
        self.rng = make_rng(rng)
        self.size_cap = size_cap
        self.max_label = max_label
        self._thr = []  # per label: (up, up+down, up+down+stay)
        self._buf = np.empty(0)
        self._pos = 0

    def _thresholds(self, l: int):
        while len(self._thr) <= l:
            m = len(self._thr)
            if m == 0:
                self._thr.append((0.0, 0.0, 0.0))
                continue
            law = offspring_law(m)
            a = float(law.p_up)
            b = a + float(law.p_down)
            c = b + float(law.p_stay)
            self._thr.append((a, b, c))
        return self._thr[l]

    def _uniforms(self):
        # refill in large chunks; the Python loop consumes them one at a time
        self._buf = self.rng.random(1 << 14).tolist()
        self._pos = 0

    def sample(self, label: int) -> LabeledTree:
        t = LabeledTree(label)
        labels, children, parent = t.labels, t.children, t.parent
        cap = self.size_cap
        max_label = self.max_label
        buf, pos = self._buf, self._pos
        stack = [0]
        while stack:
            v = stack.pop()
            l = labels[v]
            a, b, c = self._thresholds(l)
            kids = children[v]
            while True:
                if pos >= len(buf):
                    self._uniforms()
                    buf, pos = self._buf, 0
                u = buf[pos]
                pos += 1
                if u >= c:
                    break
                if u < a:
                    lab = l + 1
                elif u < b:
                    lab = l - 1
                else:
                    lab = l
                if max_label is not None and lab > max_label:
                    continue
                n = len(labels)
                if n > cap:
                    self._pos = pos
                    raise CapExceededError(f"branch from label {label} exceeded {cap} edges")
                labels.append(lab)
                parent.append(v)
                children.append([])
                kids.append(n)
            stack.extend(reversed(kids))
        self._buf, self._pos = buf, pos
        return t


def sample_branch(label: int, seed, size_cap: int = DEFAULT_SIZE_CAP,
                  max_label: int | None = None) -> LabeledTree:
    """Draw one branch rooted at ``label``; children are kept in draw order."""
    if label < 1:
        raise ConfigError("label must be >= 1")
    return BranchSampler(seed, size_cap, max_label).sample(label)


# ---------------------------------------------------------------------------
# batched label counts (no planar structure)
# ---------------------------------------------------------------------------

def gw_label_counts(rows, labels, mult, n_rows: int, j_max: int, rng,
                    max_label: int | None = None, max_generations: int = 10**6):
    """Label counts of independent branch forests, one forest per row.

    Row ``rows[i]`` starts with ``mult[i]`` individuals of type
    ``labels[i]``. Individuals with label above ``max_label`` are pruned
    with their progeny. Returns ``(counts, totals)`` where ``counts`` has
    shape ``(n_rows, j_max + 1)`` and ``totals`` is the number of vertices
    per row, initial individuals included.
    """
    rng = make_rng(rng)
    rows = np.asarray(rows, dtype=np.int64)
    lab = np.asarray(labels, dtype=np.int64)
    cnt = np.asarray(mult, dtype=np.int64)
    keep = cnt > 0
    if max_label is not None:
        keep &= lab <= max_label
    rows, lab, cnt = rows[keep], lab[keep], cnt[keep]
    width = j_max + 1
    counts = np.zeros(n_rows * width, dtype=np.int64)
    totals = np.zeros(n_rows, dtype=np.int64)
    top = int(lab.max()) + 2 if lab.size else 2
    w = w_array(top)
    for _ in range(max_generations):
        if rows.size == 0:
            return counts.reshape(n_rows, width), totals
        inside = lab <= j_max
        counts += np.bincount(rows[inside] * width + lab[inside], weights=cnt[inside],
                              minlength=n_rows * width).astype(np.int64)
        totals += np.bincount(rows, weights=cnt, minlength=n_rows).astype(np.int64)
        hi = int(lab.max()) + 1
        if hi >= w.size:
            w = w_array(2 * hi)
        p_stop = 1.0 / w[lab]
        kids = rng.negative_binomial(cnt, p_stop)
        # split the children among the three types by sequential binomials
        wu, wd, ws = w[lab + 1], w[lab - 1], w[lab]
        up = rng.binomial(kids, wu / (wu + wd + ws))
        rest = kids - up
        down = rng.binomial(rest, np.where(wd + ws > 0, wd / (wd + ws), 0.0))
        stay = rest - down
        r3 = np.concatenate([rows, rows, rows])
        l3 = np.concatenate([lab + 1, lab - 1, lab])
        c3 = np.concatenate([up, down, stay])
        ok = c3 > 0
        if max_label is not None:
            ok &= l3 <= max_label
        r3, l3, c3 = r3[ok], l3[ok], c3[ok]
        if r3.size == 0:
            rows = r3
            continue
        key_w = int(l3.max()) + 1
        key = r3 * key_w + l3
        uniq, inv = np.unique(key, return_inverse=True)
        cnt = np.bincount(inv, weights=c3).astype(np.int64)
        rows = uniq // key_w
        lab = uniq % key_w
    raise CapExceededError("branch forest did not die out within the generation cap")


def branch_sizes_mc(label: int, replicas: int, seed, size_cap: int = DEFAULT_SIZE_CAP):
    """Edge counts of ``replicas`` independent planar branches."""
    sampler = BranchSampler(seed, size_cap)
    return np.fromiter((sampler.sample(label).n_edges for _ in range(replicas)),
                       dtype=np.int64, count=replicas)


# ---------------------------------------------------------------------------
# occurrence kernel
# ---------------------------------------------------------------------------

def psi_plus(j: int) -> int:
    """Growing solution ``j(j+1)(j+2)(j+3)`` of the comparison equation."""
    return j * (j + 1) * (j + 2) * (j + 3)


def _psi_minus_sum_terms(k: np.ndarray) -> np.ndarray:
    k = k.astype(float)
    return 1.0 / (k * (k + 1) ** 2 * (k + 2) ** 2 * (k + 3) ** 2 * (k + 4))


def psi_minus(j: int, tol: float = 1e-14) -> float:
    """Decaying solution ``psi_+(j) sum_{k>=j} 1/(k(k+1)^2(k+2)^2(k+3)^2(k+4))``.

    The series is summed until the relative size of the next term drops
    below ``tol``, then the integral of the ``k^-8`` tail is added."""
    if j < 1:
        raise ConfigError("j must be >= 1")
    total = 0.0
    n = j
    chunk = max(256, j)
    while True:
        terms = _psi_minus_sum_terms(np.arange(n, n + chunk))
        total += float(np.sum(terms[::-1]))
        n += chunk
        if terms[-1] < tol * total:
            break
        chunk *= 2
    total += 1.0 / (7.0 * (n - 0.5) ** 7)
    return float(psi_plus(j)) * total


def psi_minus_array(j_max: int) -> np.ndarray:
    """``psi_-(j)`` for ``j = 0 .. j_max`` (entry 0 is 0)."""
    top = max(32 * (j_max + 1), 4096)
    k = np.arange(1, top + 1)
    terms = _psi_minus_sum_terms(k)
    tail = np.cumsum(terms[::-1])[::-1] + 1.0 / (7.0 * (top + 0.5) ** 7)
    j = np.arange(1, j_max + 1).astype(float)
    out = np.zeros(j_max + 1)
    out[1:] = j * (j + 1) * (j + 2) * (j + 3) * tail[: j_max]
    return out


@dataclass
class GKernel:
    """``G[k-1, j-1] = G(k, j)`` for ``k <= k_max``, ``j <= j_max``."""

    k_max: int
    j_max: int
    G: np.ndarray
    residual_norm: float

    def __call__(self, k: int, j: int) -> float:
        return float(self.G[k - 1, j - 1])

    def to_csv(self, fh, k_values=None, j_values=None) -> None:
        fh.write("k,j,G\n")
        ks = range(1, self.k_max + 1) if k_values is None else k_values
        js = range(1, self.j_max + 1) if j_values is None else j_values
        for k in ks:
            for j in js:
                fh.write(f"{k},{j},{self.G[k - 1, j - 1]:.17g}\n")


def kernel_columns(sources, n: int, boundary: str = "decay") -> np.ndarray:
    """Solve the kernel equation on ``j = 1 .. n`` for each source label.

    Returns an ``(n, len(sources))`` array whose column ``s`` is
    ``G(source_s, j)``. By symmetry it is also ``G(j, source_s)``.

    ``boundary="decay"`` closes the system with the ratio of the decaying
    solution, ``G(k, n+1) = G(k, n) psi_-(n+1)/psi_-(n)``.
    ``boundary="dirichlet"`` sets ``G(k, n+1) = 0``, which gives the kernel
    of branches pruned above label ``n``.
    """
    sources = np.atleast_1d(np.asarray(sources, dtype=np.int64))
    if sources.min() < 1 or sources.max() > n:
        raise ConfigError("sources must lie in [1, n]")
    w = w_array(n + 1)
    j = np.arange(1, n + 1)
    # unknowns g_j = w_j G(k, j) give a symmetric system
    #   (12 / w_j^2 - 1) g_j - g_{j-1} - g_{j+1} = 12 delta_jk / w_k
    diag = 12.0 / w[j] ** 2 - 1.0
    off = -np.ones(n - 1)
    if boundary == "decay":
        psi = psi_minus_array(n + 1)
        diag[-1] -= (w[n + 1] / w[n]) * psi[n + 1] / psi[n]
    elif boundary != "dirichlet":
        raise ConfigError(f"unknown boundary {boundary!r}")
    rhs = np.zeros((n, sources.size))
    rhs[sources - 1, np.arange(sources.size)] = 12.0 / w[sources]
    g = solve_tridiagonal(off, diag, off, rhs)
    return g / w[j][:, None]


def kernel_residual(G: np.ndarray, sources) -> float:
    """Max defect of the difference equation over interior ``j``, relative
    to the largest entry. ``G`` is laid out as in :func:`kernel_columns`."""
    n = G.shape[0]
    sources = np.atleast_1d(sources)
    w = w_array(n + 1)
    j = np.arange(1, n)  # interior rows j = 1 .. n-1
    Gp = np.vstack([np.zeros((1, G.shape[1])), G])  # Gp[j] = G(., j), Gp[0] = 0
    delta = (j[:, None] == sources[None, :]).astype(float)
    rhs = delta + (w[j] / 12.0)[:, None] * (
        w[j - 1][:, None] * Gp[j - 1] + w[j][:, None] * Gp[j] + w[j + 1][:, None] * Gp[j + 1]
    )
    return float(np.max(np.abs(Gp[j] - rhs)) / np.max(np.abs(G)))


def g_kernel_exact(k_max: int, j_max: int) -> GKernel:
    """Kernel table for ``k <= k_max`` and ``j <= j_max``."""
    if j_max < k_max + 64:
        raise ConfigError("need j_max >= k_max + 64")
    sources = np.arange(1, k_max + 1)
    cols = kernel_columns(sources, j_max)
    res = kernel_residual(cols, sources)
    return GKernel(k_max, j_max, np.ascontiguousarray(cols.T), res)


def g_kernel_mc(k: int, j: int, replicas: int, seed, size_cap: int = DEFAULT_SIZE_CAP):
    """Monte-Carlo mean and standard error of the number of label-``j``
    vertices in a branch rooted at ``k``."""
    if replicas < 1:
        raise ConfigError("replicas must be >= 1")
    sampler = BranchSampler(seed, size_cap)
    x = np.empty(replicas)
    for i in range(replicas):
        x[i] = sampler.sample(k).labels.count(j)
    se = float(x.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else float("nan")
    return float(x.mean()), se


# ---------------------------------------------------------------------------
# exact small-branch oracles
# ---------------------------------------------------------------------------

def small_branch_law(label: int, max_edges: int) -> dict:
    """Exact probabilities of every branch with at most ``max_edges``
    edges, keyed by nested tuple."""
    out = {}
    for n in range(max_edges + 1):
        for t in iter_labeled_trees(n, label):
            out[t] = Fraction(1, 12**n) / w_value(label)
    return out


def truncated_kernel_by_enumeration(k: int, j: int, max_edges: int) -> Fraction:
    """``sum_w N_j(w) P(w)`` over branches with at most ``max_edges`` edges."""
    total = Fraction(0)
    for t, p in small_branch_law(k, max_edges).items():
        stack = [t]
        nj = 0
        while stack:
            lab, kids = stack.pop()
            nj += lab == j
            stack.extend(kids)
        if nj:
            total += nj * p
    return total


@lru_cache(maxsize=None)
def _forest_series(k: int, n: int) -> Fraction:
    # total weight sum_{|w| = n} 12^{-n} over k-labeled trees of size n
    # computed by the planted-subtree convolution, independent of the
    # tree generator used in small_branch_law
    if n == 0:
        return Fraction(1)
    total = Fraction(0)
    for m in range(1, n + 1):
        for e in (-1, 0, 1):
            if k + e >= 1:
                total += Fraction(1, 12) * _forest_series(k + e, m - 1) * _forest_series(k, n - m)
    return total


@lru_cache(maxsize=None)
def _marked_series(k: int, j: int, n: int) -> Fraction:
    # sum over k-labeled trees of size n of N_j(tree) 12^{-n}
    if n == 0:
        return Fraction(int(k == j))
    total = Fraction(int(k == j)) * _forest_series(k, n)
    # a marked vertex below the root sits in exactly one planted subtree
    for m in range(1, n + 1):
        for e in (-1, 0, 1):
            c = k + e
            if c < 1:
                continue
            rest = n - m
            # marked subtree first, then any forest; or unmarked first
            total += Fraction(1, 12) * _marked_series(c, j, m - 1) * _forest_series(k, rest)
            total += Fraction(1, 12) * _forest_series(c, m - 1) * _marked_below(k, j, rest)
    return total


@lru_cache(maxsize=None)
def _marked_below(k: int, j: int, n: int) -> Fraction:
    # like _marked_series but the root itself is not counted
    return _marked_series(k, j, n) - Fraction(int(k == j)) * _forest_series(k, n)


def truncated_kernel_by_paths(k: int, j: int, max_edges: int) -> Fraction:
    """Same quantity as :func:`truncated_kernel_by_enumeration`, computed by
    decomposing along the path from the root to each marked vertex."""
    total = Fraction(0)
    for n in range(max_edges + 1):
        total += _marked_series(k, j, n)
    return total / w_value(k)


def mean_path_kernel(k: int, j: int, max_len: int) -> Fraction:
    """``sum over label paths k -> j of length <= max_len`` of the product of
    mean offspring counts ``w_a w_b / 12`` along the path."""
    # dynamic program over path length, exact rationals
    cur = {k: Fraction(1)}
    total = cur.get(j, Fraction(0))
    for _ in range(max_len):
        nxt = {}
        for a, val in cur.items():
            for b in (a - 1, a, a + 1):
                if b < 1:
                    continue
                nxt[b] = nxt.get(b, Fraction(0)) + val * w_value(a) * w_value(b) / 12
        cur = nxt
        total += cur.get(j, Fraction(0))
    return total


def mean_path_kernel_brute(k: int, j: int, max_len: int) -> Fraction:
    """Explicit enumeration of every label path, for cross-checking
    :func:`mean_path_kernel` on tiny instances."""
    total = Fraction(0)
    stack = [(k, 0, Fraction(1))]
    while stack:
        a, n, val = stack.pop()
        if a == j:
            total += val
        if n == max_len:
            continue
        for b in (a - 1, a, a + 1):
            if b >= 1:
                stack.append((b, n + 1, val * w_value(a) * w_value(b) / 12))
    return total
