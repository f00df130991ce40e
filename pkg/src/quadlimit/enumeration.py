"""Exact counts of labeled trees and the closed-form label constants.

Counts are arbitrary-precision integers. ``D[N, k]`` is the number of
planar trees with ``N`` edges, root label ``k``, all labels >= 1 and
neighbouring labels differing by at most one. ``E[N, k]`` counts the same
trees restricted to root degree one.

Two independent routes are provided for the table:

``"convolution"``
    ``D[N,k] = sum_M E[M,k] D[N-M,k]`` together with
    ``E[N,k] = D[N-1,k-1] + D[N-1,k] + D[N-1,k+1]``.
``"recursion"``
    Power-series form of ``1/W_k = 1 - Z_k`` and
    ``W_{k+1} = Z_k / z - W_{k-1} - W_k`` seeded with the closed form for
    ``k = 1``. Much cheaper when ``k_max`` is small and ``n_max`` large.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .errors import ConfigError, ResourceLimitError, TableRangeError

try:  # gmpy2 speeds up the big-integer convolutions by a large factor
    from gmpy2 import mpz as _big
except ImportError:  # pragma: no cover - exercised only without gmpy2
    _big = int

CACHE_MAGIC = b"ULTC1"
DEFAULT_MEMORY_BUDGET = 2 * 1024**3
BRUTE_FORCE_MAX_N = 7


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def count_well_labeled(N: int) -> int:
    """Number of well-labeled trees with ``N`` edges,
    ``2 * 3**N * (2N)! / (N! (N+2)!)``."""
    if N < 0:
        raise ConfigError("N must be >= 0")
    # (2N)!/(N!(N+2)!) = C(2N, N) / ((N+1)(N+2))
    return 2 * 3**N * comb(2 * N, N) // ((N + 1) * (N + 2))


def _check_label(k: int, lo: int = 1) -> int:
    k = int(k)
    if k < lo:
        raise ConfigError(f"label must be >= {lo}, got {k}")
    return k


@lru_cache(maxsize=None)
def z_value(k: int) -> Fraction:
    """Radius parameter ``z_k = 1/2 - 1/(k(k+3))``."""
    k = _check_label(k)
    return Fraction(1, 2) - Fraction(1, k * (k + 3))


@lru_cache(maxsize=None)
def w_value(k: int) -> Fraction:
    """``w_k = 2k(k+3)/((k+1)(k+2)) = 1/(1 - z_k)``, with ``w_0 = 0``."""
    k = _check_label(k, lo=0)
    return Fraction(2 * k * (k + 3), (k + 1) * (k + 2))


@lru_cache(maxsize=None)
def d_value(k: int) -> Fraction:
    """Limit ratio ``d_k = lim_N D[N,k]/D[N,1]``; ``d_0 = 0``."""
    k = _check_label(k, lo=0)
    poly = 5 * k**4 + 30 * k**3 + 59 * k**2 + 42 * k + 4
    return Fraction(3 * k * (k + 3) * poly, 280 * (k + 1) * (k + 2))


def w_array(k_max: int) -> np.ndarray:
    """Float ``w_k`` for ``k = 0 .. k_max``."""
    k = np.arange(k_max + 1, dtype=float)
    return 2.0 * k * (k + 3.0) / ((k + 1.0) * (k + 2.0))


def d_array(k_max: int) -> np.ndarray:
    """Float ``d_k`` for ``k = 0 .. k_max``."""
    k = np.arange(k_max + 1, dtype=float)
    poly = (((5.0 * k + 30.0) * k + 59.0) * k + 42.0) * k + 4.0
    return 3.0 / 280.0 * k * (k + 3.0) / ((k + 1.0) * (k + 2.0)) * poly


# ---------------------------------------------------------------------------
# count tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountTable:
    """Exact ``D`` and ``E`` counts for ``0 <= N <= n_max``, ``1 <= k <= k_max``.

    ``d_rows[N][k]`` and ``e_rows[N][k]`` hold Python ints; column 0 is the
    label-0 convention (all zeros) so that indexing by label is direct.
    """

    n_max: int
    k_max: int
    d_rows: tuple
    e_rows: tuple
    method: str = "convolution"

    def _check(self, N: int, k: int) -> None:
        if not (0 <= N <= self.n_max) or not (0 <= k <= self.k_max):
            raise TableRangeError(
                f"(N={N}, k={k}) outside table n_max={self.n_max}, k_max={self.k_max}"
            )

    def D(self, N: int, k: int) -> int:
        self._check(N, k)
        return self.d_rows[N][k]

    def E(self, N: int, k: int) -> int:
        self._check(N, k)
        return self.e_rows[N][k]

    def covers(self, n_max: int, k_max: int) -> bool:
        return n_max <= self.n_max and k_max <= self.k_max


def estimate_table_bytes(n_max: int, k_max: int, method: str) -> int:
    """Rough peak memory of a table build, used for the budget check."""
    bits_per_entry = n_max * np.log2(12.0) + 64
    obj = bits_per_entry / 8 + 32
    if method == "convolution":
        labels = k_max + n_max + 2
        n_entries = 2 * (n_max + 1) * labels
    else:
        n_entries = 4 * (n_max + k_max + 2) * (k_max + 2)
    return int(n_entries * obj)


def _work_convolution(n_max: int, k_max: int) -> float:
    n = np.arange(n_max + 1, dtype=float)
    return float(np.sum(n * (k_max + n_max - n + 1)))


def _work_recursion(n_max: int, k_max: int) -> float:
    L = n_max + k_max + 1
    return float(sum((L - k) ** 2 / 2.0 for k in range(1, k_max + 1)))


def _build_convolution(n_max: int, k_max: int):
    # row n must cover labels up to k_max + (n_max - n) + 1 so that the
    # E recursion can look one label higher at every smaller size
    top = k_max + n_max + 1
    D = []
    E = []
    for n in range(n_max + 1):
        width = top - n + 1  # labels 0 .. top - n
        if n == 0:
            D.append([_big(0)] + [_big(1)] * (width - 1))
            E.append([_big(0)] * width)
            continue
        prev = D[n - 1]
        e_row = [_big(0)] * width
        for k in range(1, width):
            e_row[k] = prev[k - 1] + prev[k] + prev[k + 1]
        E.append(e_row)
        d_row = [_big(0)] * width
        for k in range(1, width):
            s = _big(0)
            for M in range(1, n + 1):
                s += E[M][k] * D[n - M][k]
            d_row[k] = s
        D.append(d_row)
    return D, E


def _build_recursion(n_max: int, k_max: int):
    # W[k] holds D[.,k] up to order n_max + k_max - k, Z[k] holds E[.,k]
    L = n_max + k_max - 1
    W_prev = [_big(0)] * (L + 2)
    W_cur = [_big(count_well_labeled(n)) for n in range(L + 1)]
    D_cols = {}
    E_cols = {}
    for k in range(1, k_max + 1):
        Lk = L - (k - 1)
        Wk = W_cur
        z = [_big(0)] * (Lk + 1)
        for n in range(1, Lk + 1):
            s = Wk[n]
            for m in range(1, n):
                s -= z[m] * Wk[n - m]
            z[n] = s
        D_cols[k] = Wk[: n_max + 1]
        E_cols[k] = z[: n_max + 1]
        if k < k_max:
            W_next = [z[n + 1] - W_prev[n] - Wk[n] for n in range(Lk)]
            W_prev, W_cur = Wk, W_next
    D = [[_big(0)] + [D_cols[k][n] for k in range(1, k_max + 1)] for n in range(n_max + 1)]
    E = [[_big(0)] + [E_cols[k][n] for k in range(1, k_max + 1)] for n in range(n_max + 1)]
    return D, E


def build_count_table(
    n_max: int,
    k_max: int,
    method: str = "auto",
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> CountTable:
    """Exact count table for ``N <= n_max`` and root labels ``k <= k_max``.

    Parameters
    ----------
    method : {"auto", "convolution", "recursion"}
        ``auto`` picks whichever route needs fewer big-integer products.
    memory_budget : int
        Bytes; a :class:`ResourceLimitError` is raised if the estimated
        footprint is larger.
    """
    n_max, k_max = int(n_max), int(k_max)
    if n_max < 0 or k_max < 1:
        raise ConfigError("need n_max >= 0 and k_max >= 1")
    if method == "auto":
        method = (
            "recursion"
            if _work_recursion(n_max, k_max) < _work_convolution(n_max, k_max)
            else "convolution"
        )
    if method not in ("convolution", "recursion"):
        raise ConfigError(f"unknown method {method!r}")
    need = estimate_table_bytes(n_max, k_max, method)
    if need > memory_budget:
        raise ResourceLimitError(
            f"count table (n_max={n_max}, k_max={k_max}) needs ~{need} bytes, "
            f"budget {memory_budget}"
        )
    if method == "convolution":
        D, E = _build_convolution(n_max, k_max)
    else:
        D, E = _build_recursion(n_max, k_max)
    d_rows = tuple(tuple(int(x) for x in D[n][: k_max + 1]) for n in range(n_max + 1))
    e_rows = tuple(tuple(int(x) for x in E[n][: k_max + 1]) for n in range(n_max + 1))
    return CountTable(n_max, k_max, d_rows, e_rows, method)


def d_ratio(k: int, N: int, table: CountTable) -> float:
    """``D[N,k] / D[N,1]`` as a correctly rounded float."""
    return float(Fraction(table.D(N, k), table.D(N, 1)))


# ---------------------------------------------------------------------------
# brute force oracle
# ---------------------------------------------------------------------------

def iter_labeled_trees(N: int, k: int):
    """Yield every ``k``-labeled planar tree with ``N`` edges as a nested
    tuple ``(label, (child, child, ...))``."""
    if N == 0:
        yield (k, ())
        return
    for first in range(1, N + 1):
        for child in (k - 1, k, k + 1):
            if child < 1:
                continue
            for sub in iter_labeled_trees(first - 1, child):
                for rest in iter_labeled_trees(N - first, k):
                    yield (k, (sub,) + rest[1])


def count_k_labeled_brute(N: int, k: int) -> int:
    """Count ``k``-labeled trees with ``N`` edges by generating them all."""
    if N > BRUTE_FORCE_MAX_N:
        raise ConfigError(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}")
    if N < 0:
        raise ConfigError("N must be >= 0")
    _check_label(k)
    return sum(1 for _ in iter_labeled_trees(N, k))


# ---------------------------------------------------------------------------
# binary cache
# ---------------------------------------------------------------------------

def _write_int(fh, x: int) -> None:
    raw = x.to_bytes((x.bit_length() + 7) // 8, "little")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def _read_int(fh) -> int:
    (n,) = struct.unpack("<I", fh.read(4))
    return int.from_bytes(fh.read(n), "little")


def save_count_table(table: CountTable, path) -> None:
    """Write ``table`` in the ``ULTC1`` little-endian format: magic,
    ``n_max`` and ``k_max`` as u32, then length-prefixed D entries followed
    by E entries, each block in row-major ``(N, k)`` order with
    ``k = 1 .. k_max``."""
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", table.n_max, table.k_max))
        for rows in (table.d_rows, table.e_rows):
            for N in range(table.n_max + 1):
                for k in range(1, table.k_max + 1):
                    _write_int(fh, rows[N][k])
    os.replace(tmp, path)


def load_count_table(path) -> CountTable:
    with open(path, "rb") as fh:
        if fh.read(len(CACHE_MAGIC)) != CACHE_MAGIC:
            raise ConfigError(f"{path}: not a ULTC1 count-table cache")
        n_max, k_max = struct.unpack("<II", fh.read(8))
        blocks = []
        for _ in range(2):
            rows = []
            for N in range(n_max + 1):
                rows.append((0,) + tuple(_read_int(fh) for _ in range(k_max)))
            blocks.append(tuple(rows))
    return CountTable(n_max, k_max, blocks[0], blocks[1], "cache")


def cached_count_table(n_max: int, k_max: int, cache_dir=None, **kw) -> CountTable:
    """Load the table for ``(n_max, k_max)`` from ``cache_dir`` or build and
    store it. Without ``cache_dir`` the table is built in memory and
    memoized for the life of the process."""
    if cache_dir is None:
        return _memo_table(int(n_max), int(k_max))
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"counts_{n_max}_{k_max}.ultc")
    if os.path.exists(path):
        return load_count_table(path)
    table = build_count_table(n_max, k_max, **kw)
    save_count_table(table, path)
    return table


@lru_cache(maxsize=8)
def _memo_table(n_max: int, k_max: int) -> CountTable:
    return build_count_table(n_max, k_max)
