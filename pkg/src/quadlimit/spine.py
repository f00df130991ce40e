"""Birth-and-death chain of labels along the spine.

From label ``k`` the chain steps to ``k+1``, ``k-1`` or stays with
probabilities

    p_k = w_k^2 d_{k+1} / (12 d_k),  q_k = w_k^2 d_{k-1} / (12 d_k),
    r_k = w_k^2 / 12.

The chain is transient; ``S_k`` denotes the total number of visits to
level ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .enumeration import d_array, d_value, w_array, w_value
from .errors import CensoringError, ConfigError, ConvergenceError
from .rng import make_rng, spawn_rngs
from .tridiag import solve_tridiagonal

MAX_SERIES_TERMS = 10**7


@dataclass(frozen=True)
class BirthDeathParams:
    k: int
    p: Fraction
    q: Fraction
    r: Fraction


@dataclass
class SpinePath:
    states: np.ndarray
    seed: object = None

    def __len__(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True)
class SojournEstimate:
    k: int
    value: float
    mode: str  # "exact-series" or "monte-carlo"
    n_terms: int = 0
    error_bound: float = 0.0
    replicas: int = 0
    stderr: float = 0.0
    censored_fraction: float = 0.0


def bd_params(k: int) -> BirthDeathParams:
    """Exact step probabilities at label ``k``."""
    k = int(k)
    if k < 1:
        raise ConfigError("label must be >= 1")
    w2 = w_value(k) ** 2
    dk = d_value(k)
    p = w2 * d_value(k + 1) / (12 * dk)
    q = w2 * d_value(k - 1) / (12 * dk)
    r = w2 / 12
    return BirthDeathParams(k, p, q, r)


def bd_arrays(k_max: int):
    """Float ``(p, q, r)`` indexed by label ``0 .. k_max`` (index 0 unused)."""
    w = w_array(k_max + 1)[: k_max + 1]
    d = d_array(k_max + 1)
    p = np.zeros(k_max + 1)
    q = np.zeros(k_max + 1)
    r = np.zeros(k_max + 1)
    k = np.arange(1, k_max + 1)
    w2 = w[k] ** 2 / 12.0
    p[k] = w2 * d[k + 1] / d[k]
    q[k] = w2 * d[k - 1] / d[k]
    r[k] = w2
    return p, q, r


def _step_tables(k_max: int):
    p, q, _ = bd_arrays(k_max)
    # u < up -> +1, u >= down -> -1, otherwise stay
    return p, 1.0 - q


def sample_spines(n_paths: int, n_steps: int, seed, start: int = 1) -> np.ndarray:
    """``(n_paths, n_steps + 1)`` array of independent trajectories."""
    rng = make_rng(seed)
    up, down = _step_tables(start + n_steps + 1)
    out = np.empty((n_paths, n_steps + 1), dtype=np.int64)
    x = np.full(n_paths, start, dtype=np.int64)
    out[:, 0] = x
    for t in range(1, n_steps + 1):
        u = rng.random(n_paths)
        x = x + (u < up[x]) - (u >= down[x])
        out[:, t] = x
    return out


def sample_spine(n_steps: int, seed, start: int = 1) -> SpinePath:
    """One trajectory ``X_0 = start, ..., X_{n_steps}``."""
    if n_steps < 0:
        raise ConfigError("n_steps must be >= 0")
    rng = make_rng(seed)
    up, down = _step_tables(start + n_steps + 1)
    u = rng.random(n_steps)
    states = np.empty(n_steps + 1, dtype=np.int64)
    x = start
    states[0] = x
    for t in range(n_steps):
        if u[t] < up[x]:
            x += 1
        elif u[t] >= down[x]:
            x -= 1
        states[t + 1] = x
    return SpinePath(states, seed)


def escape_series(k: int, tol: float = 1e-12):
    """Sum ``sum_{j>=0} d_k d_{k+1} / (d_{k+j} d_{k+j+1})``.

    Returns ``(value, n_terms, tail_bound)``. Terms behave like
    ``(1 + j/k)^-8``, so the tail past ``J`` is close to
    ``term_J (k + J) / 7``.
    """
    total = 0.0
    n = 0
    chunk = max(1024, 4 * k)
    dk = float(d_value(k))
    dk1 = float(d_value(k + 1))
    while n < MAX_SERIES_TERMS:
        j = np.arange(n, n + chunk)
        d = d_array(k + n + chunk)
        terms = (dk / d[k + j]) * (dk1 / d[k + j + 1])
        csum = total + np.cumsum(terms)
        small = np.nonzero(terms < tol * csum)[0]
        if small.size:
            i = small[0]
            total = float(csum[i])
            n += i + 1
            last = float(terms[i])
            tail = last * (k + n) / 7.0
            return total, n, tail
        total = float(csum[-1])
        n += chunk
        chunk *= 2
    raise ConvergenceError(f"escape series at k={k} did not converge in {MAX_SERIES_TERMS} terms")


def sojourn_exact(k: int, tol: float = 1e-12, start: int = 1) -> SojournEstimate:
    """``E_i[S_k] = 1/(rho_k p_k)`` for any start ``i <= k``.

    ``1/rho_k`` is the escape series of :func:`escape_series`.
    """
    k = int(k)
    if k < 1 or tol <= 0:
        raise ConfigError("need k >= 1 and tol > 0")
    if not 1 <= start <= k:
        raise ConfigError("start must lie in [1, k]")
    s, n, tail = escape_series(k, tol)
    p = float(bd_params(k).p)
    value = s / p
    # tail of the series plus float accumulation error
    err = tail / p + 4 * n * np.finfo(float).eps * value
    return SojournEstimate(k, value, "exact-series", n_terms=n, error_bound=err)


def sojourn_table(k_max: int) -> np.ndarray:
    """``E_1[S_k]`` for ``k = 0 .. k_max`` (entry 0 is 0).

    Uses ``E_1[S_k] = 12 d_k^2 T_k / w_k^2`` with
    ``T_k = sum_{i>=k} 1/(d_i d_{i+1})``; the reverse cumulative sum adds the
    smallest terms first.
    """
    top = max(64 * k_max, 10**5)
    d = d_array(top + 1)
    i = np.arange(1, top + 1)
    terms = 1.0 / (d[i] * d[i + 1])
    # analytic remainder: d_i ~ (3/56) i^4
    rem = (56.0 / 3.0) ** 2 / (7.0 * float(top) ** 7)
    T = np.cumsum(terms[::-1])[::-1] + rem
    w = w_array(k_max)
    out = np.zeros(k_max + 1)
    k = np.arange(1, k_max + 1)
    out[k] = 12.0 * d[k] ** 2 * T[k - 1] / w[k] ** 2
    return out


def killed_visits(cutoff: int, start: int = 1) -> np.ndarray:
    """Expected visits to each level ``1 .. cutoff`` before the chain first
    exceeds ``cutoff``, started from ``start``. Index 0 is unused.

    Solves ``(I - P)^T v = e_start`` on the killed state space.
    """
    if not 1 <= start <= cutoff:
        raise ConfigError("start must lie in [1, cutoff]")
    p, q, r = bd_arrays(cutoff + 1)
    n = cutoff
    lev = np.arange(1, n + 1)
    diag = 1.0 - r[lev]
    lower = -p[lev[:-1]]  # A[j, j-1] = -p_{j-1}
    upper = -q[lev[1:]]  # A[j, j+1] = -q_{j+1}
    rhs = np.zeros(n)
    rhs[start - 1] = 1.0
    v = solve_tridiagonal(lower, diag, upper, rhs)
    return np.concatenate([[0.0], v])


def sojourn_mc(
    k: int,
    replicas: int,
    horizon: int | None = None,
    seed=0,
    margin: int | None = None,
    start: int = 1,
    block: int = 50_000,
    max_censored: float = 0.01,
) -> SojournEstimate:
    """Monte-Carlo mean of the number of visits to ``k`` within ``horizon``.

    Paths whose final state is ``<= k + margin`` are counted as censored;
    more than ``max_censored`` of them raises :class:`CensoringError`.
    The default margin is ``k + 50`` and the default horizon is
    ``2 (k + margin)^2``, which leaves a negligible censored fraction.
    """
    k = int(k)
    if k < 1 or replicas < 1:
        raise ConfigError("need k >= 1 and replicas >= 1")
    if margin is None:
        margin = k + 50
    threshold = k + margin
    if horizon is None:
        horizon = 2 * threshold**2
    up, down = _step_tables(start + horizon + 1)
    n_blocks = -(-replicas // block)
    rngs = spawn_rngs(seed, n_blocks)
    visits = np.empty(replicas, dtype=np.int64)
    censored = 0
    for b, rng in enumerate(rngs):
        lo = b * block
        m = min(block, replicas - lo)
        x = np.full(m, start, dtype=np.int64)
        v = (x == k).astype(np.int64)
        for _ in range(horizon):
            u = rng.random(m)
            x += (u < up[x]).view(np.int8) - (u >= down[x]).view(np.int8)
            v += x == k
        visits[lo : lo + m] = v
        censored += int(np.count_nonzero(x <= threshold))
    frac = censored / replicas
    if frac > max_censored:
        raise CensoringError(
            f"{frac:.2%} of replicas ended at or below level {threshold}; increase horizon"
        )
    mean = float(visits.mean())
    se = float(visits.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else float("nan")
    return SojournEstimate(
        k, mean, "monte-carlo", replicas=replicas, stderr=se, censored_fraction=frac
    )
