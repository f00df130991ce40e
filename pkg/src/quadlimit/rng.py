"""Seeded random streams.

All sampling goes through numpy's Philox counter-based generator so that
results are reproducible across platforms and can be split into
independent sub-streams with :meth:`numpy.random.SeedSequence.spawn`.
"""
from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.Philox4x64-10"


def make_rng(seed) -> np.random.Generator:
    """Return a Philox generator. ``seed`` may be an int, a SeedSequence
    or an existing Generator (returned unchanged)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """Split ``seed`` into ``n`` independent Philox generators."""
    if isinstance(seed, np.random.Generator):
        ss = seed.bit_generator.seed_seq
    elif isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(s)) for s in ss.spawn(n)]


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Exact uniform integer in ``[0, n)`` for arbitrarily large ``n``.

    Uses rejection on the smallest enclosing power of two, so the result
    is unbiased regardless of the size of ``n``.
    """
    n = int(n)
    if n <= 0:
        raise ValueError("randbelow requires n > 0")
    if n < 2**62:
        return int(rng.integers(0, n))
    nbits = n.bit_length()
    nbytes = (nbits + 7) // 8
    shift = 8 * nbytes - nbits
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little") >> shift
        if x < n:
            return x
