"""Counter-based seeded random streams.

Every random draw in the package is keyed by ``(seed, key, block)`` where
``key`` is a tuple of non-negative integers naming a logical stream and
``block`` is ``index // BLOCK`` for the sample index.  Each block gets its own
Philox generator, so the value of sample ``i`` never depends on how blocks
are scheduled across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1 << 16
_TWO53 = float(2**53)


def block_generator(seed: int, key: tuple[int, ...], block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(key) + (int(block),))
    return np.random.Generator(np.random.Philox(ss))


def generator(seed: int, key: tuple[int, ...] = (0,)) -> np.random.Generator:
    """A single generator for small parameter draws (not block-partitioned)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(2**31 - 1,) + tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def _block_uniforms(seed, key, block, count):
    k = block_generator(seed, key, block).integers(0, 2**53, size=count, dtype=np.int64)
    # open interval (0, 1); safe for inverse-CDF sampling
    return (k.astype(np.float64) + 0.5) / _TWO53


def uniforms(seed: int, key: tuple[int, ...], size: int, threads: int = 1) -> np.ndarray:
    """Return ``size`` uniforms in (0, 1) from stream ``key``.

    The output is bit-identical for any ``threads`` value.
    """
    size = int(size)
    out = np.empty(size)
    n_blocks = (size + BLOCK - 1) // BLOCK

    def fill(b):
        lo = b * BLOCK
        hi = min(size, lo + BLOCK)
        out[lo:hi] = _block_uniforms(seed, key, b, hi - lo)

    if threads <= 1 or n_blocks <= 1:
        for b in range(n_blocks):
            fill(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(n_blocks)))
    return out
