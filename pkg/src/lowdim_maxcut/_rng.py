"""Seed derivation.

Every random stream is keyed by ``(seed, stream, block)``; a block holds
``BLOCK`` consecutive draws. Results therefore depend only on the seed and the
draw index, never on how work is split across workers.
"""
import numpy as np

BLOCK = 4096

ROUNDING = 0
MOMENT = 1
SPHERE = 2
CAP = 3
SOLVER = 4
CONFIG = 5

DEFAULT_SEED = 20240601


def substream(seed, stream, *key):
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, *key)))


def gaussian_rows(seed, stream, start, count, d, *key):
    """Rows ``start .. start+count-1`` of a seeded standard normal stream in R^d."""
    out = np.empty((count, d))
    row = start
    while row < start + count:
        block, offset = divmod(row, BLOCK)
        take = min(BLOCK - offset, start + count - row)
        g = substream(seed, stream, *key, block).standard_normal((BLOCK, d))
        out[row - start : row - start + take] = g[offset : offset + take]
        row += take
    return out


def iter_gaussian_blocks(seed, stream, count, d, *key):
    """Yield the same rows as ``gaussian_rows(seed, stream, 0, count, d)`` in blocks."""
    for block in range(-(-count // BLOCK)):
        take = min(BLOCK, count - block * BLOCK)
        yield substream(seed, stream, *key, block).standard_normal((BLOCK, d))[:take]
