"""Random spherical configurations: the flat side of the second-moment bound.

For i.i.d. uniform unit vectors, flipping ``v_i`` to ``-v_i`` leaves the law
unchanged but negates every cross term, so ``E_v E_g[X^2] = n``. Two uniform
vectors rarely have a large inner product: ``P(<U, V> >= a) <= (1 - a^2)**((d-1)/2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .anticonc import (
    ADMISSIBLE_RHO,
    SignConfiguration,
    exact_second_moment,
    mc_second_moment,
)
from .embedding import UnitEmbedding


@dataclass(frozen=True)
class ExtremalSearchConfig:
    d: int
    n: int
    seed: int = _rng.DEFAULT_SEED
    max_retries: int = 1000
    mc_samples: int = 10_000

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.max_retries < 1 or self.mc_samples < 1:
            raise ValueError("max_retries and mc_samples must be positive")


def _unit_rows(seed, stream, count, d, *key):
    """``count`` uniform unit vectors; zero-norm draws are replaced by later rows."""
    rows = _rng.gaussian_rows(seed, stream, 0, count, d, *key)
    norms = np.linalg.norm(rows, axis=1)
    bad = np.flatnonzero(norms == 0)
    extra = count
    for i in bad:
        while norms[i] == 0:
            rows[i] = _rng.gaussian_rows(seed, stream, extra, 1, d, *key)[0]
            norms[i] = np.linalg.norm(rows[i])
            extra += 1
    return rows / norms[:, None]


def sample_sphere(n, d, seed=_rng.DEFAULT_SEED, key=()):
    """``n`` i.i.d. uniform unit vectors in R^d (normalized Gaussians)."""
    if d < 1 or n < 0:
        raise ValueError("need d >= 1 and n >= 0")
    return UnitEmbedding(_unit_rows(seed, _rng.SPHERE, n, d, *key))


def cap_tail_bound(a, d):
    """``(1 - a^2)**((d - 1)/2)``, bounding ``P(<U, V> >= a)``."""
    if not 0 < a <= 1:
        raise ValueError("a must lie in (0, 1]")
    if d < 1:
        raise ValueError("d must be positive")
    return (1.0 - a * a) ** ((d - 1) / 2.0)


@dataclass(frozen=True)
class CapTailResult:
    a: float
    d: int
    pairs: int
    hits: int
    bound: float

    @property
    def frequency(self):
        return self.hits / self.pairs

    @property
    def stderr(self):
        """Binomial standard error at the bound probability."""
        p = min(self.bound, 1.0)
        return math.sqrt(p * (1.0 - p) / self.pairs)

    @property
    def holds(self):
        return self.frequency <= self.bound + 4.0 * self.stderr

    def to_dict(self):
        return {
            "a": self.a,
            "d": self.d,
            "pairs": self.pairs,
            "frequency": self.frequency,
            "bound": self.bound,
            "stderr": self.stderr,
            "holds": self.holds,
        }


def cap_tail_empirical(a, d, pairs, seed=_rng.DEFAULT_SEED, block=1 << 16):
    """Frequency of ``<U, V> >= a`` over ``pairs`` independent uniform pairs."""
    if pairs < 1:
        raise ValueError("pairs must be positive")
    bound = cap_tail_bound(a, d)
    hits = 0
    for b, start in enumerate(range(0, pairs, block)):
        m = min(block, pairs - start)
        U = _unit_rows(seed, _rng.CAP, m, d, b, 0)
        V = _unit_rows(seed, _rng.CAP, m, d, b, 1)
        hits += int(np.count_nonzero(np.einsum("ij,ij->i", U, V) >= a))
    return CapTailResult(a, d, pairs, hits, bound)


@dataclass
class IdentityResult:
    d: int
    n: int
    configs: int
    estimates: np.ndarray
    exact: np.ndarray

    @property
    def mean(self):
        return float(self.estimates.mean())

    @property
    def stderr(self):
        """Standard error of the grand mean; covers both configuration and Gaussian noise."""
        if self.configs < 2:
            return 0.0
        return float(self.estimates.std(ddof=1) / math.sqrt(self.configs))

    @property
    def holds(self):
        return abs(self.mean - self.n) <= 4.0 * self.stderr + 1e-9 * self.n

    def to_dict(self):
        return {
            "d": self.d,
            "n": self.n,
            "configs": self.configs,
            "mean": self.mean,
            "stderr": self.stderr,
            "mean_exact": float(self.exact.mean()),
            "holds": self.holds,
        }


def mean_second_moment_identity(d, n, configs, mc_samples, seed=_rng.DEFAULT_SEED):
    """Average Monte Carlo ``E_g[X^2]`` over independent uniform configurations."""
    est = np.empty(configs)
    exact = np.empty(configs)
    for c in range(configs):
        cfg = SignConfiguration(sample_sphere(n, d, seed, key=(c,)))
        est[c] = mc_second_moment(cfg, mc_samples, seed, key=(c,)).estimate
        exact[c] = exact_second_moment(cfg)
    return IdentityResult(d, n, configs, est, exact)


@dataclass
class FlatSearchReport:
    d: int
    n: int
    attempts: int
    success: bool
    exact_moment: float
    min_rho: float

    @property
    def ratio(self):
        """``E[X^2] / n^2``."""
        return self.exact_moment / self.n**2

    def to_dict(self):
        return {
            "d": self.d,
            "n": self.n,
            "attempts": self.attempts,
            "success": self.success,
            "exact_second_moment": self.exact_moment,
            "bound": 2 * self.n,
            "ratio": self.ratio,
            "min_rho": self.min_rho,
        }


def find_flat_configuration(cfg: ExtremalSearchConfig):
    """Resample until ``min rho >= -0.9`` and ``E[X^2] <= 2n``.

    Returns ``(embedding, report)``. When the retries run out the best
    admissible attempt (smallest moment) is returned, or the least violating
    one if none was admissible, with ``report.success`` false.
    """
    best = None
    for attempt in range(1, cfg.max_retries + 1):
        V = UnitEmbedding(_unit_rows(cfg.seed, _rng.CONFIG, cfg.n, cfg.d, attempt))
        sc = SignConfiguration(V)
        m, r = exact_second_moment(sc), sc.min_rho
        ok_rho = r >= ADMISSIBLE_RHO
        if ok_rho and m <= 2 * cfg.n:
            return V, FlatSearchReport(cfg.d, cfg.n, attempt, True, m, r)
        key = (ok_rho, -m if ok_rho else r)
        if best is None or key > best[0]:
            best = (key, V, m, r)
    _, V, m, r = best
    return V, FlatSearchReport(cfg.d, cfg.n, cfg.max_retries, False, m, r)
