"""Hyperplane rounding with conservative local improvement.

One trial draws ``g ~ N(0, I_d)``, labels ``x_i = sgn(<g, v_i>)`` (with
``sgn(0) = +1``), and marks as candidates the vertices with
``|<g, v_i>| < eps``. A candidate flips when the weight of its same-label,
non-candidate neighbours exceeds half its weighted degree. Non-candidate labels
never change, so the outcome does not depend on the order of the flips.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import _rng, kernels
from .embedding import UnitEmbedding
from .graph import Cut, WeightedGraph, cut_value, cut_values, vertex_weights


def default_epsilon(d):
    """Candidate threshold ``2**(-3d)``."""
    return 2.0 ** (-3 * d)


@dataclass(frozen=True)
class RoundingConfig:
    """``epsilon=None`` means :func:`default_epsilon` of the embedding dimension."""

    epsilon: float | None = None
    trials: int = 1000
    seed: int = _rng.DEFAULT_SEED

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be positive")

    def resolve_epsilon(self, d):
        return default_epsilon(d) if self.epsilon is None else float(self.epsilon)


@dataclass(frozen=True)
class RoundingOutcome:
    gaussian: np.ndarray
    initial_cut: Cut
    candidate_set: frozenset
    flipped: frozenset
    final_cut: Cut
    initial_value: float
    final_value: float
    gains: dict

    def to_dict(self):
        return {
            "gaussian": self.gaussian.tolist(),
            "initial_cut": self.initial_cut.tolist(),
            "final_cut": self.final_cut.tolist(),
            "candidate_set": sorted(self.candidate_set),
            "flipped": sorted(self.flipped),
            "initial_value": self.initial_value,
            "final_value": self.final_value,
            "gains": {str(i): g for i, g in sorted(self.gains.items())},
        }


def _projections(V, g):
    g = np.asarray(g, dtype=np.float64).ravel()
    if g.size != V.d:
        raise ValueError(f"gaussian has length {g.size}, embedding dimension is {V.d}")
    return V.vectors @ g


def hyperplane_round(V: UnitEmbedding, g) -> Cut:
    """``x_i = +1`` if ``<g, v_i> >= 0`` else ``-1``."""
    return Cut(np.where(_projections(V, g) >= 0.0, 1, -1))


def candidate_set(V: UnitEmbedding, g, eps) -> frozenset:
    """Vertices with ``|<g, v_i>| < eps``."""
    proj = _projections(V, g)
    return frozenset(np.flatnonzero(np.abs(proj) < eps).tolist())


def local_improve(G: WeightedGraph, V: UnitEmbedding, g, x: Cut, eps, order=None):
    """Flip pass over the candidate set, one vertex at a time.

    Parameters
    ----------
    G, V : instance and embedding
    g : array_like
        The rounding Gaussian.
    x : Cut
        Labels from :func:`hyperplane_round` for the same ``g``.
    eps : float
        Candidate threshold.
    order : sequence of int, optional
        Processing order of the candidates; sorted order when omitted. The
        result is the same for every order.

    Returns
    -------
    (Cut, dict)
        Final cut and the local gain ``(2 * sum_{B_i} w_ij - W_i)_+`` of every
        candidate.
    """
    proj = _projections(V, g)
    labels = np.array(x.labels if isinstance(x, Cut) else Cut(x).labels)
    if labels.size != G.n:
        raise ValueError("cut length does not match the graph")
    cand = np.abs(proj) < eps
    S = np.flatnonzero(cand)
    if order is None:
        order = S
    elif sorted(int(i) for i in order) != S.tolist():
        raise ValueError("order must be a permutation of the candidate set")
    gains = {}
    for i in order:
        i = int(i)
        nbrs, w = G.neighbors(i)
        same = (labels[nbrs] == labels[i]) & ~cand[nbrs]
        delta = 2.0 * float(w[same].sum()) - float(w.sum())
        gains[i] = max(delta, 0.0)
        if delta > 0.0:
            labels[i] = -labels[i]
    return Cut(labels), gains


def trial_gaussians(seed, start, count, d):
    """Gaussians of trials ``start .. start+count-1``."""
    return _rng.gaussian_rows(seed, _rng.ROUNDING, start, count, d)


def round_once(G: WeightedGraph, V: UnitEmbedding, cfg: RoundingConfig | None = None, trial=0):
    """One full trial; trial ``t`` uses the ``t``-th Gaussian of the seeded stream."""
    cfg = cfg or RoundingConfig()
    if V.n != G.n:
        raise ValueError("embedding size does not match the graph")
    eps = cfg.resolve_epsilon(V.d)
    g = trial_gaussians(cfg.seed, trial, 1, V.d)[0]
    x = hyperplane_round(V, g)
    S = candidate_set(V, g, eps)
    final, gains = local_improve(G, V, g, x, eps)
    flipped = frozenset(np.flatnonzero(final.labels != x.labels).tolist())
    return RoundingOutcome(
        gaussian=g,
        initial_cut=x,
        candidate_set=S,
        flipped=flipped,
        final_cut=final,
        initial_value=cut_value(G, x),
        final_value=cut_value(G, final),
        gains=gains,
    )


@dataclass
class TrialStatistics:
    """Aggregates over ``trials`` independent rounds."""

    trials: int
    epsilon: float
    initial_values: np.ndarray
    final_values: np.ndarray
    gain_sums: np.ndarray
    candidate_counts: np.ndarray
    edge_cross_counts: np.ndarray
    best_cut: Cut
    best_value: float
    best_trial: int

    @staticmethod
    def _mean_se(x):
        if x.size < 2:
            return float(x.mean()), 0.0
        return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))

    @property
    def mean_initial(self):
        return self._mean_se(self.initial_values)[0]

    @property
    def stderr_initial(self):
        return self._mean_se(self.initial_values)[1]

    @property
    def mean_final(self):
        return self._mean_se(self.final_values)[0]

    @property
    def stderr_final(self):
        return self._mean_se(self.final_values)[1]

    @property
    def improvements(self):
        return self.final_values - self.initial_values

    @property
    def mean_improvement(self):
        return self._mean_se(self.improvements)[0]

    @property
    def stderr_improvement(self):
        return self._mean_se(self.improvements)[1]

    def to_dict(self, per_trial=True):
        out = {
            "trials": self.trials,
            "epsilon": self.epsilon,
            "mean_initial": self.mean_initial,
            "stderr_initial": self.stderr_initial,
            "mean_final": self.mean_final,
            "stderr_final": self.stderr_final,
            "mean_improvement": self.mean_improvement,
            "stderr_improvement": self.stderr_improvement,
            "mean_candidates": float(self.candidate_counts.mean()),
            "best_value": self.best_value,
            "best_trial": self.best_trial,
            "best_cut": self.best_cut.tolist(),
        }
        if per_trial:
            out["initial_values"] = self.initial_values.tolist()
            out["final_values"] = self.final_values.tolist()
        return out


def _iter_trial_blocks(G, V, cfg):
    """Yield ``(start, proj, x0, x1, gains)`` over blocks of trials."""
    eps = cfg.resolve_epsilon(V.d)
    indptr, indices, weights = G.csr
    start = 0
    for g in _rng.iter_gaussian_blocks(cfg.seed, _rng.ROUNDING, cfg.trials, V.d):
        proj = np.ascontiguousarray(g @ V.vectors.T)
        x0, x1, gains = kernels.local_improve_batch(indptr, indices, weights, proj, eps)
        yield start, proj, x0, x1, gains
        start += g.shape[0]


def rounding_trials(G: WeightedGraph, V: UnitEmbedding, cfg: RoundingConfig | None = None):
    """Run ``cfg.trials`` independent rounds; trial ``t`` matches ``round_once(..., trial=t)``."""
    cfg = cfg or RoundingConfig()
    if V.n != G.n:
        raise ValueError("embedding size does not match the graph")
    eps = cfg.resolve_epsilon(V.d)
    T = cfg.trials
    init = np.empty(T)
    final = np.empty(T)
    gsum = np.empty(T)
    ncand = np.empty(T, dtype=np.int64)
    u, v, _ = G.edge_arrays
    cross = np.zeros(u.size, dtype=np.int64)
    best_value, best_trial, best_labels = -1.0, -1, None
    for start, proj, x0, x1, gains in _iter_trial_blocks(G, V, cfg):
        sl = slice(start, start + x0.shape[0])
        init[sl] = cut_values(G, x0)
        final[sl] = cut_values(G, x1)
        gsum[sl] = gains.sum(axis=1)
        ncand[sl] = np.count_nonzero(np.abs(proj) < eps, axis=1)
        cross += np.count_nonzero(x0[:, u] != x0[:, v], axis=0)
        k = int(np.argmax(final[sl]))
        if final[sl][k] > best_value:
            best_value, best_trial, best_labels = float(final[sl][k]), start + k, x1[k].copy()
    return TrialStatistics(
        trials=T,
        epsilon=eps,
        initial_values=init,
        final_values=final,
        gain_sums=gsum,
        candidate_counts=ncand,
        edge_cross_counts=cross,
        best_cut=Cut(best_labels),
        best_value=best_value,
        best_trial=best_trial,
    )


# -- the GW constant --------------------------------------------------------


def gw_ratio(rho):
    """``(arccos(rho)/pi) / ((1 - rho)/2)``, the per-edge rounding ratio."""
    rho = np.asarray(rho, dtype=np.float64)
    return (np.arccos(rho) / np.pi) / ((1.0 - rho) / 2.0)


@lru_cache(maxsize=None)
def _gw_minimum():
    res = minimize_scalar(
        lambda r: float(gw_ratio(r)), bounds=(-1.0, 0.0), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.fun), float(res.x)


def alpha_gw():
    """``min_rho gw_ratio(rho)``, about 0.878567."""
    return _gw_minimum()[0]


def rho_star():
    """The minimizing correlation, about -0.689."""
    return _gw_minimum()[1]


# -- conditional gains ------------------------------------------------------


@dataclass
class ConditionalGainReport:
    """Per-vertex Monte Carlo estimate of ``E[Delta_i | i in S] / W_i``."""

    trials: int
    epsilon: float
    occurrences: np.ndarray
    mean_gain: np.ndarray
    stderr_gain: np.ndarray
    normalized_gain: np.ndarray
    no_data: np.ndarray = field(repr=False)

    def to_dict(self):
        def clean(a):
            return [None if nd else float(x) for x, nd in zip(a, self.no_data)]

        return {
            "trials": self.trials,
            "epsilon": self.epsilon,
            "occurrences": self.occurrences.tolist(),
            "mean_gain": clean(self.mean_gain),
            "stderr_gain": clean(self.stderr_gain),
            "normalized_gain": clean(self.normalized_gain),
            "no_data": np.flatnonzero(self.no_data).tolist(),
        }


def conditional_gain_experiment(G: WeightedGraph, V: UnitEmbedding, cfg=None):
    """Average local gain of each vertex over the trials in which it is a candidate.

    Vertices never in the candidate set are flagged ``no_data`` and carry NaN.
    The normalized gain divides by ``W_i`` and is 0 for isolated vertices.
    """
    cfg = cfg or RoundingConfig()
    eps = cfg.resolve_epsilon(V.d)
    n = G.n
    occ = np.zeros(n, dtype=np.int64)
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    for _, proj, _, _, gains in _iter_trial_blocks(G, V, cfg):
        occ += np.count_nonzero(np.abs(proj) < eps, axis=0)
        s1 += gains.sum(axis=0)
        s2 += (gains * gains).sum(axis=0)
    no_data = occ == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(no_data, np.nan, s1 / np.maximum(occ, 1))
        var = np.where(occ > 1, (s2 - occ * mean**2) / np.maximum(occ - 1, 1), 0.0)
        se = np.where(no_data, np.nan, np.sqrt(np.maximum(var, 0.0) / np.maximum(occ, 1)))
        W = vertex_weights(G)
        norm = np.where(no_data, np.nan, np.where(W > 0, mean / np.where(W > 0, W, 1.0), 0.0))
    return ConditionalGainReport(cfg.trials, eps, occ, mean, se, norm, no_data)


# -- constructed instance ---------------------------------------------------


def star_instance(leaves, d=2):
    """Star graph with an embedding on which local improvement visibly helps.

    The center gets ``e_1`` and every leaf gets ``e_2``. Whenever
    ``|g_1| < eps <= |g_2|`` the center is the only candidate, all leaves are
    non-candidates with a common label, and half the time that label equals
    the center's, so the center flips and gains ``leaves``.
    """
    from .graph import star_graph

    if d < 2:
        raise ValueError("the construction needs d >= 2")
    V = np.zeros((leaves + 1, d))
    V[0, 0] = 1.0
    V[1:, 1] = 1.0
    return star_graph(leaves), UnitEmbedding(V)
