"""Low-dimensional SDP solutions for Max-Cut.

A solution assigns a unit vector in R^d to every vertex. The relaxation is
strengthened with the l2^2 triangle inequalities

    1 - b1*rho_ij - b2*rho_jk + b1*b2*rho_ik >= 0,   b1, b2 in {+1, -1},

over every triple, where rho is the Gram matrix. For a triple these four
sign patterns are the same four constraints whichever vertex is taken as the
middle one, so each unordered triple ``i < j < k`` is checked once with ``j``
in the middle.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _rng, kernels
from .graph import Cut, cut_value

NORM_TOL = 1e-8
FEAS_TOL = 1e-6
FULL_TRIANGLE_MAX_N = 200


class EmbeddingError(ValueError):
    pass


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True, eq=False)
class UnitEmbedding:
    """``n`` unit vectors in R^d, stored as a read-only ``(n, d)`` array."""

    vectors: np.ndarray
    tol: float = NORM_TOL

    def __post_init__(self):
        V = np.array(self.vectors, dtype=np.float64)
        if V.ndim != 2:
            raise EmbeddingError("vectors must be a 2-D array (n, d)")
        if V.shape[1] < 1:
            raise EmbeddingError("dimension d must be positive")
        if not np.all(np.isfinite(V)):
            raise EmbeddingError("vectors contain non-finite values")
        dev = np.abs(np.linalg.norm(V, axis=1) - 1.0)
        if dev.size and dev.max() > self.tol:
            i = int(np.argmax(dev))
            raise EmbeddingError(f"vector {i} has norm deviating from 1 by {dev[i]:.3g}")
        V.setflags(write=False)
        object.__setattr__(self, "vectors", V)

    @classmethod
    def normalized(cls, vectors):
        """Build from arbitrary nonzero rows by scaling each to unit length."""
        V = np.array(vectors, dtype=np.float64)
        norms = np.linalg.norm(V, axis=1)
        if np.any(norms == 0):
            raise EmbeddingError("cannot normalize a zero vector")
        return cls(V / norms[:, None])

    @classmethod
    def from_cut(cls, x, d=1):
        """The integral embedding ``v_i = x_i * e_1`` in R^d."""
        labels = x.labels if isinstance(x, Cut) else Cut(x).labels
        V = np.zeros((labels.size, d))
        V[:, 0] = labels
        return cls(V)

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def d(self):
        return self.vectors.shape[1]

    def gram(self):
        """Pairwise inner products, clipped to [-1, 1] with an exact unit diagonal."""
        R = np.clip(self.vectors @ self.vectors.T, -1.0, 1.0)
        np.fill_diagonal(R, 1.0)
        return R

    def padded(self, d):
        """The same vectors viewed in a larger ambient dimension."""
        if d < self.d:
            raise EmbeddingError("cannot pad to a smaller dimension")
        V = np.zeros((self.n, d))
        V[:, : self.d] = self.vectors
        return UnitEmbedding(V)


@dataclass
class FeasibilityReport:
    max_norm_deviation: float
    worst_triangle_violation: float
    violating_triples: list = field(default_factory=list)
    violation_count: int = 0

    @property
    def feasible(self):
        return self.worst_triangle_violation == 0.0

    def to_dict(self):
        return {
            "max_norm_deviation": self.max_norm_deviation,
            "worst_triangle_violation": self.worst_triangle_violation,
            "violation_count": self.violation_count,
            "violating_triples": [
                {"i": i, "j": j, "k": k, "signs": [b1, b2], "slack": s}
                for i, j, k, b1, b2, s in self.violating_triples
            ],
        }


def _check_sizes(G, V):
    if V.n != G.n:
        raise ValueError(f"embedding has {V.n} vectors, graph has {G.n} vertices")


def sdp_objective(G, V):
    """``1/2 * sum_{ij in E} w_ij (1 - <v_i, v_j>)``."""
    _check_sizes(G, V)
    u, v, w = G.edge_arrays
    rho = np.einsum("ij,ij->i", V.vectors[u], V.vectors[v])
    return float(0.5 * np.sum(w * (1.0 - rho)))


def check_feasibility(V, tol=FEAS_TOL, limit=1000):
    """Check unit norms and every triangle inequality.

    Constraints with slack below ``-tol`` are reported, worst first, at most
    ``limit`` of them; ``violation_count`` is the full count.
    """
    dev = float(np.max(np.abs(np.linalg.norm(V.vectors, axis=1) - 1.0))) if V.n else 0.0
    rows = kernels.triangle_violations(np.ascontiguousarray(V.gram()), float(tol))
    count = rows.shape[0]
    if count > limit:
        rows = rows[np.argpartition(rows[:, 5], limit - 1)[:limit]]
    rows = rows[np.argsort(rows[:, 5], kind="stable")]
    triples = [
        (int(i), int(j), int(k), int(b1), int(b2), float(s)) for i, j, k, b1, b2, s in rows
    ]
    worst = max(0.0, -triples[0][5]) if triples else 0.0
    return FeasibilityReport(dev, worst, triples, count)


def gram_rank(V, tol=1e-9):
    """Number of Gram eigenvalues above ``tol`` times the largest one."""
    if V.n == 0:
        return 0
    ev = np.linalg.eigvalsh(V.vectors @ V.vectors.T)
    return int(np.count_nonzero(ev > tol * ev.max()))


# -- persistence ------------------------------------------------------------


def save_embedding(V):
    return json.dumps({"d": V.d, "n": V.n, "vectors": V.vectors.tolist()})


def load_embedding(text, tol=NORM_TOL):
    try:
        data = json.loads(text)
        d, n, rows = int(data["d"]), int(data["n"]), data["vectors"]
    except (ValueError, KeyError, TypeError) as exc:
        raise EmbeddingError(f"malformed embedding JSON: {exc}") from None
    if not isinstance(rows, list) or len(rows) != n:
        raise EmbeddingError(f"expected {n} vectors")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != d:
            raise EmbeddingError(f"vector {i} does not have dimension {d}")
    V = np.array(rows, dtype=np.float64).reshape(n, d)
    return UnitEmbedding(V, tol=tol)


# -- solver -----------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    """Projected gradient ascent with a doubling quadratic triangle penalty.

    The penalty weight is ``mu0 * 2**(t // mu_interval)`` at iteration ``t``,
    capped at ``mu_max``. Each step starts at the previous accepted step size
    times ``step_growth`` and backtracks by ``backtrack`` until the penalized
    objective does not decrease.
    """

    max_iters: int = 6000
    step: float = 0.5
    step_growth: float = 2.0
    backtrack: float = 0.5
    max_step: float = 10.0
    min_step: float = 1e-14
    mu0: float = 1.0
    mu_interval: int = 100
    mu_max: float = 1e9
    tol: float = 1e-10
    feas_tol: float = FEAS_TOL
    triangle: bool = True
    sample_triples: int = 200_000
    seed: int = _rng.DEFAULT_SEED

    def __post_init__(self):
        for name in ("max_iters", "step", "step_growth", "max_step", "min_step", "mu0",
                     "mu_interval", "mu_max", "tol", "feas_tol", "sample_triples"):
            if not getattr(self, name) > 0:
                raise ValueError(f"SolverConfig.{name} must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("SolverConfig.backtrack must lie in (0, 1)")


@dataclass
class LowRankSolution:
    embedding: UnitEmbedding
    objective: float
    worst_violation: float
    converged: bool
    iterations: int
    mu: float
    history: list = field(default_factory=list)

    def to_dict(self):
        return {
            "objective": self.objective,
            "worst_violation": self.worst_violation,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_mu": self.mu,
        }


class _Penalized:
    """Objective, triangle penalty and Euclidean gradients at a point."""

    def __init__(self, G, triangle, sample, rng):
        self.A = np.asarray(G.adjacency)
        self.triangle = triangle and G.n >= 3
        self.sample = sample
        self.rng = rng
        self.triples = None

    def resample(self):
        if self.sample is None:
            return
        n = self.A.shape[0]
        t = np.sort(
            np.array([self.rng.choice(n, 3, replace=False) for _ in range(self.sample)]), axis=1
        )
        self.triples = np.unique(t, axis=0)

    def __call__(self, V, mu, want_grad=True):
        R = V @ V.T
        f = 0.25 * float(np.sum(self.A * (1.0 - R)))
        if self.triangle:
            pen, dR, worst, _ = kernels.triangle_terms(
                np.ascontiguousarray(R), want_grad, self.triples
            )
        else:
            pen, dR, worst = 0.0, None, 0.0
        grad = None
        if want_grad:
            M = -0.5 * self.A
            if dR is not None:
                M = M - mu * dR
            grad = M @ V
        return f, pen, worst, grad


def _normalize_rows(V):
    return V / np.linalg.norm(V, axis=1)[:, None]


def _flip_ascent(G, x):
    """Single-vertex flip ascent; in d = 1 the unit sphere is {+1, -1}."""
    A = np.asarray(G.adjacency)
    x = x.astype(np.float64)
    history = []
    while True:
        history.append(cut_value(G, Cut(x)))
        gain = x * (A @ x)
        i = int(np.argmax(gain))
        if gain[i] <= 0:
            return x, history
        x[i] = -x[i]


def solve_low_rank(G, d, cfg=None, init=None):
    """Find a rank-``d`` solution of the (triangle-strengthened) Max-Cut SDP.

    A heuristic: ascent on the product of unit spheres for
    ``sdp_objective - mu * sum(violation**2)``. The returned embedding is the
    best iterate whose worst triangle violation is within ``cfg.feas_tol``
    (or the least violated iterate if none is). A
    :class:`ConvergenceWarning` is issued when ``cfg.max_iters`` runs out.

    Parameters
    ----------
    G : WeightedGraph
    d : int
        Target dimension, at least 1.
    cfg : SolverConfig, optional
    init : UnitEmbedding or array, optional
        Starting point; random unit vectors when omitted.
    """
    cfg = cfg or SolverConfig()
    if d < 1:
        raise ValueError("d must be at least 1")
    rng = _rng.substream(cfg.seed, _rng.SOLVER)
    if init is None:
        V = _normalize_rows(rng.standard_normal((G.n, d))) if G.n else np.zeros((0, d))
    else:
        V = np.array(init.vectors if isinstance(init, UnitEmbedding) else init, dtype=float)
        if V.shape != (G.n, d):
            raise ValueError(f"initial embedding must have shape ({G.n}, {d})")
        V = _normalize_rows(V)

    if G.n == 0:
        return LowRankSolution(UnitEmbedding(np.zeros((0, d))), 0.0, 0.0, True, 0, 0.0)
    if d == 1:
        x, history = _flip_ascent(G, np.where(V[:, 0] >= 0, 1.0, -1.0))
        emb = UnitEmbedding(x.reshape(-1, 1))
        return LowRankSolution(emb, sdp_objective(G, emb), 0.0, True, len(history), 0.0, history)

    sample = cfg.sample_triples if G.n > FULL_TRIANGLE_MAX_N else None
    F_eval = _Penalized(G, cfg.triangle, sample, rng)
    F_eval.resample()

    def feasible(worst):
        return worst <= cfg.feas_tol

    mu = cfg.mu0
    f, pen, worst, grad = F_eval(V, mu)
    F = f - mu * pen
    best = (feasible(worst), f if feasible(worst) else -worst, V)
    step = cfg.step
    history = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if it % cfg.mu_interval == 0:
            F_eval.resample()
            mu = min(mu * 2.0, cfg.mu_max)
            f, pen, worst, grad = F_eval(V, mu)
            F = f - mu * pen
        tangent = grad - np.sum(grad * V, axis=1)[:, None] * V
        eta = min(step * cfg.step_growth, cfg.max_step)
        accepted = False
        while eta >= cfg.min_step:
            Vn = _normalize_rows(V + eta * tangent)
            fn, pn, wn, _ = F_eval(Vn, mu, want_grad=False)
            Fn = fn - mu * pn
            if Fn >= F:
                accepted = True
                break
            eta *= cfg.backtrack
        if accepted:
            gain = Fn - F
            V, step = Vn, eta
            f, pen, worst, grad = F_eval(V, mu)
            F = f - mu * pen
        else:
            gain = 0.0
        history.append((it, mu, F, f, worst))
        cand = (feasible(worst), f if feasible(worst) else -worst, V)
        if cand[:2] > best[:2]:
            best = cand
        if gain <= cfg.tol * max(1.0, abs(F)) and feasible(worst):
            converged = True
            break

    V = best[2]
    if sample is not None:
        F_eval.triples = None
    f, _, worst, _ = F_eval(V, mu, want_grad=False)
    if not converged:
        warnings.warn(
            f"solve_low_rank stopped after {cfg.max_iters} iterations "
            f"(worst violation {worst:.3g})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return LowRankSolution(UnitEmbedding(V), f, worst, converged, it, mu, history)
