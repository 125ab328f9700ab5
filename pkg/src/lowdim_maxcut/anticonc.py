"""Second moment of a signed sum of Gaussian signs, and its lower bounds.

For unit vectors ``v_i`` with weights ``w_i``, ``X = sum_i w_i sgn(<g, v_i>)``
has

    E[X^2] = (2/pi) sum_{i,j} w_i w_j arcsin(rho_ij)
           = (2/pi) sum_k c_k S_{2k+1},      S_p = sum_{i,j} w_i w_j rho_ij^p,

with ``c_k = (2k)! / (4^k (k!)^2 (2k+1))``. Every ``S_p`` with odd ``p`` is a
squared tensor norm, so any single term is a lower bound. The certificates
below bound one such term from below when all ``rho_ij >= -0.9``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _rng, kernels
from .embedding import UnitEmbedding

CLAMP_TOL = 1e-12
ADMISSIBLE_RHO = -0.9
NET_TAU = 0.98
P_MAX_CAP = 1001


@dataclass(frozen=True, eq=False)
class SignConfiguration:
    """Unit vectors plus nonnegative weights (all ones by default)."""

    embedding: UnitEmbedding
    weights: np.ndarray | None = None

    def __post_init__(self):
        n = self.embedding.n
        w = np.ones(n) if self.weights is None else np.array(self.weights, dtype=np.float64)
        if w.shape != (n,):
            raise ValueError(f"expected {n} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_vectors(cls, vectors, weights=None):
        return cls(UnitEmbedding.normalized(vectors), weights)

    @property
    def n(self):
        return self.embedding.n

    @property
    def d(self):
        return self.embedding.d

    @property
    def total_weight(self):
        return float(self.weights.sum())

    @cached_property
    def rho(self):
        """Gram matrix of the renormalized vectors, clamped to [-1, 1].

        Entries may exceed 1 in magnitude by at most ``CLAMP_TOL``.
        """
        V = self.embedding.vectors
        V = V / np.linalg.norm(V, axis=1)[:, None]
        R = V @ V.T
        excess = np.abs(R).max(initial=0.0) - 1.0
        if excess > CLAMP_TOL:
            raise ValueError(f"inner product exceeds 1 by {excess:.3g}")
        R = np.clip(R, -1.0, 1.0)
        np.fill_diagonal(R, 1.0)
        R.setflags(write=False)
        return R

    @property
    def min_rho(self):
        """Smallest off-diagonal inner product (1 when n < 2)."""
        if self.n < 2:
            return 1.0
        R = self.rho
        return float(R[~np.eye(self.n, dtype=bool)].min())

    @property
    def admissible(self):
        return self.min_rho >= ADMISSIBLE_RHO

    def duplicated(self):
        """Unweighted configuration repeating ``v_i`` ``w_i`` times (integer weights)."""
        w = self.weights
        if not np.all(w == np.round(w)):
            raise ValueError("duplication needs integer weights")
        rows = np.repeat(self.embedding.vectors, w.astype(np.int64), axis=0)
        return SignConfiguration(UnitEmbedding(rows))


def sheppard(rho):
    """``E[sgn(Y) sgn(Z)] = (2/pi) arcsin(rho)`` for correlation ``rho``."""
    r = np.asarray(rho, dtype=np.float64)
    if np.any(np.abs(r) > 1.0 + CLAMP_TOL):
        raise ValueError("correlation outside [-1, 1]")
    out = (2.0 / np.pi) * np.arcsin(np.clip(r, -1.0, 1.0))
    return float(out) if out.ndim == 0 else out


def exact_second_moment(cfg: SignConfiguration):
    """``(2/pi) * sum_{i,j} w_i w_j arcsin(rho_ij)``."""
    w = cfg.weights
    return float((2.0 / np.pi) * (w @ np.arcsin(cfg.rho) @ w))


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    samples: int

    def to_dict(self):
        return {"estimate": self.estimate, "stderr": self.stderr, "samples": self.samples}


def mc_second_moment(cfg: SignConfiguration, samples, seed=_rng.DEFAULT_SEED, key=()):
    """Monte Carlo mean of ``X**2`` over ``samples`` seeded Gaussians.

    Sample ``s`` is row ``s`` of the seeded stream, so the estimate does not
    depend on how the work is blocked.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    V = np.ascontiguousarray(cfg.embedding.vectors)
    w = np.ascontiguousarray(cfg.weights)
    sy = syy = 0.0
    for g in _rng.iter_gaussian_blocks(seed, _rng.MOMENT, samples, cfg.d, *key):
        a, b = kernels.sign_moment_sums(np.ascontiguousarray(g), V, w)
        sy += a
        syy += b
    mean = sy / samples
    if samples > 1:
        var = max(syy - samples * mean * mean, 0.0) / (samples - 1)
        se = math.sqrt(var / samples)
    else:
        se = 0.0
    return MCEstimate(mean, se, samples)


def arcsin_coeff(k, exact=False):
    """``c_k = (2k)! / (4^k (k!)^2 (2k+1))``; a ``Fraction`` when ``exact``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if exact:
        return Fraction(math.comb(2 * k, k), 4**k * (2 * k + 1))
    return math.exp(log_arcsin_coeff(k))


def log_arcsin_coeff(k):
    return (
        math.lgamma(2 * k + 1) - k * math.log(4.0) - 2 * math.lgamma(k + 1) - math.log(2 * k + 1)
    )


def _signed_powers(R, p):
    """``R**p`` entrywise as ``sign * exp(p * log|R|)``; zero stays zero."""
    absR = np.abs(R)
    with np.errstate(divide="ignore"):
        mag = np.exp(p * np.log(absR))
    sign = np.sign(R) if p % 2 else np.ones_like(R)
    return np.where(absR == 0.0, 0.0 if p else 1.0, sign * mag)


def power_sum(cfg: SignConfiguration, p):
    """``S_p = sum_{i,j} w_i w_j rho_ij**p``."""
    if p < 0 or int(p) != p:
        raise ValueError("p must be a nonnegative integer")
    w = cfg.weights
    return float(w @ _signed_powers(cfg.rho, int(p)) @ w)


# -- certificates -----------------------------------------------------------


@dataclass(frozen=True)
class MomentCertificate:
    """One power-series term as a lower bound on ``E[X^2]``.

    ``moment_bound = (2/pi) * coefficient * power_sum``. ``power_sum_bound``
    is the guaranteed lower bound on ``S_p`` for admissible configurations;
    ``holds`` compares the two (``None`` when no configuration was given).
    """

    kind: str
    d: int
    p: int
    coefficient: float
    power_sum_bound: float
    power_sum: float | None = None
    moment_bound: float | None = None
    admissible: bool | None = None

    @property
    def holds(self):
        if self.power_sum is None:
            return None
        return self.power_sum >= self.power_sum_bound

    @property
    def guaranteed_moment_bound(self):
        """``(2/pi) * c_k * power_sum_bound``, the bound implied for any admissible input."""
        return (2.0 / math.pi) * self.coefficient * self.power_sum_bound

    def to_dict(self):
        return {
            "kind": self.kind,
            "d": self.d,
            "p": self.p,
            "coefficient": self.coefficient,
            "power_sum": self.power_sum,
            "power_sum_bound": self.power_sum_bound,
            "moment_bound": self.moment_bound,
            "guaranteed_moment_bound": self.guaranteed_moment_bound,
            "admissible": self.admissible,
            "holds": self.holds,
        }


def net_constant(tau=NET_TAU):
    """``c = ln(2 * 21**2) / ln(tau / 0.9)``, about 79.64 at ``tau = 0.98``."""
    return math.log(2 * 21**2) / math.log(tau / 0.9)


def net_degree(d):
    return 2 * math.ceil(net_constant() * d) + 1


def _certificate(kind, d, p, scale, bound_factor, cfg):
    coeff = arcsin_coeff((p - 1) // 2)
    bound = scale * bound_factor
    if cfg is None:
        return MomentCertificate(kind, d, p, coeff, bound)
    S = power_sum(cfg, p)
    return MomentCertificate(
        kind, d, p, coeff, bound, S, (2.0 / math.pi) * coeff * S, cfg.admissible
    )


def net_certificate(d, cfg: SignConfiguration | None = None):
    """Degree ``p = 2 ceil(c d) + 1`` with ``S_p >= W**2 * 0.9**p``.

    Without a configuration only the constants are filled in, with ``W = 1``.
    """
    d = int(cfg.d if cfg is not None and d is None else d)
    p = net_degree(d)
    scale = 1.0 if cfg is None else cfg.total_weight**2
    return _certificate("net", d, p, scale, 0.9**p, cfg)


def matrix_degree(d):
    return 100 * d + 1


def matrix_certificate(cfg: SignConfiguration, d=None):
    """Degree ``p = 100 d + 1`` with ``S_p >= W**2 / 2**(9d + 2)``."""
    d = cfg.d if d is None else int(d)
    p = matrix_degree(d)
    return _certificate("matrix", d, p, cfg.total_weight**2, 2.0 ** (-(9 * d + 2)), cfg)


@dataclass(frozen=True)
class PsdSumResult:
    holds: bool
    lhs: float
    rhs: float
    preconditions_met: bool
    failed_preconditions: tuple = ()

    def to_dict(self):
        return {
            "holds": self.holds,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "preconditions_met": self.preconditions_met,
            "failed_preconditions": list(self.failed_preconditions),
        }


def numeric_rank(A, tol=1e-9):
    ev = np.linalg.eigvalsh(A)
    return int(np.count_nonzero(ev > tol * max(1.0, ev.max(initial=0.0))))


def psd_sum_check(A, D, delta, tol=1e-9):
    """Check ``sum_{ij} A_ij >= n**2 / (2 (D + 1))``.

    The preconditions (symmetric PSD, unit diagonal, rank at most ``D``,
    off-diagonal entries at least ``-delta``, ``delta * D <= 1/2``) are
    checked and reported; the inequality is evaluated either way.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    failed = []
    if A.shape != (n, n) or not np.allclose(A, A.T, atol=tol):
        failed.append("symmetric")
    ev = np.linalg.eigvalsh((A + A.T) / 2)
    scale = max(1.0, ev.max(initial=0.0))
    if ev.size and ev.min() < -tol * scale:
        failed.append("psd")
    if np.any(np.abs(np.diag(A) - 1.0) > tol):
        failed.append("unit_diagonal")
    if int(np.count_nonzero(ev > tol * scale)) > D:
        failed.append("rank")
    if n > 1 and A[~np.eye(n, dtype=bool)].min() < -delta - tol:
        failed.append("entry_lower_bound")
    if delta * D > 0.5:
        failed.append("delta_times_D")
    lhs = float(A.sum())
    rhs = n * n / (2.0 * (D + 1))
    return PsdSumResult(lhs >= rhs, lhs, rhs, not failed, tuple(failed))


@dataclass(frozen=True)
class HadamardRankResult:
    numeric_rank: int
    bound: int
    min_eigenvalue: float
    psd_tol: float

    @property
    def holds(self):
        return self.numeric_rank <= self.bound and self.min_eigenvalue >= -self.psd_tol

    def to_dict(self):
        return {
            "numeric_rank": self.numeric_rank,
            "bound": self.bound,
            "min_eigenvalue": self.min_eigenvalue,
            "holds": self.holds,
        }


def hadamard_rank_check(V: UnitEmbedding, p, tol=1e-9, psd_tol=1e-8):
    """Rank of the entrywise ``p``-th power of the Gram matrix versus ``C(d+p-1, p)``."""
    G = _signed_powers(SignConfiguration(V).rho, int(p))
    ev = np.linalg.eigvalsh(G)
    rank = int(np.count_nonzero(ev > tol * max(1.0, ev.max(initial=0.0))))
    return HadamardRankResult(rank, math.comb(V.d + p - 1, p), float(ev.min()), psd_tol)


# -- combined report --------------------------------------------------------


def default_p_max(d):
    return min(2 * math.ceil(80 * d) + 1, P_MAX_CAP)


@dataclass
class LowerBoundReport:
    exact: float
    best_p: int
    best_termwise: float
    termwise: dict
    net: MomentCertificate
    matrix: MomentCertificate
    admissible: bool
    min_rho: float

    @property
    def dominated(self):
        """Exact moment is at least every termwise and certificate bound."""
        slack = 1e-12 * max(1.0, abs(self.exact))
        bounds = [self.best_termwise, self.net.moment_bound, self.matrix.moment_bound]
        return all(self.exact >= b - slack for b in bounds)

    @property
    def passed(self):
        ok = self.dominated
        if self.admissible:
            ok = ok and self.net.holds and self.matrix.holds
        return bool(ok)

    def to_dict(self, full=False):
        out = {
            "exact_second_moment": self.exact,
            "min_rho": self.min_rho,
            "admissible": self.admissible,
            "best_p": self.best_p,
            "best_termwise_bound": self.best_termwise,
            "net_certificate": self.net.to_dict(),
            "matrix_certificate": self.matrix.to_dict(),
            "dominated": self.dominated,
            "passed": self.passed,
        }
        if full:
            out["termwise"] = {str(p): v for p, v in self.termwise.items()}
        return out


def theorem_lower_bound_report(cfg: SignConfiguration, p_max=None):
    """Exact ``E[X^2]`` against every termwise bound and both certificates.

    The termwise bound ``(2/pi) c_k S_{2k+1}`` is evaluated for every odd
    ``p <= p_max`` (default ``min(2 ceil(80 d) + 1, 1001)``).
    """
    p_max = default_p_max(cfg.d) if p_max is None else int(p_max)
    exact = exact_second_moment(cfg)
    termwise = {}
    for p in range(1, p_max + 1, 2):
        termwise[p] = (2.0 / math.pi) * arcsin_coeff((p - 1) // 2) * power_sum(cfg, p)
    best_p = max(termwise, key=termwise.get)
    return LowerBoundReport(
        exact=exact,
        best_p=best_p,
        best_termwise=termwise[best_p],
        termwise=termwise,
        net=net_certificate(cfg.d, cfg),
        matrix=matrix_certificate(cfg),
        admissible=cfg.admissible,
        min_rho=cfg.min_rho,
    )


# -- instance generators ----------------------------------------------------


def random_admissible(n, d, rng, min_rho=ADMISSIBLE_RHO, max_tries=100_000):
    """Unit vectors with pairwise inner products at least ``min_rho``.

    Vectors are drawn uniformly one at a time and redrawn until compatible
    with those already accepted.
    """
    rng = np.random.default_rng(rng)
    out = np.empty((n, d))
    tries = 0
    for i in range(n):
        while True:
            tries += 1
            if tries > max_tries:
                raise RuntimeError("could not draw an admissible configuration")
            v = rng.standard_normal(d)
            norm = np.linalg.norm(v)
            if norm == 0:
                continue
            v /= norm
            if i == 0 or (out[:i] @ v).min() >= min_rho:
                out[i] = v
                break
    return UnitEmbedding(out)
