"""Gegenbauer expansion of the penalty ``(t + 0.9)(1 - t)**A``.

Notation, for dimension ``d >= 3``:

* ``w = (d - 3)/2``, ``lambda = (d - 2)/2``;
* ``d sigma(t) = c_d (1 - t^2)**w dt`` on ``[-1, 1]`` with
  ``c_d = Gamma(d/2) / (sqrt(pi) Gamma((d - 1)/2))`` (a probability measure);
* ``P_k = C_k^lambda / C_k^lambda(1)``, so ``P_k(1) = 1``;
* ``I_k(A) = int (1 - t)**A P_k(t) d sigma(t)``, which vanishes for ``k > A``
  and otherwise equals

      c_d (-1)^k (A-k+1)^(k) / (2^k (w+1)^(k)) * 2**(A+k+2w+1) * B(A+w+1, k+w+1)

  with ``x^(k)`` the rising factorial;
* ``delta_k = 1.9 I_k(A) - I_k(A+1)`` at ``A = 10 d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .embedding import UnitEmbedding

T_TOL = 1e-12


@dataclass(frozen=True)
class GegenbauerBasis:
    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ValueError("Gegenbauer basis needs integer d >= 3 (w = (d-3)/2 >= 0)")

    @property
    def w(self):
        return (self.d - 3) / 2.0

    @property
    def lam(self):
        return (self.d - 2) / 2.0

    @property
    def log_c_d(self):
        return (
            math.lgamma(self.d / 2.0) - 0.5 * math.log(math.pi) - math.lgamma((self.d - 1) / 2.0)
        )

    @property
    def c_d(self):
        return math.exp(self.log_c_d)

    def log_C_at_one(self, k):
        """``log C_k^lambda(1) = log(Gamma(k + 2 lambda) / (Gamma(2 lambda) k!))``."""
        two_lam = 2.0 * self.lam
        return math.lgamma(k + two_lam) - math.lgamma(two_lam) - math.lgamma(k + 1)


def harmonic_dimension(d, k):
    """Dimension of degree-``k`` spherical harmonics on the sphere in R^d."""
    if k < 0:
        return 0
    low = math.comb(d + k - 3, k - 2) if k >= 2 else 0
    return math.comb(d + k - 1, k) - low


def _check_t(t):
    t = np.asarray(t, dtype=np.float64)
    if np.any(np.abs(t) > 1.0 + T_TOL):
        raise ValueError("t must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def eval_P_table(basis: GegenbauerBasis, kmax, t):
    """``P_0 .. P_kmax`` at ``t``; shape ``(kmax + 1,) + t.shape``.

    Uses the normalized form of the three-term recurrence,
    ``(k + 2 lambda - 1) P_k = 2 (k + lambda - 1) t P_{k-1} - (k - 1) P_{k-2}``.
    """
    t = _check_t(t)
    lam = basis.lam
    out = np.empty((kmax + 1,) + t.shape)
    out[0] = 1.0
    if kmax >= 1:
        out[1] = t
    for k in range(2, kmax + 1):
        out[k] = (2 * (k + lam - 1) * t * out[k - 1] - (k - 1) * out[k - 2]) / (k + 2 * lam - 1)
    return out


def eval_P(basis: GegenbauerBasis, k, t):
    """Normalized Gegenbauer polynomial ``P_k(t)`` with ``P_k(1) = 1``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    out = eval_P_table(basis, k, t)[k]
    return float(out) if out.ndim == 0 else out


def eval_C(basis: GegenbauerBasis, k, t):
    """Unnormalized ``C_k^lambda(t)``."""
    return eval_P(basis, k, t) * math.exp(basis.log_C_at_one(k))


# -- I_k(A) -----------------------------------------------------------------


def _log_rising(x, k):
    return math.lgamma(x + k) - math.lgamma(x)


def log_abs_I(basis: GegenbauerBasis, k, A):
    """``log |I_k(A)|``; ``-inf`` when ``k > A``."""
    if k < 0 or A < 0:
        raise ValueError("k and A must be nonnegative")
    if k > A:
        return -math.inf
    w = basis.w
    log_beta = math.lgamma(A + w + 1) + math.lgamma(k + w + 1) - math.lgamma(A + k + 2 * w + 2)
    return (
        basis.log_c_d
        + _log_rising(A - k + 1, k)
        - _log_rising(w + 1, k)
        + (A + 2 * w + 1) * math.log(2.0)
        + log_beta
    )


def I_closed(basis: GegenbauerBasis, k, A):
    """Closed form of ``I_k(A)``; exactly 0 for ``k > A``, sign ``(-1)^k`` otherwise."""
    if k > A:
        return 0.0
    return (-1.0) ** k * math.exp(log_abs_I(basis, k, A))


@lru_cache(maxsize=32)
def _mp_nodes(order, dps):
    with mpmath.workdps(dps):
        X, W = mpmath.mp.gauss_quadrature(order, "legendre")
        half_pi = mpmath.pi / 2
        theta = [half_pi * (x + 1) for x in X]
        weights = [half_pi * wt for wt in W]
        return theta, weights


def _mp_P_row(lam, kmax, t):
    row = [mpmath.mpf(1), t]
    for k in range(2, kmax + 1):
        row.append((2 * (k + lam - 1) * t * row[-1] - (k - 1) * row[-2]) / (k + 2 * lam - 1))
    return row[: kmax + 1]


def _mp_estimate(basis, kmax, A, order, dps):
    theta, weights = _mp_nodes(order, dps)
    with mpmath.workdps(dps):
        lam = mpmath.mpf(basis.d - 2) / 2
        c_d = mpmath.gamma(mpmath.mpf(basis.d) / 2) / (
            mpmath.sqrt(mpmath.pi) * mpmath.gamma(mpmath.mpf(basis.d - 1) / 2)
        )
        total = [mpmath.mpf(0)] * (kmax + 1)
        scale = [mpmath.mpf(0)] * (kmax + 1)
        for th, wt in zip(theta, weights):
            t = mpmath.cos(th)
            base = wt * c_d * (1 - t) ** A * mpmath.sin(th) ** (basis.d - 2)
            for k, p in enumerate(_mp_P_row(lam, kmax, t)):
                term = base * p
                total[k] += term
                scale[k] += abs(term)
        return total, scale


def I_quadrature_table(basis: GegenbauerBasis, kmax, A, dps=50, max_order=4096):
    """Quadrature values of ``I_0(A) .. I_kmax(A)``; an oracle independent of :func:`I_closed`.

    With ``t = cos(theta)`` the integrand becomes
    ``c_d (1 - cos th)**A P_k(cos th) sin(th)**(d-2)`` on ``[0, pi]``, which is
    smooth, so Gauss-Legendre at ``dps`` digits is refined by doubling the
    order until successive estimates agree to ``10**-(dps-5)`` of the
    integrand's absolute mass.
    """
    order = 32
    prev, _ = _mp_estimate(basis, kmax, A, order, dps)
    while True:
        order *= 2
        if order > max_order:
            raise RuntimeError("Gauss-Legendre refinement did not converge")
        cur, scale = _mp_estimate(basis, kmax, A, order, dps)
        with mpmath.workdps(dps):
            tol = mpmath.mpf(10) ** (-(dps - 5))
            if all(abs(a - b) <= tol * s for a, b, s in zip(cur, prev, scale)):
                return np.array([float(x) for x in cur])
        prev = cur


def I_quadrature(basis: GegenbauerBasis, k, A, dps=50):
    """Quadrature value of ``I_k(A)``."""
    return float(I_quadrature_table(basis, k, A, dps)[k])


# -- delta_k and ratios -----------------------------------------------------


def penalty_degree(d):
    return 10 * d


def delta_k(d, k):
    """``1.9 I_k(10d) - I_k(10d + 1)``."""
    basis = GegenbauerBasis(d)
    A = penalty_degree(d)
    return 1.9 * I_closed(basis, k, A) - I_closed(basis, k, A + 1)


def log_abs_delta(d, k):
    """``log |delta_k|`` computed without forming the (possibly huge) integrals."""
    basis = GegenbauerBasis(d)
    A = penalty_degree(d)
    if k > A + 1:
        return -math.inf
    hi = log_abs_I(basis, k, A + 1)
    if k > A:
        return hi
    # same signs and |I_k(A+1)| > 1.9 |I_k(A)|, so the difference keeps its sign
    return hi + math.log1p(-1.9 * math.exp(log_abs_I(basis, k, A) - hi))


def ratio_closed(basis: GegenbauerBasis, k, A):
    """``|I_k(A+1)| / |I_k(A)| = 2 ((A+1)/(A+1-k)) ((A+w+1)/(A+k+2w+2))`` for ``k <= A``."""
    w = basis.w
    return 2.0 * ((A + 1) / (A + 1 - k)) * ((A + w + 1) / (A + k + 2 * w + 2))


@dataclass
class RatioReport:
    d: int
    A: int
    ratios: np.ndarray
    ratios_from_I: np.ndarray
    minimum: float
    minimum_bound: float

    @property
    def increasing(self):
        return bool(np.all(np.diff(self.ratios) > 0))

    @property
    def passed(self):
        return (
            self.increasing
            and int(np.argmin(self.ratios)) == 0
            and self.minimum >= self.minimum_bound * (1 - 1e-12)
            and self.minimum > 1.9
            and bool(np.allclose(self.ratios, self.ratios_from_I, rtol=1e-9))
        )

    def to_dict(self):
        return {
            "d": self.d,
            "A": self.A,
            "minimum": self.minimum,
            "minimum_bound": self.minimum_bound,
            "increasing": self.increasing,
            "max_closed_vs_integrals": float(
                np.max(np.abs(self.ratios / self.ratios_from_I - 1.0))
            ),
            "ratios": self.ratios.tolist(),
            "passed": self.passed,
        }


def ratio_table(d, A=None):
    """Ratios ``|I_k(A+1)| / |I_k(A)|`` for ``k = 0 .. A`` (default ``A = 10 d``)."""
    basis = GegenbauerBasis(d)
    A = penalty_degree(d) if A is None else int(A)
    ks = range(A + 1)
    ratios = np.array([ratio_closed(basis, k, A) for k in ks])
    direct = np.array([math.exp(log_abs_I(basis, k, A + 1) - log_abs_I(basis, k, A)) for k in ks])
    w = basis.w
    return RatioReport(d, A, ratios, direct, float(ratios.min()), 1.0 + A / (A + 2 * w + 2))


@dataclass(frozen=True)
class Delta0Bound:
    d: int
    log_abs_delta0: float
    log_bound: float

    @property
    def abs_delta0(self):
        return math.exp(self.log_abs_delta0)

    @property
    def bound(self):
        return math.exp(self.log_bound)

    @property
    def holds(self):
        return self.log_abs_delta0 >= self.log_bound

    def to_dict(self):
        return {
            "d": self.d,
            "abs_delta0": self.abs_delta0,
            "bound": self.bound,
            "log_abs_delta0": self.log_abs_delta0,
            "log_bound": self.log_bound,
            "holds": self.holds,
        }


def delta0_log_bound(d):
    """``log((1/10) (3/2)**(9d+1))``."""
    return -math.log(10.0) + (9 * d + 1) * math.log(1.5)


def delta0_bound(d):
    """``|delta_0|`` against ``(1/10)(3/2)**(9d+1)``, compared in log space."""
    return Delta0Bound(d, log_abs_delta(d, 0), delta0_log_bound(d))


# -- coefficient table ------------------------------------------------------


@dataclass
class CoefficientTable:
    d: int
    A: int
    w: float
    k: np.ndarray
    I_A: np.ndarray
    I_A1: np.ndarray
    delta: np.ndarray

    def sign_violations(self):
        """Indices ``k`` where delta_k breaks the pattern (even < 0, odd > 0, zero past A+1)."""
        bad = []
        for k, dk in zip(self.k, self.delta):
            if k > self.A + 1:
                ok = dk == 0.0
            elif k % 2 == 0:
                ok = dk < 0.0
            else:
                ok = dk > 0.0
            if not ok:
                bad.append(int(k))
        return bad

    @property
    def sign_pattern_ok(self):
        return not self.sign_violations()

    def to_dict(self):
        return {
            "d": self.d,
            "A": self.A,
            "w": self.w,
            "sign_pattern_ok": self.sign_pattern_ok,
            "sign_violations": self.sign_violations(),
            "rows": [
                {"k": int(k), "I_A": a, "I_A1": b, "delta": c}
                for k, a, b, c in zip(self.k, self.I_A, self.I_A1, self.delta)
            ],
        }


def coefficient_table(d, kmax=None):
    """``I_k(10d)``, ``I_k(10d+1)`` and ``delta_k`` for ``k = 0 .. kmax`` (default ``10d + 5``)."""
    basis = GegenbauerBasis(d)
    A = penalty_degree(d)
    kmax = A + 5 if kmax is None else int(kmax)
    ks = np.arange(kmax + 1)
    IA = np.array([I_closed(basis, int(k), A) for k in ks])
    IA1 = np.array([I_closed(basis, int(k), A + 1) for k in ks])
    return CoefficientTable(d, A, basis.w, ks, IA, IA1, 1.9 * IA - IA1)


# -- arcsin expansion and Q -------------------------------------------------


def _theta_rule(nodes):
    x, wts = np.polynomial.legendre.leggauss(nodes)
    return np.pi / 2 * (x + 1), np.pi / 2 * wts


def arcsin_gegenbauer_coeffs(basis: GegenbauerBasis, kmax, nodes=None):
    """``int arcsin(t) P_k(t) d sigma(t)`` for ``k = 0 .. kmax``.

    Gauss-Legendre in ``theta`` with ``t = cos(theta)``, where
    ``arcsin(cos theta) = pi/2 - theta`` and the integrand is smooth.
    """
    nodes = kmax + basis.d + 96 if nodes is None else int(nodes)
    theta, wts = _theta_rule(nodes)
    t = np.cos(theta)
    base = wts * basis.c_d * (np.pi / 2 - theta) * np.sin(theta) ** (basis.d - 2)
    return eval_P_table(basis, kmax, t) @ base


def arcsin_gegenbauer_coeff(basis: GegenbauerBasis, k, nodes=None):
    return float(arcsin_gegenbauer_coeffs(basis, k, nodes)[k])


@dataclass
class QConstruction:
    """``Q(t) = arcsin(t) - C (t + 0.9)(1 - t)**(10d)`` and its Gegenbauer coefficients."""

    d: int
    C: float
    argmin_k: int
    arcsin_coeffs: np.ndarray
    delta: np.ndarray
    q: np.ndarray
    grid_max_excess: float
    quadrature_change: float

    @property
    def q0(self):
        return float(self.q[0])

    @property
    def min_q_positive_k(self):
        return float(self.q[1:].min())

    @property
    def passed(self):
        return (
            self.C > 0
            and self.q0 > 0
            and self.min_q_positive_k >= -1e-9
            and self.grid_max_excess <= 1e-9
        )

    def to_dict(self):
        return {
            "d": self.d,
            "C": self.C,
            "argmin_k": self.argmin_k,
            "q0": self.q0,
            "min_q_k_ge_1": self.min_q_positive_k,
            "grid_max_excess": self.grid_max_excess,
            "quadrature_change_on_doubling": self.quadrature_change,
            "q": self.q.tolist(),
            "passed": self.passed,
        }


def construct_Q(d, grid=2001):
    """Pick ``C = min_{odd k <= 10d+1} c_k / delta_k`` and form ``q_k = c_k - C delta_k``.

    ``c_k`` are the arcsin coefficients from :func:`arcsin_gegenbauer_coeffs`.
    ``grid_max_excess`` is ``max(Q(t) - arcsin(t))`` over ``t`` in ``[-0.9, 1]``.
    """
    basis = GegenbauerBasis(d)
    A = penalty_degree(d)
    K = A + 1
    coeffs = arcsin_gegenbauer_coeffs(basis, K)
    coeffs2 = arcsin_gegenbauer_coeffs(basis, K, nodes=2 * (K + d + 96))
    change = float(np.max(np.abs(coeffs - coeffs2)))
    delta = coefficient_table(d, K).delta
    odd = np.arange(1, K + 1, 2)
    ratios = coeffs[odd] / delta[odd]
    j = int(np.argmin(ratios))
    C = float(ratios[j])
    q = coeffs - C * delta
    q[0] = C * abs(delta[0])
    t = np.linspace(-0.9, 1.0, grid)
    Q = np.arcsin(t) - C * (t + 0.9) * (1.0 - t) ** A
    excess = float(np.max(Q - np.arcsin(t)))
    return QConstruction(d, C, int(odd[j]), coeffs, delta, q, excess, change)


def gegenbauer_moment_bound(d, total_weight=1.0):
    """``(2/pi) q_0 W**2``, implied for admissible configurations in R^d (``d >= 3``)."""
    return (2.0 / math.pi) * construct_Q(d).q0 * total_weight**2


@dataclass(frozen=True)
class KernelSpotCheck:
    d: int
    sums: np.ndarray
    n: int

    @property
    def min_normalized(self):
        return float(self.sums.min() / max(self.n, 1) ** 2)

    @property
    def holds(self):
        return self.min_normalized >= -1e-6

    def to_dict(self):
        return {
            "d": self.d,
            "sums": self.sums.tolist(),
            "min_normalized": self.min_normalized,
            "holds": self.holds,
        }


def kernel_psd_spot_check(V: UnitEmbedding, kmax, d=None):
    """``sum_{ij} P_k(rho_ij)`` for ``k <= kmax`` (nonnegative for a PSD kernel).

    ``d`` defaults to ``max(V.d, 3)``; vectors in R^V.d sit inside R^d.
    """
    d = max(V.d, 3) if d is None else int(d)
    if d < V.d:
        raise ValueError("basis dimension below the embedding dimension")
    basis = GegenbauerBasis(d)
    R = np.clip(V.vectors @ V.vectors.T, -1.0, 1.0)
    sums = eval_P_table(basis, kmax, R).sum(axis=(1, 2))
    return KernelSpotCheck(d, sums, V.n)
