"""Numpy implementations of the kernels in ``_core.pyx``."""
import itertools
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

_CHUNK = 1 << 15


def maxcut_enumerate(W):
    W = np.ascontiguousarray(W, dtype=np.float64)
    n = W.shape[0]
    labels = np.ones(n, dtype=np.int8)
    if n <= 1:
        return 0.0, labels
    m = n - 1
    half_total = 0.5 * W.sum()
    shifts = np.arange(m, dtype=np.int64)
    best, best_mask = 0.0, 0
    for start in range(0, 1 << m, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, 1 << m), dtype=np.int64)
        X = np.ones((masks.size, n))
        X[:, :m] = 1.0 - 2.0 * ((masks[:, None] >> shifts) & 1)
        values = 0.5 * (half_total - 0.5 * np.einsum("ti,ij,tj->t", X, W, X, optimize=True))
        k = int(np.argmax(values))
        if values[k] > best:
            best, best_mask = float(values[k]), int(masks[k])
    labels[:m] = 1 - 2 * ((best_mask >> shifts) & 1)
    return best, labels


@lru_cache(maxsize=4)
def _all_triples(n):
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), 3)), dtype=np.int64
    )
    i, j, k = flat.reshape(-1, 3).T
    return i, j, k


_PATTERNS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def _slacks(rho, triples):
    if triples is None:
        i, j, k = _all_triples(rho.shape[0])
    else:
        i, j, k = np.asarray(triples, dtype=np.int64).reshape(-1, 3).T
    rij, rjk, rik = rho[i, j], rho[j, k], rho[i, k]
    b1, b2 = _PATTERNS[:, 0], _PATTERNS[:, 1]
    s = 1.0 - rij[:, None] * b1 - rjk[:, None] * b2 + rik[:, None] * (b1 * b2)
    return i, j, k, s


def triangle_terms(rho, want_grad=True, triples=None):
    rho = np.asarray(rho, dtype=np.float64)
    n = rho.shape[0]
    i, j, k, s = _slacks(rho, triples)
    neg = np.minimum(s, 0.0)
    pen = float(np.sum(neg * neg))
    worst = float(max(0.0, -neg.min())) if neg.size else 0.0
    count = int(np.count_nonzero(s < 0.0))
    if not want_grad:
        return pen, None, worst, count
    b1, b2 = _PATTERNS[:, 0], _PATTERNS[:, 1]
    two_s = 2.0 * neg
    g_ij = -(two_s * b1).sum(axis=1)
    g_jk = -(two_s * b2).sum(axis=1)
    g_ik = (two_s * (b1 * b2)).sum(axis=1)
    grad = np.zeros((n, n))
    for a, b, val in ((i, j, g_ij), (j, k, g_jk), (i, k, g_ik)):
        np.add.at(grad, (a, b), val)
        np.add.at(grad, (b, a), val)
    return pen, grad, worst, count


def triangle_violations(rho, tol):
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape[0] < 3:
        return np.zeros((0, 6))
    i, j, k, s = _slacks(rho, None)
    t_idx, p_idx = np.nonzero(s < -tol)
    return np.column_stack(
        [i[t_idx], j[t_idx], k[t_idx], _PATTERNS[p_idx, 0], _PATTERNS[p_idx, 1], s[t_idx, p_idx]]
    ).astype(np.float64)


def local_improve_batch(indptr, indices, weights, proj, eps):
    proj = np.asarray(proj, dtype=np.float64)
    n = proj.shape[1]
    A = sp.csr_matrix((weights, indices, indptr), shape=(n, n))
    x0 = np.where(proj >= 0.0, 1, -1).astype(np.int8)
    cand = np.abs(proj) < eps
    X = x0.astype(np.float64)
    keep = (~cand).astype(np.float64)
    # 2 * sum_{j in B_i} w_ij = sum_j A_ij keep_j (1 + x_i x_j)
    twice_same = (A @ keep.T).T + X * (A @ (X * keep).T).T
    wi = np.asarray(A.sum(axis=1)).ravel()
    gain = twice_same - wi
    flip = cand & (gain > 0.0)
    gains = np.where(flip, gain, 0.0)
    x1 = np.where(flip, -x0, x0).astype(np.int8)
    return x0, x1, gains


def sign_moment_sums(gauss, vectors, weights):
    signs = np.where(np.asarray(gauss) @ np.asarray(vectors).T >= 0.0, 1.0, -1.0)
    y = (signs @ np.asarray(weights)) ** 2
    return float(y.sum()), float((y * y).sum())
