# cython: language_level=3
"""Compiled hot loops.

Every function here has a numpy twin in ``_pure`` with the same signature and
the same results (up to floating-point summation order).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef extern from *:
    int __builtin_ctzll(unsigned long long x) nogil


def maxcut_enumerate(const double[:, ::1] W):
    """Exact max cut of a dense symmetric weight matrix by Gray-code enumeration.

    The last vertex is pinned to +1, so 2**(n-1) cuts are visited and each
    step flips a single vertex.
    """
    cdef Py_ssize_t n = W.shape[0]
    cdef Py_ssize_t m, i, j
    cdef unsigned long long t, total, gray, best_gray = 0
    cdef double value = 0.0, best = 0.0, delta
    labels = np.ones(n, dtype=np.int8)
    if n <= 1:
        return 0.0, labels
    m = n - 1
    cdef signed char[::1] x = np.ones(n, dtype=np.int8)
    total = (<unsigned long long>1) << m
    with nogil:
        for t in range(1, total):
            i = __builtin_ctzll(t)
            delta = 0.0
            for j in range(n):
                delta += W[i, j] * x[j]
            value += delta * x[i]
            x[i] = -x[i]
            if value > best:
                best = value
                best_gray = t ^ (t >> 1)
    gray = best_gray
    for i in range(m):
        if (gray >> i) & 1:
            labels[i] = -1
    return best, labels


cdef inline void _accum(double s, double b1, double b2,
                        Py_ssize_t i, Py_ssize_t j, Py_ssize_t k,
                        double[:, ::1] grad, bint want_grad,
                        double *pen, double *worst, Py_ssize_t *count) noexcept nogil:
    if s < 0.0:
        pen[0] += s * s
        count[0] += 1
        if -s > worst[0]:
            worst[0] = -s
        if want_grad:
            grad[i, j] -= 2.0 * s * b1
            grad[j, i] -= 2.0 * s * b1
            grad[j, k] -= 2.0 * s * b2
            grad[k, j] -= 2.0 * s * b2
            grad[i, k] += 2.0 * s * b1 * b2
            grad[k, i] += 2.0 * s * b1 * b2


cdef inline void _triple(const double[:, ::1] rho, Py_ssize_t i, Py_ssize_t j,
                         Py_ssize_t k, double[:, ::1] grad, bint want_grad,
                         double *pen, double *worst, Py_ssize_t *count) noexcept nogil:
    cdef double rij = rho[i, j], rjk = rho[j, k], rik = rho[i, k]
    _accum(1.0 - rij - rjk + rik, 1.0, 1.0, i, j, k, grad, want_grad, pen, worst, count)
    _accum(1.0 - rij + rjk - rik, 1.0, -1.0, i, j, k, grad, want_grad, pen, worst, count)
    _accum(1.0 + rij - rjk - rik, -1.0, 1.0, i, j, k, grad, want_grad, pen, worst, count)
    _accum(1.0 + rij + rjk + rik, -1.0, -1.0, i, j, k, grad, want_grad, pen, worst, count)


def triangle_terms(const double[:, ::1] rho, bint want_grad=True, triples=None):
    """Squared-violation penalty of the triangle inequalities and its gradient in rho.

    Returns ``(penalty, grad, worst, count)``; ``grad`` is ``None`` unless
    requested. ``triples`` (rows ``i < j < k``) restricts the scan to a subset.
    """
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t i, j, k, r
    cdef double pen = 0.0, worst = 0.0
    cdef Py_ssize_t count = 0
    cdef const cnp.int64_t[:, ::1] tri
    g = np.zeros((n, n)) if want_grad else np.zeros((1, 1))
    cdef double[:, ::1] grad = g
    if triples is None:
        with nogil:
            for i in range(n):
                for j in range(i + 1, n):
                    for k in range(j + 1, n):
                        _triple(rho, i, j, k, grad, want_grad, &pen, &worst, &count)
    else:
        tri = np.ascontiguousarray(triples, dtype=np.int64)
        with nogil:
            for r in range(tri.shape[0]):
                _triple(rho, tri[r, 0], tri[r, 1], tri[r, 2], grad, want_grad,
                        &pen, &worst, &count)
    return pen, (g if want_grad else None), worst, count


def triangle_violations(const double[:, ::1] rho, double tol):
    """Rows ``(i, j, k, b1, b2, slack)`` for every constraint with slack < -tol."""
    cdef Py_ssize_t n = rho.shape[0]
    cdef Py_ssize_t i, j, k, p
    cdef double rij, rjk, rik, s
    cdef double b1s[4]
    cdef double b2s[4]
    b1s[:] = [1.0, 1.0, -1.0, -1.0]
    b2s[:] = [1.0, -1.0, 1.0, -1.0]
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                rij = rho[i, j]
                rjk = rho[j, k]
                rik = rho[i, k]
                for p in range(4):
                    s = 1.0 - b1s[p] * rij - b2s[p] * rjk + b1s[p] * b2s[p] * rik
                    if s < -tol:
                        rows.append((i, j, k, b1s[p], b2s[p], s))
    if not rows:
        return np.zeros((0, 6))
    return np.array(rows, dtype=np.float64)


def local_improve_batch(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                        const double[::1] weights, const double[:, ::1] proj,
                        double eps):
    """Hyperplane labels plus one conservative flip pass, for a batch of trials.

    ``proj[t, i]`` is the projection of vertex i on trial t's Gaussian.
    Returns ``(initial, final, gains)``; ``gains[t, i]`` is the local gain of
    candidate i (zero for non-candidates).
    """
    cdef Py_ssize_t T = proj.shape[0], n = proj.shape[1]
    cdef Py_ssize_t t, i, e, j
    cdef double same, wi
    x0_arr = np.empty((T, n), dtype=np.int8)
    x1_arr = np.empty((T, n), dtype=np.int8)
    gain_arr = np.zeros((T, n))
    cdef signed char[:, ::1] x0 = x0_arr
    cdef signed char[:, ::1] x1 = x1_arr
    cdef double[:, ::1] gains = gain_arr
    with nogil:
        for t in range(T):
            for i in range(n):
                x0[t, i] = 1 if proj[t, i] >= 0.0 else -1
                x1[t, i] = x0[t, i]
            for i in range(n):
                if not fabs(proj[t, i]) < eps:
                    continue
                same = 0.0
                wi = 0.0
                for e in range(indptr[i], indptr[i + 1]):
                    j = indices[e]
                    wi += weights[e]
                    if x0[t, j] == x0[t, i] and not fabs(proj[t, j]) < eps:
                        same += weights[e]
                if 2.0 * same - wi > 0.0:
                    gains[t, i] = 2.0 * same - wi
                    x1[t, i] = -x0[t, i]
    return x0_arr, x1_arr, gain_arr


def sign_moment_sums(const double[:, ::1] gauss, const double[:, ::1] vectors,
                     const double[::1] weights):
    """Sums of Y and Y**2 over samples, with Y = (sum_i w_i sgn<g, v_i>)**2."""
    cdef Py_ssize_t S = gauss.shape[0], d = gauss.shape[1], n = vectors.shape[0]
    cdef Py_ssize_t s, i, a
    cdef double dot, x, y, sy = 0.0, syy = 0.0
    with nogil:
        for s in range(S):
            x = 0.0
            for i in range(n):
                dot = 0.0
                for a in range(d):
                    dot += gauss[s, a] * vectors[i, a]
                x += weights[i] if dot >= 0.0 else -weights[i]
            y = x * x
            sy += y
            syy += y * y
    return sy, syy
