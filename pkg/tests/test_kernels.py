"""The compiled kernels and the numpy fallback agree."""
import numpy as np
import pytest

from lowdim_maxcut import kernels
from lowdim_maxcut.graph import random_graph

IMPLS = kernels.implementations()

pytestmark = pytest.mark.skipif("compiled" not in IMPLS, reason="extension not built")


def unit_rows(rng, n, d):
    V = rng.standard_normal((n, d))
    return V / np.linalg.norm(V, axis=1)[:, None]


@pytest.mark.parametrize("n", [1, 2, 5, 11])
def test_maxcut_enumerate(rng, n):
    W = np.ascontiguousarray(random_graph(n, 0.6, rng, weighted=True).adjacency)
    a = IMPLS["compiled"].maxcut_enumerate(W)
    b = IMPLS["pure"].maxcut_enumerate(W)
    assert a[0] == pytest.approx(b[0], abs=1e-12)
    x = a[1].astype(float)
    assert 0.25 * (W.sum() - x @ W @ x) == pytest.approx(a[0])


@pytest.mark.parametrize("n, d", [(3, 2), (9, 3), (14, 2)])
def test_triangle_terms(rng, n, d):
    R = np.ascontiguousarray(unit_rows(rng, n, d) @ unit_rows(rng, n, d).T.clip(-1, 1))
    R = (R + R.T) / 2
    a = IMPLS["compiled"].triangle_terms(R, True)
    b = IMPLS["pure"].triangle_terms(R, True)
    assert a[0] == pytest.approx(b[0], rel=1e-12, abs=1e-14)
    assert np.allclose(a[1], b[1], atol=1e-12)
    assert a[2] == pytest.approx(b[2])
    assert a[3] == b[3]


def test_triangle_terms_subset(rng):
    V = unit_rows(rng, 10, 2)
    R = np.ascontiguousarray(V @ V.T)
    tri = np.array([[0, 1, 2], [3, 5, 9], [1, 4, 8]])
    a = IMPLS["compiled"].triangle_terms(R, True, tri)
    b = IMPLS["pure"].triangle_terms(R, True, tri)
    assert a[0] == pytest.approx(b[0]) and np.allclose(a[1], b[1])


def test_triangle_gradient_is_derivative(rng):
    # the penalty reads the upper triangle; grad[i, j] = grad[j, i] is d pen / d rho_ij
    V = unit_rows(rng, 6, 2)
    R = V @ V.T
    for impl in IMPLS.values():
        pen, grad, _, _ = impl.triangle_terms(np.ascontiguousarray(R), True)
        E = np.zeros_like(R)
        E[1, 4] = E[4, 1] = 1.0
        h = 1e-6
        up = impl.triangle_terms(np.ascontiguousarray(R + h * E), False)[0]
        dn = impl.triangle_terms(np.ascontiguousarray(R - h * E), False)[0]
        assert (up - dn) / (2 * h) == pytest.approx(grad[1, 4], rel=1e-5, abs=1e-8)


def test_triangle_violations(rng):
    V = unit_rows(rng, 9, 2)
    R = np.ascontiguousarray(V @ V.T)
    a = IMPLS["compiled"].triangle_violations(R, 0.0)
    b = IMPLS["pure"].triangle_violations(R, 0.0)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("eps", [0.0, 0.3, np.inf])
def test_local_improve_batch(rng, eps):
    G = random_graph(25, 0.3, rng, weighted=True)
    ip, ix, w = G.csr
    P = rng.standard_normal((40, 25))
    P[0, 3] = 0.0
    for x, y in zip(
        IMPLS["compiled"].local_improve_batch(ip, ix, w, P, eps),
        IMPLS["pure"].local_improve_batch(ip, ix, w, P, eps),
    ):
        assert np.allclose(x, y)


def test_sign_moment_sums(rng):
    g = rng.standard_normal((3000, 4))
    V = unit_rows(rng, 15, 4)
    w = rng.random(15)
    a = IMPLS["compiled"].sign_moment_sums(g, V, w)
    b = IMPLS["pure"].sign_moment_sums(g, V, w)
    assert np.allclose(a, b, rtol=1e-12)


def test_backend_name():
    assert kernels.BACKEND in IMPLS
